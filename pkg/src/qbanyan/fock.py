"""Sparse multi-photon states over labelled optical modes.

A state is a dictionary from canonical Fock configurations to complex
amplitudes.  Every optical element in this package is expressed either as a
relabelling of modes or as a linear substitution of creation operators
(:func:`apply_mode_map`), so the circuits stay small and exact.

Time bins are plain non-negative integers.  The physical requirement that the
bin spacing exceed both the optical pulse width and the detector dead time is
assumed, not simulated.
"""

from __future__ import annotations

from collections import namedtuple
import itertools
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .exceptions import DomainError, ImpossibleOutcomeError, NormError

PRUNE_THRESHOLD = 1e-12
QUBIT_NORM_TOL = 1e-12
UNITARY_TOL = 1e-10
IMPOSSIBLE_PROBABILITY = 1e-15


class Polarization(IntEnum):
    H = 0
    V = 1

    def flipped(self) -> Polarization:
        return Polarization(1 - self)


H = Polarization.H
V = Polarization.V


class Mode(namedtuple("Mode", "path pol bin")):
    """One optical mode: a spatial path, a polarization and a time bin."""

    __slots__ = ()

    def __new__(cls, path: str, pol, bin: int = 0):
        if not isinstance(path, str) or not path:
            raise ValueError("mode path label must be a non-empty string")
        if int(bin) != bin or bin < 0:
            raise ValueError(f"time bin must be a non-negative integer, got {bin!r}")
        if type(pol) is not Polarization:
            pol = Polarization(pol)
        return super().__new__(cls, path, pol, int(bin))

    def __str__(self) -> str:
        return f"{self.path}:{self.pol.name}@{self.bin}"


class FockConfig:
    """Photon counts per mode, stored as a sorted tuple of ``(mode, count)``."""

    __slots__ = ("occupations", "_hash")

    def __init__(self, occupations: Iterable[tuple[Mode, int]] = ()):
        merged: dict[Mode, int] = {}
        for mode, count in occupations:
            if count < 0:
                raise ValueError("photon counts must be non-negative")
            merged[mode] = merged.get(mode, 0) + int(count)
        self.occupations: tuple[tuple[Mode, int], ...] = tuple(
            sorted((m, n) for m, n in merged.items() if n > 0))
        self._hash = hash(self.occupations)

    @classmethod
    def _distinct(cls, occupations: Iterable[tuple[Mode, int]]) -> FockConfig:
        """Fast constructor for positive counts on pairwise distinct modes."""
        cfg = object.__new__(cls)
        cfg.occupations = tuple(sorted(occupations))
        cfg._hash = hash(cfg.occupations)
        return cfg

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if not isinstance(other, FockConfig):
            return NotImplemented
        return self._hash == other._hash and self.occupations == other.occupations

    def __lt__(self, other: FockConfig) -> bool:
        return self.occupations < other.occupations

    def __repr__(self) -> str:
        return f"FockConfig({self})"

    @classmethod
    def from_modes(cls, modes: Iterable[Mode]) -> FockConfig:
        """One photon per listed mode; repeated modes add up."""
        return cls(tuple((m, 1) for m in modes))

    @classmethod
    def from_counts(cls, counts: Mapping[Mode, int]) -> FockConfig:
        return cls(tuple(counts.items()))

    def as_dict(self) -> dict[Mode, int]:
        return dict(self.occupations)

    def count(self, mode: Mode) -> int:
        for m, n in self.occupations:
            if m == mode:
                return n
        return 0

    @property
    def n_photons(self) -> int:
        return sum(n for _, n in self.occupations)

    @property
    def modes(self) -> tuple[Mode, ...]:
        return tuple(m for m, _ in self.occupations)

    @property
    def paths(self) -> frozenset[str]:
        return frozenset(m.path for m, _ in self.occupations)

    def photons_on(self, path: str, bin: int | None = None) -> int:
        return sum(
            n for m, n in self.occupations
            if m.path == path and (bin is None or m.bin == bin)
        )

    def __str__(self) -> str:
        if not self.occupations:
            return "vac"
        return ",".join(str(m) if n == 1 else f"{m}^{n}" for m, n in self.occupations)


VACUUM_CONFIG = FockConfig()


@dataclass(frozen=True)
class QubitSpec:
    """Polarization qubit ``beta_h |H> + beta_v |V>``."""

    beta_h: complex
    beta_v: complex

    def __post_init__(self):
        object.__setattr__(self, "beta_h", complex(self.beta_h))
        object.__setattr__(self, "beta_v", complex(self.beta_v))
        norm = abs(self.beta_h) ** 2 + abs(self.beta_v) ** 2
        if abs(norm - 1.0) > QUBIT_NORM_TOL:
            raise NormError(f"qubit is not normalized: |beta_h|^2 + |beta_v|^2 = {norm!r}")

    @classmethod
    def normalized(cls, beta_h: complex, beta_v: complex) -> QubitSpec:
        norm = math.sqrt(abs(beta_h) ** 2 + abs(beta_v) ** 2)
        if norm == 0:
            raise NormError("cannot normalize the zero vector")
        return cls(beta_h / norm, beta_v / norm)

    @classmethod
    def random(cls, rng: np.random.Generator) -> QubitSpec:
        z = rng.normal(size=2) + 1j * rng.normal(size=2)
        return cls.normalized(z[0], z[1])

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.beta_h, self.beta_v], dtype=complex)

    def equal_up_to_phase(self, other: QubitSpec, atol: float = 1e-12) -> bool:
        overlap = np.vdot(self.vector, other.vector)
        return bool(abs(abs(overlap) - 1.0) <= atol)


class PhotonicState:
    """Sparse superposition of Fock configurations.

    Instances are treated as immutable; every operation returns a new state.
    The vacuum is the empty configuration with amplitude one.
    """

    __slots__ = ("_terms", "norm_tolerance")

    def __init__(self, terms: Mapping[FockConfig, complex] | None = None,
                 norm_tolerance: float = 1e-9, prune: float = PRUNE_THRESHOLD):
        self._terms = {
            cfg: complex(amp) for cfg, amp in (terms or {}).items() if abs(amp) >= prune
        }
        self.norm_tolerance = norm_tolerance

    @classmethod
    def vacuum(cls) -> PhotonicState:
        return cls({VACUUM_CONFIG: 1.0})

    @classmethod
    def single(cls, *modes: Mode, amplitude: complex = 1.0) -> PhotonicState:
        return cls({FockConfig.from_modes(modes): amplitude})

    @property
    def terms(self) -> dict[FockConfig, complex]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[FockConfig, complex]]:
        return iter(sorted(self._terms.items(), key=lambda kv: kv[0].occupations))

    def amplitude(self, cfg: FockConfig | Iterable[Mode]) -> complex:
        if not isinstance(cfg, FockConfig):
            cfg = FockConfig.from_modes(cfg)
        return self._terms.get(cfg, 0j)

    def __len__(self) -> int:
        return len(self._terms)

    def __contains__(self, cfg: FockConfig) -> bool:
        return cfg in self._terms

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self._terms.values()))

    def is_normalized(self) -> bool:
        return abs(self.norm_squared() - 1.0) <= self.norm_tolerance

    @property
    def paths(self) -> frozenset[str]:
        out: set[str] = set()
        for cfg in self._terms:
            out |= cfg.paths
        return frozenset(out)

    @property
    def modes(self) -> frozenset[Mode]:
        return frozenset(m for cfg in self._terms for m in cfg.modes)

    def photon_numbers(self) -> set[int]:
        return {cfg.n_photons for cfg in self._terms}

    def scaled(self, factor: complex) -> PhotonicState:
        return PhotonicState({c: a * factor for c, a in self._terms.items()}, self.norm_tolerance)

    def allclose(self, other: PhotonicState, atol: float = 1e-12) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0j) - other._terms.get(k, 0j)) <= atol for k in keys)

    def equal_up_to_phase(self, other: PhotonicState, atol: float = 1e-10) -> bool:
        keys = set(self._terms) | set(other._terms)
        overlap = sum(self._terms.get(k, 0j).conjugate() * other._terms.get(k, 0j) for k in keys)
        if abs(overlap) < IMPOSSIBLE_PROBABILITY:
            return False
        phase = overlap / abs(overlap)
        return all(
            abs(self._terms.get(k, 0j) * phase - other._terms.get(k, 0j)) <= atol for k in keys
        )

    def __repr__(self) -> str:
        body = " + ".join(f"({a:.4g})|{c}>" for c, a in self.items())
        return f"PhotonicState({body or '0'})"


def make_qubit_state(path: str, bin: int, q: QubitSpec) -> PhotonicState:
    """One photon on ``path`` at ``bin`` carrying the polarization qubit ``q``."""
    if not isinstance(q, QubitSpec):
        q = QubitSpec(*q)
    return PhotonicState({
        FockConfig._distinct([(Mode(path, H, bin), 1)]): q.beta_h,
        FockConfig._distinct([(Mode(path, V, bin), 1)]): q.beta_v,
    })


def tensor(s1: PhotonicState, s2: PhotonicState) -> PhotonicState:
    """Product state of two states living on disjoint path labels."""
    shared = s1.paths & s2.paths
    if shared:
        raise ValueError(f"cannot tensor states sharing path labels {sorted(shared)}")
    terms: dict[FockConfig, complex] = {}
    for c1, a1 in s1._terms.items():
        for c2, a2 in s2._terms.items():
            cfg = FockConfig._distinct(c1.occupations + c2.occupations)
            terms[cfg] = terms.get(cfg, 0j) + a1 * a2
    return PhotonicState(terms, min(s1.norm_tolerance, s2.norm_tolerance))


def relabel(state: PhotonicState, fn: Callable[[Mode], Mode]) -> PhotonicState:
    """Move every photon from mode ``m`` to ``fn(m)``.

    ``fn`` must be injective on the occupied modes; passive routing elements
    (delays, polarization flips, path renames) are all of this kind.
    """
    occupied = state.modes
    image = {m: fn(m) for m in occupied}
    if len(set(image.values())) != len(image):
        raise DomainError("mode relabelling is not injective on the occupied modes")
    terms: dict[FockConfig, complex] = {}
    for cfg, amp in state._terms.items():
        new = FockConfig._distinct([(image[m], n) for m, n in cfg.occupations])
        terms[new] = terms.get(new, 0j) + amp
    return PhotonicState(terms, state.norm_tolerance)


def map_configs(state: PhotonicState,
                fn: Callable[[FockConfig], FockConfig]) -> PhotonicState:
    """Apply a basis-to-basis map to every configuration.

    The map must send distinct occupied configurations to distinct images so
    that the result is an isometry on the state's support.
    """
    terms: dict[FockConfig, complex] = {}
    for cfg, amp in state.terms.items():
        new = fn(cfg)
        if new in terms:
            raise DomainError("configuration map is not injective on the state's support")
        terms[new] = amp
    return PhotonicState(terms, state.norm_tolerance)


def _check_unitary(matrix: np.ndarray) -> None:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"mode map must be square, got shape {matrix.shape}")
    err = np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0])).max()
    if err > UNITARY_TOL:
        raise ValueError(f"mode map is not unitary (max deviation {err:.3g})")


def apply_mode_map(state: PhotonicState, input_modes: Sequence[Mode], matrix,
                   output_modes: Sequence[Mode] | None = None) -> PhotonicState:
    """Substitute creation operators of ``input_modes`` by a unitary combination.

    Column ``j`` of ``matrix`` is the image of ``input_modes[j]`` expressed on
    ``output_modes`` (which default to the input modes).  Photons on other
    modes are untouched; an output mode outside the input list must be empty
    in every configuration.
    """
    matrix = np.asarray(matrix, dtype=complex)
    _check_unitary(matrix)
    input_modes = list(input_modes)
    output_modes = list(input_modes if output_modes is None else output_modes)
    if len(set(input_modes)) != len(input_modes) or len(set(output_modes)) != len(output_modes):
        raise ValueError("input and output modes must be distinct")
    if len(input_modes) != matrix.shape[1] or len(output_modes) != matrix.shape[0]:
        raise ValueError("matrix shape does not match the number of modes")

    in_index = {m: j for j, m in enumerate(input_modes)}
    fresh = set(output_modes) - set(input_modes)
    terms: dict[FockConfig, complex] = {}
    for cfg, amp in state.terms.items():
        rest = []
        photons: list[int] = []
        norm = 1.0
        for m, n in cfg.occupations:
            if m in in_index:
                photons.extend([in_index[m]] * n)
                norm *= math.factorial(n)
            elif m in fresh:
                raise ValueError(f"output mode {m} is already occupied outside the map")
            else:
                rest.append((m, n))
        if not photons:
            terms[cfg] = terms.get(cfg, 0j) + amp
            continue
        prefactor = amp / math.sqrt(norm)
        columns = [matrix[:, j] for j in photons]
        supports = [np.flatnonzero(np.abs(col) > 0) for col in columns]
        for choice in itertools.product(*supports):
            coeff = prefactor
            counts: dict[int, int] = {}
            for col, i in zip(columns, choice):
                coeff *= col[i]
                counts[i] = counts.get(i, 0) + 1
            for c in counts.values():
                coeff *= math.sqrt(math.factorial(c))
            new = FockConfig(tuple(rest) + tuple((output_modes[i], c) for i, c in counts.items()))
            terms[new] = terms.get(new, 0j) + coeff
    return PhotonicState(terms, state.norm_tolerance)


def project(state: PhotonicState,
            predicate: Callable[[FockConfig], bool]) -> tuple[PhotonicState, float]:
    """Post-select on ``predicate``; returns the renormalized state and its probability."""
    kept = {c: a for c, a in state.terms.items() if predicate(c)}
    prob = float(sum(abs(a) ** 2 for a in kept.values()))
    if prob < IMPOSSIBLE_PROBABILITY:
        raise ImpossibleOutcomeError(f"post-selected outcome has probability {prob:.3g}")
    scale = 1.0 / math.sqrt(prob)
    return PhotonicState({c: a * scale for c, a in kept.items()}, state.norm_tolerance), min(prob, 1.0)


def sample_config(state: PhotonicState, rng: np.random.Generator) -> FockConfig:
    """Draw one configuration with probability ``|amplitude|^2``."""
    items = list(state.items())
    probs = np.array([abs(a) ** 2 for _, a in items])
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return items[min(idx, len(items) - 1)][0]

