"""Optical elements as mode maps, plus a photon-counting detector model.

Conventions:

* Half-wave plate at angle ``theta`` (degrees from H) acts on ``(H, V)`` as
  ``[[cos 2t, sin 2t], [sin 2t, -cos 2t]]``; column j is the image of basis j.
* A polarizing beam splitter transmits H and reflects V with no extra phase
  on reflection.  For the second input port the roles of the two outputs are
  exchanged, as for a physical cube.
* Controls of CNOT-like elements are classical bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Mapping

import numpy as np

from .exceptions import UnsupportedControlError
from .fock import (
    H,
    V,
    FockConfig,
    Mode,
    PhotonicState,
    apply_mode_map,
    relabel,
)


def check_bit(value, name: str = "control") -> int:
    """Return ``value`` as 0/1, rejecting anything that is not a classical bit."""
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (int, np.integer)) and value in (0, 1):
        return int(value)
    raise UnsupportedControlError(
        f"{name} must be a classical bit 0 or 1, got {value!r}; superposed controls are not supported"
    )


@dataclass(frozen=True)
class HwpSetting:
    theta: float

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError("plate angle must be finite")
        t = math.fmod(float(self.theta), 180.0)
        if t <= -90.0:
            t += 180.0
        elif t > 90.0:
            t -= 180.0
        object.__setattr__(self, "theta", t)


def hwp_matrix(setting: HwpSetting | float) -> np.ndarray:
    if not isinstance(setting, HwpSetting):
        setting = HwpSetting(setting)
    two_t = math.radians(2.0 * setting.theta)
    c, s = math.cos(two_t), math.sin(two_t)
    return np.array([[c, s], [s, -c]], dtype=complex)


def hwp_apply(state: PhotonicState, path: str, theta: float,
              bin: int | None = None) -> PhotonicState:
    """Half-wave plate on ``path``; acts on every time bin unless ``bin`` is given."""
    bins = _bins_on(state, path) if bin is None else {bin}
    u = hwp_matrix(theta)
    for b in sorted(bins):
        state = apply_mode_map(state, [Mode(path, H, b), Mode(path, V, b)], u)
    return state


def _bins_on(state: PhotonicState, path: str) -> set[int]:
    return {m.bin for m in state.modes if m.path == path}


def pbs_apply(state: PhotonicState, in1: str, in2: str | None,
              out_transmit: str, out_reflect: str, bin: int | None = None) -> PhotonicState:
    """Polarizing beam splitter.

    ``in1`` H goes to ``out_transmit`` and ``in1`` V to ``out_reflect``;
    ``in2`` H continues straight into ``out_reflect`` and ``in2`` V is
    reflected into ``out_transmit``.  ``in2`` may be ``None`` for an unused
    port.  Acts on all bins present unless ``bin`` is given.
    """
    if out_transmit == out_reflect:
        raise ValueError("PBS outputs must be distinct paths")
    ins = [p for p in (in1, in2) if p is not None]
    bins = set().union(*(_bins_on(state, p) for p in ins)) if bin is None else {bin}
    for b in sorted(bins):
        inputs = [Mode(in1, H, b), Mode(in1, V, b)]
        outputs = [Mode(out_transmit, H, b), Mode(out_reflect, V, b)]
        if in2 is not None:
            inputs += [Mode(in2, H, b), Mode(in2, V, b)]
            outputs += [Mode(out_reflect, H, b), Mode(out_transmit, V, b)]
        state = apply_mode_map(state, inputs, np.eye(len(inputs)), outputs)
    return state


def delay_apply(state: PhotonicState, path: str, delta_bins: int) -> PhotonicState:
    """Delay line: every photon on ``path`` moves ``delta_bins`` bins later."""
    if int(delta_bins) != delta_bins or delta_bins < 0:
        raise ValueError("delay must be a non-negative integer number of bins")
    if delta_bins == 0:
        return state
    return relabel(state, lambda m: Mode(m.path, m.pol, m.bin + delta_bins) if m.path == path else m)


def controlled_flip(state: PhotonicState, control, path: str,
                    bin: int | None = None) -> PhotonicState:
    """Classically controlled polarization NOT on ``path`` (optionally one bin only)."""
    if not check_bit(control):
        return state

    def flip(m: Mode) -> Mode:
        if m.path == path and (bin is None or m.bin == bin):
            return Mode(m.path, m.pol.flipped(), m.bin)
        return m

    return relabel(state, flip)


@dataclass(frozen=True)
class DetectorModel:
    """Single-photon detector: efficiency, per-window dark counts, resolution.

    The default is the ideal number-resolving detector.  With
    ``number_resolving=False`` the detector reports only click (1) / no click (0).
    """

    efficiency: float = 1.0
    dark_count_prob: float = 0.0
    number_resolving: bool = True

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("detector efficiency must lie in [0, 1]")
        if not 0.0 <= self.dark_count_prob < 1.0:
            raise ValueError("dark count probability must lie in [0, 1)")

    @property
    def is_ideal(self) -> bool:
        return self.efficiency == 1.0 and self.dark_count_prob == 0.0 and self.number_resolving

    def response(self, n_photons: int) -> dict[int, float]:
        """Distribution of the reported count given ``n_photons`` incident."""
        return dict(_response(self, n_photons))

    def likelihood(self, reported: int, n_photons: int) -> float:
        return _response(self, n_photons).get(reported, 0.0)


@lru_cache(maxsize=256)
def _response(model: DetectorModel, n_photons: int) -> dict[int, float]:
    eta, d = model.efficiency, model.dark_count_prob
    detected = {
        k: math.comb(n_photons, k) * eta ** k * (1 - eta) ** (n_photons - k)
        for k in range(n_photons + 1)
    }
    out: dict[int, float] = {}
    for k, p in detected.items():
        out[k] = out.get(k, 0.0) + p * (1 - d)
        out[k + 1] = out.get(k + 1, 0.0) + p * d
    if not model.number_resolving:
        out = {0: out.get(0, 0.0), 1: 1.0 - out.get(0, 0.0)}
    return {k: p for k, p in out.items() if p > 0.0}


IDEAL_DETECTOR = DetectorModel()


@dataclass(frozen=True, order=True)
class ClickPattern:
    """Reported counts per detector label, kept as a sorted tuple."""

    counts: tuple[tuple[str, int], ...] = field(default=())

    def __post_init__(self):
        labels = [k for k, _ in self.counts]
        if len(set(labels)) != len(labels):
            raise ValueError("detector labels must be unique")
        if any(c < 0 for _, c in self.counts):
            raise ValueError("detector counts must be non-negative")
        object.__setattr__(self, "counts", tuple(sorted((str(k), int(c)) for k, c in self.counts)))

    @classmethod
    def from_dict(cls, counts: Mapping[str, int]) -> ClickPattern:
        return cls(tuple(counts.items()))

    def as_dict(self) -> dict[str, int]:
        return dict(self.counts)

    def __getitem__(self, label: str) -> int:
        return self.as_dict()[label]

    def __str__(self) -> str:
        return ",".join(f"{k}={c}" for k, c in self.counts) or "-"


@dataclass(frozen=True)
class DetectionOutcome:
    pattern: ClickPattern
    probability: float
    state: PhotonicState | None
    """Conditioned state of the unmeasured modes, or None when it is mixed."""


DetectorMap = Mapping[str, tuple[str, int | None]]


def _incident(cfg: FockConfig, path: str, bin: int | None) -> int:
    return cfg.photons_on(path, bin)


def _watched(mode: Mode, detectors: DetectorMap) -> bool:
    return any(mode.path == p and (b is None or mode.bin == b) for p, b in detectors.values())


def _conditioned(state: PhotonicState, detectors: DetectorMap, pattern: ClickPattern,
                 model: DetectorModel) -> PhotonicState | None:
    labels = sorted(detectors)
    wanted = pattern.as_dict()
    kept: dict[FockConfig, complex] = {}
    measured_parts = set()
    for cfg, amp in state.terms.items():
        like = 1.0
        for label in labels:
            like *= model.likelihood(wanted[label], _incident(cfg, *detectors[label]))
        if like == 0.0:
            continue
        measured = tuple((m, n) for m, n in cfg.occupations if _watched(m, detectors))
        rest = FockConfig(tuple((m, n) for m, n in cfg.occupations if not _watched(m, detectors)))
        measured_parts.add(measured)
        kept[rest] = kept.get(rest, 0j) + amp
    if len(measured_parts) != 1:
        return None
    norm = math.sqrt(sum(abs(a) ** 2 for a in kept.values()))
    return PhotonicState({c: a / norm for c, a in kept.items()}, state.norm_tolerance)


def click_distribution(state: PhotonicState, detectors: DetectorMap,
                       model: DetectorModel = IDEAL_DETECTOR) -> list[tuple[ClickPattern, float]]:
    """Exact distribution of detector reports, sorted by pattern."""
    labels = sorted(detectors)
    dist: dict[ClickPattern, float] = {}
    for cfg, amp in state.terms.items():
        weight = abs(amp) ** 2
        per_det = [sorted(model.response(_incident(cfg, *detectors[l])).items()) for l in labels]
        for combo in product(*per_det):
            p = weight
            for _, pk in combo:
                p *= pk
            pattern = ClickPattern(tuple(zip(labels, (k for k, _ in combo))))
            dist[pattern] = dist.get(pattern, 0.0) + p
    return sorted(dist.items())


def detect(state: PhotonicState, detectors: DetectorMap,
           model: DetectorModel = IDEAL_DETECTOR,
           rng: np.random.Generator | None = None):
    """Measure the modes watched by ``detectors`` (label -> (path, bin or None)).

    Without ``rng`` this is the analytic mode and returns every
    :class:`DetectionOutcome` with its exact probability.  With ``rng`` one
    pattern is drawn and returned together with the conditioned state.
    """
    dist = click_distribution(state, detectors, model)
    if rng is None:
        return [DetectionOutcome(p, prob, _conditioned(state, detectors, p, model)) for p, prob in dist]
    probs = np.array([p for _, p in dist])
    idx = int(np.searchsorted(np.cumsum(probs), rng.random() * probs.sum(), side="right"))
    pattern, prob = dist[min(idx, len(dist) - 1)]
    return DetectionOutcome(pattern, prob, _conditioned(state, detectors, pattern, model))

