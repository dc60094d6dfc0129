"""Heralded Fredkin gate, state fusion and state fission.

The three probabilistic cores are modelled as heralded channels: on the
heralded branch they apply a fixed basis map, and the branch occurs with a
fixed, input-independent probability.  Their internal interferometers are
not simulated.  The spatial/time-bin converters that sit around the fusion
and fission cores are built element by element from :mod:`qbanyan.components`.

Port conventions (fixed, relied on by :mod:`qbanyan.switch_unit`):

* ``fredkin``: control 0 sends a1 -> b1 and a2 -> b2, control 1 swaps them.
* ``fuse``: the qubit on a4 becomes the which-arm / time-bin index
  (H -> b3' / bin 0, V -> b4' / bin 1); the qubit on a3 stays in polarization.
* ``fission``: bin 0 / a5' gives b5 = H and bin 1 / a6' gives b5 = V; the
  polarization goes to b6.  Hence ``fission(fuse(qA, qB))`` returns qB on
  b5 and qA on b6.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .components import (
    IDEAL_DETECTOR,
    ClickPattern,
    DetectorModel,
    check_bit,
    controlled_flip,
    delay_apply,
    hwp_apply,
    pbs_apply,
)
from .exceptions import DomainError, NormError
from .fock import (
    H,
    V,
    FockConfig,
    Mode,
    PhotonicState,
    QubitSpec,
    make_qubit_state,
    map_configs,
    relabel,
    tensor,
)

FREDKIN_SUCCESS = 1 / 4
FUSION_SUCCESS = 1 / 32
FUSION_SUCCESS_FEED_FORWARD = 1 / 8

# Delay-line settings of the spatial -> time converter, in bins.
TAU1_BINS = 0
TAU2_BINS = 1

# Herald conditions: detector label -> required count on the success branch.
FREDKIN_HERALD = {"D1": 0, "D2": 0}
FUSION_HERALD = {"PBS11.H": 1, "PBS12.H": 1, "PBS11.V": 0, "PBS12.V": 0}
FISSION_HERALD = {"PBS20.H": 1, "PBS20.V": 0}


@dataclass(frozen=True)
class FeedForward:
    enabled: bool = True


def as_feed_forward(ff) -> FeedForward:
    return ff if isinstance(ff, FeedForward) else FeedForward(bool(ff))


def fusion_probability(ff=True) -> float:
    return FUSION_SUCCESS_FEED_FORWARD if as_feed_forward(ff).enabled else FUSION_SUCCESS


fission_probability = fusion_probability


def herald_probability(ideal: float, herald: dict[str, int],
                       detector: DetectorModel = IDEAL_DETECTOR) -> float:
    """Probability that the success branch is announced by ``detector``.

    Each herald detector must report exactly its required count on the
    success branch.  False heralds produced by failure branches are not
    modelled, so for non-ideal detectors this is the true-herald rate only.
    """
    p = ideal
    for required in herald.values():
        p *= detector.likelihood(required, required)
    return p


@dataclass
class HeraldOutcome:
    success: bool
    probability: float
    pattern: ClickPattern
    output: PhotonicState | None = None
    fused: FusedState | None = None


def _herald(ideal: float, herald: dict[str, int], detector: DetectorModel,
            rng: np.random.Generator | None) -> tuple[bool, float, ClickPattern]:
    p = herald_probability(ideal, herald, detector)
    success = True if rng is None else bool(rng.random() < p)
    # The detector record of a failed run is not modelled; report it empty.
    pattern = ClickPattern.from_dict(herald) if success else ClickPattern()
    return success, p, pattern


@dataclass(eq=False)
class FusedState:
    """One photon carrying two qubits: ``coefficients[bin, pol]``."""

    coefficients: np.ndarray
    carrier_path: str = "b43"

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex).reshape(2, 2)
        norm = float(np.sum(np.abs(c) ** 2))
        if abs(norm - 1.0) > 1e-12:
            raise NormError(f"fused state is not normalized (sum |c|^2 = {norm!r})")
        self.coefficients = c

    @classmethod
    def from_qubits(cls, time_qubit: QubitSpec, pol_qubit: QubitSpec,
                    carrier_path: str = "b43") -> FusedState:
        """Product fused state: ``time_qubit`` indexes the bin, ``pol_qubit`` the polarization."""
        return cls(np.outer(time_qubit.vector, pol_qubit.vector), carrier_path)

    @classmethod
    def from_state(cls, state: PhotonicState, path: str) -> FusedState:
        c = np.zeros((2, 2), dtype=complex)
        for cfg, amp in state.terms.items():
            modes = cfg.modes
            if cfg.n_photons != 1 or modes[0].path != path or modes[0].bin not in (0, 1):
                raise DomainError(f"not a single photon in bins 0/1 of path {path!r}: {cfg}")
            c[modes[0].bin, modes[0].pol] += amp
        return cls(c, path)

    def to_state(self, path: str | None = None) -> PhotonicState:
        path = path or self.carrier_path
        return PhotonicState({
            FockConfig.from_modes([Mode(path, p, b)]): self.coefficients[b, p]
            for b in (0, 1) for p in (H, V)
        })

    def factorize(self, atol: float = 1e-10) -> tuple[QubitSpec, QubitSpec]:
        """Split a product fused state into (time qubit, polarization qubit)."""
        u, s, vh = np.linalg.svd(self.coefficients)
        if s[1] > atol:
            raise DomainError("fused state is entangled; it has no product decomposition")
        time_vec = u[:, 0] * s[0]
        return QubitSpec.normalized(*time_vec), QubitSpec.normalized(*vh[0])


def _input_state(q1, q2, paths: Sequence[str]) -> PhotonicState:
    if isinstance(q1, PhotonicState) and q2 is None:
        return q1
    s1 = q1 if isinstance(q1, PhotonicState) else make_qubit_state(paths[0], 0, q1)
    s2 = q2 if isinstance(q2, PhotonicState) else make_qubit_state(paths[1], 0, q2)
    return tensor(s1, s2)


def _require_one_each(state: PhotonicState, paths: Sequence[str], bin: int | None = None) -> None:
    for cfg in state.terms:
        for p in paths:
            if cfg.photons_on(p) != 1 or (bin is not None and cfg.photons_on(p, bin) != 1):
                where = f" in bin {bin}" if bin is not None else ""
                raise DomainError(f"expected exactly one photon on {p!r}{where}, got {cfg}")


def _require_empty(state: PhotonicState, paths: Sequence[str]) -> None:
    busy = state.paths & set(paths)
    if busy:
        raise DomainError(f"paths {sorted(busy)} must be free for this operation")


def fredkin(q1, q2=None, control: int = 0, *, rng: np.random.Generator | None = None,
            detector: DetectorModel = IDEAL_DETECTOR,
            in_paths: tuple[str, str] = ("a1", "a2"),
            out_paths: tuple[str, str] = ("b1", "b2")) -> HeraldOutcome:
    """Heralded controlled swap.

    ``q1``/``q2`` are qubits for a1/a2, or ``q1`` is a joint state with one
    photon on each input path (entangled inputs, spectator photons on other
    paths and multi-bin payloads are all allowed).  Without ``rng`` the
    success branch is returned with its probability; with ``rng`` success is
    drawn.
    """
    control = check_bit(control, "Fredkin control")
    state = _input_state(q1, q2, in_paths)
    _require_one_each(state, in_paths)
    success, p, pattern = _herald(FREDKIN_SUCCESS, FREDKIN_HERALD, detector, rng)
    if not success:
        return HeraldOutcome(False, p, pattern)
    target = {in_paths[0]: out_paths[control], in_paths[1]: out_paths[1 - control]}
    out = relabel(state, lambda m: Mode(target[m.path], m.pol, m.bin) if m.path in target else m)
    return HeraldOutcome(True, p, pattern, out)


def fuse_spatial(q3, q4=None, ff=True, *, rng: np.random.Generator | None = None,
                 detector: DetectorModel = IDEAL_DETECTOR,
                 in_paths: tuple[str, str] = ("a3", "a4"),
                 out_paths: tuple[str, str] = ("b3'", "b4'")) -> HeraldOutcome:
    """Fusion core: two polarization photons into one photon over two arms."""
    state = _input_state(q3, q4, in_paths)
    _require_one_each(state, in_paths, bin=0)
    pol_path, arm_path = in_paths

    def fuse_config(cfg: FockConfig) -> FockConfig:
        pol = next(m.pol for m in cfg.modes if m.path == pol_path)
        arm = next(m.pol for m in cfg.modes if m.path == arm_path)
        rest = [(m, n) for m, n in cfg.occupations if m.path not in in_paths]
        return FockConfig(tuple(rest) + ((Mode(out_paths[arm], pol, 0), 1),))

    success, p, pattern = _herald(fusion_probability(ff), FUSION_HERALD, detector, rng)
    if not success:
        return HeraldOutcome(False, p, pattern)
    _require_empty(state, out_paths)
    return HeraldOutcome(True, p, pattern, map_configs(state, fuse_config))


def spatial_to_time(state: PhotonicState, d_control: int = 1, target: str = "b43",
                    arms: tuple[str, str] = ("b3'", "b4'")) -> PhotonicState:
    """Merge a photon spread over two arms into two time bins of one path.

    Built from optics: a 45 degree plate on the first arm, delay lines of
    ``TAU1_BINS``/``TAU2_BINS``, a PBS, two CNOTs acting on bin 0 (the photon
    from the first arm) and a recombining PBS.  ``d_control = 0`` bypasses
    the converter.
    """
    if not check_bit(d_control, "converter control"):
        return state
    first, second = arms
    for cfg in state.terms:
        on_arms = cfg.photons_on(first) + cfg.photons_on(second)
        if on_arms != 1 or cfg.photons_on(first, 0) + cfg.photons_on(second, 0) != 1:
            raise DomainError(f"converter expects one photon in bin 0 of {arms}, got {cfg}")
    x, y, dump = f"{target}.x", f"{target}.y", f"{target}.dump"
    _require_empty(state, (target, x, y, dump))

    s = hwp_apply(state, first, 45.0)
    s = delay_apply(s, first, TAU1_BINS)
    s = delay_apply(s, second, TAU2_BINS)
    s = pbs_apply(s, second, first, x, y)
    s = controlled_flip(s, d_control, x, bin=0)
    s = controlled_flip(s, d_control, y, bin=0)
    s = pbs_apply(s, x, y, target, dump)
    if dump in s.paths:
        raise AssertionError("converter leaked amplitude into its unused port")
    return s


def _rereference(state: PhotonicState, paths: Sequence[str], shift: int) -> PhotonicState:
    """Move the time origin of ``paths`` ``shift`` bins later (bins decrease)."""

    def move(m: Mode) -> Mode:
        if m.path not in paths:
            return m
        if m.bin < shift:
            raise DomainError("time re-referencing would produce a negative bin")
        return Mode(m.path, m.pol, m.bin - shift)

    return relabel(state, move)


def time_to_spatial(state: PhotonicState, d_control: int = 1, source: str = "a56",
                    outputs: tuple[str, str] = ("a5'", "a6'")) -> PhotonicState:
    """Split the two time bins of ``source`` onto two spatial arms at bin 0.

    PBS, CNOTs on the second time bin only, a recombining PBS, a 45 degree
    plate on the late arm and a one-bin delay on the early arm so both arms
    realign.  Inverse of :func:`spatial_to_time`.
    """
    if not check_bit(d_control, "converter control"):
        return state
    for cfg in state.terms:
        if cfg.photons_on(source) != 1 or cfg.photons_on(source, 0) + cfg.photons_on(source, 1) != 1:
            raise DomainError(f"converter expects one photon in bins 0/1 of {source!r}, got {cfg}")
    x, y = f"{source}.x", f"{source}.y"
    _require_empty(state, (*outputs, x, y))
    early, late = outputs

    s = pbs_apply(state, source, None, x, y)
    s = controlled_flip(s, d_control, x, bin=1)
    s = controlled_flip(s, d_control, y, bin=1)
    s = pbs_apply(s, x, y, early, late)
    s = hwp_apply(s, late, 45.0)
    s = delay_apply(s, early, 1)
    return _rereference(s, outputs, 1)


def fuse(q3, q4=None, ff=True, d_control: int = 1, *, rng: np.random.Generator | None = None,
         detector: DetectorModel = IDEAL_DETECTOR,
         in_paths: tuple[str, str] = ("a3", "a4"), carrier: str = "b43") -> HeraldOutcome:
    """Fusion followed by the spatial -> time converter.

    On success ``output`` holds the photon on ``carrier`` and, when nothing
    else is in the state, ``fused`` holds its four coefficients.
    """
    arms = (f"{carrier}.b3'", f"{carrier}.b4'")
    core = fuse_spatial(q3, q4, ff, rng=rng, detector=detector, in_paths=in_paths, out_paths=arms)
    if not core.success:
        return core
    out = spatial_to_time(core.output, d_control, carrier, arms)
    fused = None
    if check_bit(d_control) and out.paths == {carrier}:
        fused = FusedState.from_state(out, carrier)
    return HeraldOutcome(True, core.probability, core.pattern, out, fused)


def fission(fused: FusedState | PhotonicState, ff=True, *,
            rng: np.random.Generator | None = None,
            detector: DetectorModel = IDEAL_DETECTOR, source: str = "a56",
            outputs: tuple[str, str] = ("b5", "b6")) -> HeraldOutcome:
    """Time -> spatial converter followed by the fission core.

    ``fused`` is a :class:`FusedState` or a state with exactly one photon in
    bins 0/1 of ``source`` (other photons elsewhere are carried along).
    """
    if isinstance(fused, FusedState):
        state = fused.to_state(source)
    else:
        state = fused
        if not state.is_normalized():
            raise DomainError("fission input is not normalized")
    arms = (f"{source}.a5'", f"{source}.a6'")
    _require_empty(state, outputs)
    spatial = time_to_spatial(state, 1, source, arms)

    def split(cfg: FockConfig) -> FockConfig:
        photon = next(m for m in cfg.modes if m.path in arms)
        arm = H if photon.path == arms[0] else V
        rest = [(m, n) for m, n in cfg.occupations if m.path not in arms]
        return FockConfig(tuple(rest) + ((Mode(outputs[0], arm, 0), 1), (Mode(outputs[1], photon.pol, 0), 1)))

    success, p, pattern = _herald(fission_probability(ff), FISSION_HERALD, detector, rng)
    if not success:
        return HeraldOutcome(False, p, pattern)
    return HeraldOutcome(True, p, pattern, map_configs(spatial, split))


def qubit_pair(state: PhotonicState, paths: tuple[str, str],
               atol: float = 1e-10) -> tuple[QubitSpec, QubitSpec]:
    """Factor a two-photon product state on ``paths`` into its two qubits.

    The global phase is placed on the second qubit so that the tensor
    product of the returned qubits reproduces the state exactly.
    """
    m = np.zeros((2, 2), dtype=complex)
    for cfg, amp in state.terms.items():
        modes = cfg.modes
        if cfg.n_photons != 2 or {mo.path for mo in modes} != set(paths):
            raise DomainError(f"expected one photon on each of {paths}, got {cfg}")
        first = next(mo for mo in modes if mo.path == paths[0])
        second = next(mo for mo in modes if mo.path == paths[1])
        m[first.pol, second.pol] += amp
    u, s, vh = np.linalg.svd(m)
    if s[1] > atol:
        raise DomainError("two-photon state is entangled")
    return QubitSpec.normalized(*u[:, 0]), QubitSpec.normalized(*(vh[0] * s[0]))


def single_qubit(state: PhotonicState, path: str) -> QubitSpec:
    """Read the polarization qubit of a state holding one photon on ``path``."""
    vec = np.zeros(2, dtype=complex)
    for cfg, amp in state.terms.items():
        modes = cfg.modes
        if cfg.n_photons != 1 or modes[0].path != path:
            raise DomainError(f"expected a single photon on {path!r}, got {cfg}")
        vec[modes[0].pol] += amp
    return QubitSpec.normalized(*vec)
