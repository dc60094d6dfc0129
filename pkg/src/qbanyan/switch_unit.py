"""Block-free switch unit and the four composite units built from it.

The unit has inputs a7/a8 and outputs b7/b8.  Its controls are

``f``  fusion engaged (output competition) or Fredkin mode,
``F``  Fredkin cross (1) / through (0),
``s``  port of the fused photon: b7 for 1, b8 for 0,
``d``  enable bit of the spatial -> time converter.

In fusion mode the a7 photon takes the polarization slot and the a8 photon
the time-bin slot of the fused state, so the fused coefficients are
``outer(q_a8, q_a7)`` indexed ``[bin, pol]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .components import IDEAL_DETECTOR, ClickPattern, DetectorModel, check_bit
from .exceptions import DomainError, UnsupportedContentionError
from .fock import (
    H,
    V,
    Mode,
    PhotonicState,
    QubitSpec,
    make_qubit_state,
    relabel,
    tensor,
)
from .gates import (
    FREDKIN_SUCCESS,
    FusedState,
    fission,
    fission_probability,
    fredkin,
    fuse,
    fusion_probability,
    herald_probability,
    FREDKIN_HERALD,
    FUSION_HERALD,
    FISSION_HERALD,
)

# Detector names used by the unit for the Fredkin and fusion heralds.
UNIT_FREDKIN_DETECTORS = {"D1": "D1", "D2": "D2"}
UNIT_FUSION_DETECTORS = {"PBS11.H": "D3", "PBS12.H": "D5", "PBS11.V": "D4", "PBS12.V": "D6"}


@dataclass(frozen=True)
class SwitchControls:
    f: int = 0
    F: int = 0
    s: int = 0
    d: int = 1

    def __post_init__(self):
        for name in ("f", "F", "s", "d"):
            object.__setattr__(self, name, check_bit(getattr(self, name), f"control {name}"))

    @classmethod
    def table1(cls) -> list[SwitchControls]:
        """The eight (f, F, s) rows in table order, converter enabled."""
        return [cls(f, F, s) for f in (0, 1) for F in (0, 1) for s in (0, 1)]

    def as_dict(self) -> dict[str, int]:
        return {"f": self.f, "F": self.F, "s": self.s, "d": self.d}


class PortKind(Enum):
    VACUUM = "vacuum"
    QUBIT = "qubit"
    FUSED = "fused"


@dataclass(eq=False)
class PortContent:
    kind: PortKind
    payload: QubitSpec | FusedState | None = None

    def __post_init__(self):
        if (self.payload is None) != (self.kind is PortKind.VACUUM):
            raise ValueError("payload must be present exactly when the port is not vacuum")

    @classmethod
    def vacuum(cls) -> PortContent:
        return cls(PortKind.VACUUM)

    @classmethod
    def qubit(cls, q: QubitSpec) -> PortContent:
        return cls(PortKind.QUBIT, q)

    @classmethod
    def fused(cls, f: FusedState) -> PortContent:
        return cls(PortKind.FUSED, f)

    @property
    def vector(self) -> np.ndarray:
        if self.kind is PortKind.VACUUM:
            return np.ones(1, dtype=complex)
        if self.kind is PortKind.QUBIT:
            return self.payload.vector
        return self.payload.coefficients.reshape(4)

    def to_state(self, path: str) -> PhotonicState:
        if self.kind is PortKind.VACUUM:
            return PhotonicState.vacuum()
        if self.kind is PortKind.QUBIT:
            return make_qubit_state(path, 0, self.payload)
        return self.payload.to_state(path)

    def equal_up_to_phase(self, other: PortContent, atol: float = 1e-12) -> bool:
        if self.kind is not other.kind:
            return False
        return bool(abs(abs(np.vdot(self.vector, other.vector)) - 1.0) <= atol)

    def describe(self) -> dict:
        if self.kind is PortKind.VACUUM:
            return {"kind": "vacuum"}
        return {"kind": self.kind.value, "amplitudes": [[z.real, z.imag] for z in self.vector]}


_PORT_BASIS = {
    PortKind.QUBIT: [(0, H), (0, V)],
    PortKind.FUSED: [(0, H), (0, V), (1, H), (1, V)],
}


def split_ports(state: PhotonicState, ports: Sequence[tuple[str, PortKind]],
                atol: float = 1e-10) -> list[PortContent]:
    """Read a product state back as per-port contents.

    Each non-vacuum port must hold exactly one photon; at most two ports may
    be occupied.  Raises :class:`DomainError` for entangled states.
    """
    paths = {p for p, _ in ports}
    occupied = [(p, k) for p, k in ports if k is not PortKind.VACUUM]
    if len(occupied) > 2:
        raise ValueError("split_ports handles at most two occupied ports")
    index = [{(b, pol): i for i, (b, pol) in enumerate(_PORT_BASIS[k])} for _, k in occupied]
    dims = [len(_PORT_BASIS[k]) for _, k in occupied] or [1]
    amps = np.zeros(dims + [1] * (2 - len(dims)), dtype=complex)
    for cfg, amp in state.terms.items():
        if not cfg.paths <= paths:
            raise DomainError(f"photons outside the listed ports: {cfg}")
        pos = []
        for (path, _), idx in zip(occupied, index):
            modes = [m for m in cfg.modes if m.path == path]
            if cfg.photons_on(path) != 1 or (modes[0].bin, modes[0].pol) not in idx:
                raise DomainError(f"port {path!r} does not hold a single in-range photon: {cfg}")
            pos.append(idx[(modes[0].bin, modes[0].pol)])
        if cfg.n_photons != len(occupied):
            raise DomainError(f"unexpected photons on a vacuum port: {cfg}")
        amps[tuple(pos + [0] * (2 - len(pos)))] += amp
    u, s, vh = np.linalg.svd(amps)
    if len(s) > 1 and s[1] > atol:
        raise DomainError("output ports are entangled")
    vectors = iter([u[:, 0], vh[0] * s[0]])
    out = []
    for path, kind in ports:
        if kind is PortKind.VACUUM:
            out.append(PortContent.vacuum())
            continue
        vec = next(vectors)
        vec = vec / np.linalg.norm(vec)
        if kind is PortKind.QUBIT:
            out.append(PortContent.qubit(QubitSpec(*vec)))
        else:
            out.append(PortContent.fused(FusedState(vec.reshape(2, 2), path)))
    return out


def _relabel_pattern(pattern: ClickPattern, names: dict[str, str]) -> ClickPattern:
    return ClickPattern.from_dict({names.get(k, k): c for k, c in pattern.as_dict().items()})


def _rename_paths(state: PhotonicState, names: dict[str, str]) -> PhotonicState:
    return relabel(state, lambda m: Mode(names[m.path], m.pol, m.bin) if m.path in names else m)


@dataclass
class UnitOutcome:
    out_b7: PortContent | None
    out_b8: PortContent | None
    success: bool
    probability: float
    herald: ClickPattern
    state: PhotonicState | None = None


def path_select(state: PhotonicState, f: int,
                inputs: tuple[str, str] = ("a7", "a8")) -> tuple[PhotonicState, tuple[str, str]]:
    """Send both inputs to the Fredkin arm (f=0, a7'/a8') or the fusion arm (f=1, a7''/a8'')."""
    primes = "''" if check_bit(f, "control f") else "'"
    routed = {p: p + primes for p in inputs}
    return _rename_paths(state, routed), (routed[inputs[0]], routed[inputs[1]])


def unit_probability(c: SwitchControls, ff=True,
                     detector: DetectorModel = IDEAL_DETECTOR) -> float:
    if c.f:
        return herald_probability(fusion_probability(ff), FUSION_HERALD, detector)
    return herald_probability(FREDKIN_SUCCESS, FREDKIN_HERALD, detector)


def average_unit_probability(ff=True, p_fusion: float = 0.5,
                             detector: DetectorModel = IDEAL_DETECTOR) -> float:
    """Mean success probability when fusion is engaged with probability ``p_fusion``."""
    return (p_fusion * unit_probability(SwitchControls(f=1), ff, detector)
            + (1 - p_fusion) * unit_probability(SwitchControls(f=0), ff, detector))


def _as_port(x) -> PortContent:
    if isinstance(x, PortContent):
        return x
    if isinstance(x, QubitSpec):
        return PortContent.qubit(x)
    if isinstance(x, FusedState):
        return PortContent.fused(x)
    raise TypeError(f"cannot use {type(x).__name__} as port content")


def oqsu(in_a7, in_a8, c: SwitchControls, ff=True, *,
         rng: np.random.Generator | None = None,
         detector: DetectorModel = IDEAL_DETECTOR) -> UnitOutcome:
    """Run the switch unit on two single-qubit inputs."""
    in_a7, in_a8 = _as_port(in_a7), _as_port(in_a8)
    if PortKind.FUSED in (in_a7.kind, in_a8.kind):
        raise UnsupportedContentionError("a fused input competing at the basic unit is not supported")
    if PortKind.VACUUM in (in_a7.kind, in_a8.kind):
        raise DomainError("the basic unit needs a qubit on both inputs")
    if c.f and not c.d:
        raise ValueError("fusion mode needs the converter enabled (d=1)")
    joint = tensor(in_a7.to_state("a7"), in_a8.to_state("a8"))
    routed, (p7, p8) = path_select(joint, c.f)

    if not c.f:
        res = fredkin(routed, control=c.F, rng=rng, detector=detector,
                      in_paths=(p7, p8), out_paths=("b7", "b8"))
        herald = _relabel_pattern(res.pattern, UNIT_FREDKIN_DETECTORS)
        if not res.success:
            return UnitOutcome(None, None, False, res.probability, herald)
        b7, b8 = split_ports(res.output, [("b7", PortKind.QUBIT), ("b8", PortKind.QUBIT)])
        return UnitOutcome(b7, b8, True, res.probability, herald, res.output)

    res = fuse(routed, None, ff, c.d, rng=rng, detector=detector, in_paths=(p7, p8), carrier="b78")
    herald = _relabel_pattern(res.pattern, UNIT_FUSION_DETECTORS)
    if not res.success:
        return UnitOutcome(None, None, False, res.probability, herald)
    port = "b7" if c.s else "b8"
    out = _rename_paths(res.output, {"b78": port})
    layout = [("b7", PortKind.FUSED if c.s else PortKind.VACUUM),
              ("b8", PortKind.VACUUM if c.s else PortKind.FUSED)]
    b7, b8 = split_ports(out, layout)
    return UnitOutcome(b7, b8, True, res.probability, herald, out)


@dataclass
class VariantOutcome:
    success: bool
    probability: float
    outputs: tuple[PortContent, PortContent] | None = None
    state: PhotonicState | None = None
    """Joint output on paths c1/c2; ``outputs`` is None if they are entangled."""


def _finish(state: PhotonicState, layout, probability: float) -> VariantOutcome:
    try:
        outputs = tuple(split_ports(state, layout))
    except DomainError:
        outputs = None
    return VariantOutcome(True, probability, outputs, state)


def _load_fused(x, path: str) -> PhotonicState:
    if isinstance(x, PortContent):
        x = x.payload
    if not isinstance(x, FusedState):
        raise TypeError("expected a fused payload")
    return x.to_state(path)


def _load_qubit(x, path: str) -> PhotonicState:
    if isinstance(x, PortContent):
        x = x.payload
    if not isinstance(x, QubitSpec):
        raise TypeError("expected a single-qubit payload")
    return make_qubit_state(path, 0, x)


def variant_a(fused_in, F: int, ff=True, *, rng: np.random.Generator | None = None,
              detector: DetectorModel = IDEAL_DETECTOR) -> VariantOutcome:
    """Fission then Fredkin: a fused signal split onto two selectable outputs.

    With ``F = 0`` the time-bin qubit leaves on c1 and the polarization qubit
    on c2; ``F = 1`` exchanges them.
    """
    F = check_bit(F, "control F")
    p = (herald_probability(fission_probability(ff), FISSION_HERALD, detector)
         * herald_probability(FREDKIN_SUCCESS, FREDKIN_HERALD, detector))
    fis = fission(_load_fused(fused_in, "va.in"), ff, rng=rng, detector=detector,
                  source="va.in", outputs=("va.b5", "va.b6"))
    if not fis.success:
        return VariantOutcome(False, p)
    fr = fredkin(fis.output, control=F, rng=rng, detector=detector,
                 in_paths=("va.b5", "va.b6"), out_paths=("c1", "c2"))
    if not fr.success:
        return VariantOutcome(False, p)
    return _finish(fr.output, [("c1", PortKind.QUBIT), ("c2", PortKind.QUBIT)], p)


def variant_b(fused_in, single_in, s: int, ff=True, *, rng: np.random.Generator | None = None,
              detector: DetectorModel = IDEAL_DETECTOR) -> VariantOutcome:
    """Fission, then fuse one of the two halves with a single input.

    ``s = 0``: the time-bin qubit of ``fused_in`` leaves directly on c1 and
    its polarization qubit is fused with ``single_in``; ``s = 1`` swaps the
    roles.  The re-fused state on c2 carries the recycled qubit in the time
    bin and ``single_in`` in polarization.
    """
    s = check_bit(s, "control s")
    p = (herald_probability(fission_probability(ff), FISSION_HERALD, detector)
         * herald_probability(fusion_probability(ff), FUSION_HERALD, detector))
    fis = fission(_load_fused(fused_in, "vb.in"), ff, rng=rng, detector=detector,
                  source="vb.in", outputs=("vb.b5", "vb.b6"))
    if not fis.success:
        return VariantOutcome(False, p)
    direct, recycled = ("vb.b6", "vb.b5") if s else ("vb.b5", "vb.b6")
    state = tensor(fis.output, _load_qubit(single_in, "vb.single"))
    fu = fuse(state, None, ff, rng=rng, detector=detector,
              in_paths=("vb.single", recycled), carrier="c2")
    if not fu.success:
        return VariantOutcome(False, p)
    out = _rename_paths(fu.output, {direct: "c1"})
    return _finish(out, [("c1", PortKind.QUBIT), ("c2", PortKind.FUSED)], p)


def pad_with_vacuum(single_in, path: str) -> PhotonicState:
    """A single-qubit payload occupying bin 0, with vacuum in bin 1.

    The padded payload spans the same two bins as a fused payload, so a
    Fredkin gate can exchange the two as whole two-bin frames.
    """
    return _load_qubit(single_in, path)


def variant_c(fused_in, single_in, F: int, ff=True, *, rng: np.random.Generator | None = None,
              detector: DetectorModel = IDEAL_DETECTOR) -> VariantOutcome:
    """One Fredkin gate exchanging a fused payload and a vacuum-padded single.

    ``F = 0`` keeps the fused payload on c1 and the single on c2.
    """
    F = check_bit(F, "control F")
    p = herald_probability(FREDKIN_SUCCESS, FREDKIN_HERALD, detector)
    state = tensor(_load_fused(fused_in, "vc.f"), pad_with_vacuum(single_in, "vc.s"))
    fr = fredkin(state, control=F, rng=rng, detector=detector,
                 in_paths=("vc.f", "vc.s"), out_paths=("c1", "c2"))
    if not fr.success:
        return VariantOutcome(False, p)
    layout = [("c1", PortKind.FUSED), ("c2", PortKind.QUBIT)]
    if F:
        layout = [("c1", PortKind.QUBIT), ("c2", PortKind.FUSED)]
    return _finish(fr.output, layout, p)


def variant_d(fused1, fused2, ff=True, *, rng: np.random.Generator | None = None,
              detector: DetectorModel = IDEAL_DETECTOR) -> VariantOutcome:
    """Two fissions and two fusions exchanging the polarization qubits.

    Inputs carrying (qA, qB) and (qC, qD) as (time-bin, polarization) leave
    as fused (qA, qD) on c1 and fused (qC, qB) on c2.
    """
    p_split = herald_probability(fission_probability(ff), FISSION_HERALD, detector)
    p_merge = herald_probability(fusion_probability(ff), FUSION_HERALD, detector)
    p = p_split ** 2 * p_merge ** 2
    state = tensor(_load_fused(fused1, "vd.in1"), _load_fused(fused2, "vd.in2"))
    for src, outs in (("vd.in1", ("vd.A", "vd.B")), ("vd.in2", ("vd.C", "vd.D"))):
        res = fission(state, ff, rng=rng, detector=detector, source=src, outputs=outs)
        if not res.success:
            return VariantOutcome(False, p)
        state = res.output
    for pol_path, time_path, carrier in (("vd.D", "vd.A", "c1"), ("vd.B", "vd.C", "c2")):
        res = fuse(state, None, ff, rng=rng, detector=detector,
                   in_paths=(pol_path, time_path), carrier=carrier)
        if not res.success:
            return VariantOutcome(False, p)
        state = res.output
    return _finish(state, [("c1", PortKind.FUSED), ("c2", PortKind.FUSED)], p)
