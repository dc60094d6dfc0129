"""Self-routing N x N Banyan fabric built from the quantum switch unit.

Each 2x2 switch reads one destination bit per stage, most significant bit
first: 0 leaves on the upper output, 1 on the lower output.  When two
payloads at one switch want the same output, a classical fabric blocks; the
quantum fabric fuses them onto the requested link and splits them again (a
fission-plus-Fredkin unit) at the first stage where their routes diverge.

Probability accounting multiplies, per engaged switch:

* 1/4 for a Fredkin-mode unit (one or two single payloads, or a fused
  payload passing alone),
* the fusion constant for a fusion unit,
* the fission constant times 1/4 for a fission unit.

Idle switches contribute 1.  Classical mode uses the same hardware with
fusion disabled, so its delivered instances carry the Fredkin factors too.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Sequence

import numpy as np

from .components import IDEAL_DETECTOR, DetectorModel
from .fock import QubitSpec
from .gates import (
    FISSION_HERALD,
    FREDKIN_HERALD,
    FREDKIN_SUCCESS,
    FUSION_HERALD,
    fission_probability,
    fusion_probability,
    herald_probability,
)
from .switch_unit import (
    PortContent,
    SwitchControls,
    oqsu,
    unit_probability,
    variant_a,
)

WIRINGS = ("omega", "butterfly")


class Port(IntEnum):
    UPPER = 0
    LOWER = 1


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def _swap_bits(x: int, a: int, b: int) -> int:
    if ((x >> a) & 1) != ((x >> b) & 1):
        x ^= (1 << a) | (1 << b)
    return x


@dataclass(frozen=True)
class BanyanTopology:
    """Stage wiring as position permutations.

    Before stage ``i`` a payload on line ``l`` enters switch input position
    ``pre[i][l]`` (switch ``q // 2``, port ``q % 2``); switch output position
    ``2 * k + out`` is the line fed to the next stage, and ``post`` maps the
    lines after the last stage to output ports.
    """

    n_ports: int
    wiring: str
    pre: tuple[tuple[int, ...], ...]
    post: tuple[int, ...]

    @property
    def n_stages(self) -> int:
        return len(self.pre)

    @property
    def switches_per_stage(self) -> int:
        return self.n_ports // 2

    def trace(self, src: int, dest_bits: Sequence[int]) -> tuple[list[tuple[int, int, int, int]], int]:
        """Follow one payload; returns ``[(stage, switch, in_port, out_port)]`` and the exit port."""
        line, hops = src, []
        for i, bit in enumerate(dest_bits):
            q = self.pre[i][line]
            hops.append((i + 1, q // 2, q % 2, int(bit)))
            line = 2 * (q // 2) + int(bit)
        return hops, self.post[line]


def build_topology(n_ports: int, wiring: str = "omega") -> BanyanTopology:
    if not isinstance(n_ports, (int, np.integer)) or not _is_power_of_two(n_ports) or n_ports < 4:
        raise ValueError(f"network size must be a power of two >= 4, got {n_ports!r}")
    if wiring not in WIRINGS:
        raise ValueError(f"unknown wiring {wiring!r}; choose from {WIRINGS}")
    n = n_ports.bit_length() - 1
    mask = n_ports - 1
    if wiring == "omega":
        shuffle = tuple(((x << 1) & mask) | (x >> (n - 1)) for x in range(n_ports))
        pre = (shuffle,) * n
    else:
        pre = []
        for i in range(n):
            b = n - 1 - i
            if i == 0:
                pre.append(tuple(_swap_bits(x, b, 0) for x in range(n_ports)))
            else:
                pre.append(tuple(_swap_bits(_swap_bits(x, b + 1, 0), b, 0) for x in range(n_ports)))
        pre = tuple(pre)
    return BanyanTopology(int(n_ports), wiring, pre, tuple(range(n_ports)))


def dest_bits(dest: int, n_stages: int) -> tuple[int, ...]:
    return tuple((dest >> (n_stages - 1 - i)) & 1 for i in range(n_stages))


def route_bit(dest: Sequence[int], stage: int) -> Port:
    """Output taken at ``stage`` (1-based) by a payload addressed to ``dest`` (MSB-first bits)."""
    if not 1 <= stage <= len(dest):
        raise ValueError(f"stage must lie in 1..{len(dest)}")
    return Port.LOWER if dest[stage - 1] else Port.UPPER


@dataclass(frozen=True)
class Packet:
    input_port: int
    dest: tuple[int, ...]
    payload: QubitSpec | None = None

    @classmethod
    def to(cls, input_port: int, dest_port: int, n_ports: int,
           payload: QubitSpec | None = None) -> Packet:
        return cls(input_port, dest_bits(dest_port, n_ports.bit_length() - 1), payload)

    @property
    def dest_port(self) -> int:
        return int("".join(map(str, self.dest)), 2)


class RouteStatus(Enum):
    DELIVERED = "Delivered"
    BLOCKED_CLASSICAL = "BlockedClassical"
    UNSUPPORTED_CONTENTION = "UnsupportedContention"
    HERALD_FAILED = "HeraldFailed"


@dataclass(frozen=True)
class UnitRecord:
    stage: int
    switch: int
    kind: str
    controls: SwitchControls
    probability: float
    packets: tuple[int, ...]


@dataclass(frozen=True)
class FusedSegment:
    start_stage: int
    end_stage: int
    packets: tuple[int, int]
    """Input ports of the (time-bin, polarization) members of the fused pair."""


@dataclass(frozen=True)
class Delivery:
    output_port: int
    packet: int
    payload: QubitSpec | None


@dataclass
class RouteResult:
    status: RouteStatus
    units: list[UnitRecord] = field(default_factory=list)
    fused_segments: list[FusedSegment] = field(default_factory=list)
    success_probability: float = 0.0
    delivered: dict[int, Delivery] = field(default_factory=dict)
    blocked_at: tuple[int, int] | None = None

    @property
    def controls(self) -> list[dict[int, SwitchControls]]:
        stages: dict[int, dict[int, SwitchControls]] = {}
        for u in self.units:
            stages.setdefault(u.stage, {})[u.switch] = u.controls
        return [stages.get(s, {}) for s in range(1, max(stages, default=0) + 1)]

    def n_units(self, kind: str) -> int:
        return sum(u.kind == kind for u in self.units)


@dataclass
class _Carrier:
    packets: tuple[Packet, ...]
    content: PortContent | None
    segment_start: int = 0

    @property
    def fused(self) -> bool:
        return len(self.packets) == 2


def _validate_packets(packets: Sequence[Packet], topology: BanyanTopology) -> None:
    inputs = [p.input_port for p in packets]
    dests = [p.dest for p in packets]
    if len(set(inputs)) != len(inputs):
        raise ValueError("packets must enter on distinct input ports")
    if len(set(dests)) != len(dests):
        raise ValueError("packets must have distinct destinations")
    for p in packets:
        if not 0 <= p.input_port < topology.n_ports:
            raise ValueError(f"input port {p.input_port} out of range")
        if len(p.dest) != topology.n_stages or any(b not in (0, 1) for b in p.dest):
            raise ValueError(f"destination {p.dest} is not a {topology.n_stages}-bit address")


def packets_from_permutation(perm: Sequence[int | None], n_ports: int,
                             payloads: Sequence[QubitSpec] | None = None) -> list[Packet]:
    """``perm[i]`` is the destination of input ``i``; ``None`` or -1 marks an idle input."""
    out = []
    for i, d in enumerate(perm):
        if d is None or d < 0:
            continue
        out.append(Packet.to(i, int(d), n_ports, payloads[i] if payloads else None))
    return out


class _Router:
    def __init__(self, topology, mode, ff, rng, detector, track_payloads):
        if mode not in ("classical", "quantum"):
            raise ValueError("mode must be 'classical' or 'quantum'")
        self.topology = topology
        self.quantum = mode == "quantum"
        self.ff = ff
        self.rng = rng
        self.detector = detector
        self.track = track_payloads
        self.failed = False
        self.result = RouteResult(RouteStatus.DELIVERED)
        self.p_fredkin = herald_probability(FREDKIN_SUCCESS, FREDKIN_HERALD, detector)
        self.p_fusion = herald_probability(fusion_probability(ff), FUSION_HERALD, detector)
        self.p_fission = herald_probability(fission_probability(ff), FISSION_HERALD, detector)

    def _sample(self, p: float) -> None:
        if self.rng is not None and not self.failed and not self.rng.random() < p:
            self.failed = True

    def _note(self, outcome) -> None:
        if not outcome.success:
            self.failed = True

    def _record(self, stage, k, kind, controls, p, carriers):
        ids = tuple(pk.input_port for c in carriers for pk in c.packets)
        self.result.units.append(UnitRecord(stage, k, kind, controls, p, ids))

    def switch(self, stage: int, k: int, up: _Carrier | None, low: _Carrier | None):
        """Returns ``{out_port: carrier}`` or None when routing stops."""
        present = [(port, c) for port, c in ((0, up), (1, low)) if c is not None]
        bit = lambda pk: pk.dest[stage - 1]
        track = self.track and not self.failed

        if len(present) == 1:
            port, c = present[0]
            if not c.fused:
                out = bit(c.packets[0])
                controls = SwitchControls(f=0, F=int(port != out), d=0)
                self._record(stage, k, "fredkin", controls, self.p_fredkin, [c])
                self._sample(self.p_fredkin)
                return {out: c}
            t_bit, p_bit = bit(c.packets[0]), bit(c.packets[1])
            if t_bit == p_bit:
                controls = SwitchControls(f=0, F=int(port != t_bit), d=0)
                self._record(stage, k, "fredkin", controls, self.p_fredkin, [c])
                self._sample(self.p_fredkin)
                return {t_bit: c}
            return self._fission(stage, k, c, t_bit, track)

        (_, a), (_, b) = present
        if a.fused or b.fused:
            self.result.status = RouteStatus.UNSUPPORTED_CONTENTION
            self.result.blocked_at = (stage, k)
            return None
        up_bit, low_bit = bit(a.packets[0]), bit(b.packets[0])
        if up_bit != low_bit:
            controls = SwitchControls(f=0, F=up_bit, d=0)
            self._record(stage, k, "fredkin", controls, self.p_fredkin, [a, b])
            if track and a.content is not None and b.content is not None:
                res = oqsu(a.content, b.content, controls, self.ff, rng=self.rng, detector=self.detector)
                self._note(res)
                if res.success:
                    a.content, b.content = (res.out_b7, res.out_b8) if not up_bit else (res.out_b8, res.out_b7)
            else:
                self._sample(self.p_fredkin)
            return {up_bit: a, low_bit: b}

        if not self.quantum:
            self.result.status = RouteStatus.BLOCKED_CLASSICAL
            self.result.blocked_at = (stage, k)
            return None
        controls = SwitchControls(f=1, F=0, s=int(up_bit == 0), d=1)
        self._record(stage, k, "fusion", controls, self.p_fusion, [a, b])
        content = None
        if track and a.content is not None and b.content is not None:
            res = oqsu(a.content, b.content, controls, self.ff, rng=self.rng, detector=self.detector)
            self._note(res)
            if res.success:
                content = res.out_b7 if controls.s else res.out_b8
        else:
            self._sample(self.p_fusion)
        # a8 (lower input) rides the time bin, a7 (upper input) the polarization.
        fused = _Carrier((b.packets[0], a.packets[0]), content, segment_start=stage)
        return {up_bit: fused}

    def _fission(self, stage, k, c: _Carrier, t_bit: int, track: bool):
        F = int(t_bit == 1)
        p = self.p_fission * self.p_fredkin
        controls = SwitchControls(f=0, F=F, d=1)
        self._record(stage, k, "fission", controls, p, [c])
        time_pk, pol_pk = c.packets
        self.result.fused_segments.append(
            FusedSegment(c.segment_start, stage, (time_pk.input_port, pol_pk.input_port)))
        time_c, pol_c = _Carrier((time_pk,), None), _Carrier((pol_pk,), None)
        if track and c.content is not None:
            res = variant_a(c.content, F, self.ff, rng=self.rng, detector=self.detector)
            self._note(res)
            if res.success and res.outputs is not None:
                upper, lower = res.outputs
                time_c.content, pol_c.content = (upper, lower) if not F else (lower, upper)
        else:
            self._sample(p)
        return {t_bit: time_c, 1 - t_bit: pol_c}

    def run(self, packets: Sequence[Packet]) -> RouteResult:
        topo = self.topology
        lines = {
            pk.input_port: _Carrier((pk,), PortContent.qubit(pk.payload) if pk.payload is not None else None)
            for pk in packets
        }
        for i in range(topo.n_stages):
            stage = i + 1
            at: dict[int, list[_Carrier | None]] = {}
            for line, c in lines.items():
                q = topo.pre[i][line]
                at.setdefault(q // 2, [None, None])[q % 2] = c
            nxt = {}
            for k in sorted(at):
                outs = self.switch(stage, k, *at[k])
                if outs is None:
                    self.result.success_probability = 0.0
                    return self.result
                for port, c in outs.items():
                    nxt[2 * k + port] = c
            lines = nxt

        for line, c in lines.items():
            if c.fused:
                raise AssertionError("a fused pair reached an output port")
            pk = c.packets[0]
            port = topo.post[line]
            if port != pk.dest_port:
                raise AssertionError(f"packet from {pk.input_port} exited at {port}, wanted {pk.dest_port}")
            payload = c.content.payload if c.content is not None and not self.failed else None
            self.result.delivered[port] = Delivery(port, pk.input_port, payload)
        self.result.success_probability = math.prod(u.probability for u in self.result.units)
        if self.failed:
            self.result.status = RouteStatus.HERALD_FAILED
            self.result.delivered = {}
        return self.result


def route(packets: Sequence[Packet], mode: str = "quantum",
          topology: BanyanTopology | None = None, *, ff=True,
          rng: np.random.Generator | None = None,
          detector: DetectorModel = IDEAL_DETECTOR,
          track_payloads: bool = True) -> RouteResult:
    """Route one batch of packets through the fabric.

    ``mode`` is ``"classical"`` (internal contention blocks) or ``"quantum"``
    (contention resolved by fusion).  With ``rng`` every engaged unit's
    herald is sampled and the result may be ``HeraldFailed``; without it the
    heralded branch is followed.  ``track_payloads=False`` skips amplitude
    simulation and keeps only the routing and probability bookkeeping.
    """
    if topology is None:
        if not packets:
            raise ValueError("cannot infer the network size from an empty batch")
        topology = build_topology(1 << len(packets[0].dest))
    _validate_packets(packets, topology)
    return _Router(topology, mode, ff, rng, detector, track_payloads).run(packets)


@dataclass(frozen=True)
class BlockingSummary:
    n_ports: int
    wiring: str
    exhaustive: bool
    n_permutations: int
    blocked_classical: int
    unsupported_quantum: int

    @property
    def blocked_fraction_classical(self) -> float:
        return self.blocked_classical / self.n_permutations

    @property
    def unsupported_fraction_quantum(self) -> float:
        return self.unsupported_quantum / self.n_permutations

    def stderr(self, fraction: float) -> float:
        """Binomial standard error; zero for exhaustive enumeration."""
        if self.exhaustive:
            return 0.0
        return math.sqrt(fraction * (1 - fraction) / self.n_permutations)


def enumerate_blocking(n_ports: int, wiring: str = "omega", *, samples: int | None = None,
                       seed: int = 0) -> BlockingSummary:
    """Blocking statistics over full permutations.

    Exhaustive over all ``N!`` permutations when ``samples`` is None (meant
    for N = 4 or 8); otherwise ``samples`` uniform permutations drawn from
    ``seed``.
    """
    topo = build_topology(n_ports, wiring)
    if samples is None:
        if n_ports > 8:
            raise ValueError("exhaustive enumeration is limited to N <= 8; pass samples")
        perms = itertools.permutations(range(n_ports))
    else:
        rng = np.random.default_rng(seed)
        perms = (tuple(rng.permutation(n_ports)) for _ in range(samples))
    count = blocked = unsupported = 0
    for perm in perms:
        pks = packets_from_permutation(perm, n_ports)
        count += 1
        if route(pks, "classical", topo, track_payloads=False).status is RouteStatus.BLOCKED_CLASSICAL:
            blocked += 1
        if route(pks, "quantum", topo, track_payloads=False).status is RouteStatus.UNSUPPORTED_CONTENTION:
            unsupported += 1
    return BlockingSummary(n_ports, wiring, samples is None, count, blocked, unsupported)


@dataclass(frozen=True)
class TrafficSpec:
    """What one Monte Carlo trial routes.

    ``kind="unit"``: one switch unit with random qubits on both inputs;
    ``unit_f`` fixes the fusion bit or draws it uniformly when None.
    ``kind="network"``: a Banyan routing instance over ``permutation`` (or a
    fresh uniform permutation per trial when None).
    """

    kind: str = "unit"
    unit_f: int | None = None
    n_ports: int = 8
    wiring: str = "omega"
    permutation: tuple[int, ...] | None = None
    mode: str = "quantum"

    def __post_init__(self):
        if self.kind not in ("unit", "network"):
            raise ValueError("traffic kind must be 'unit' or 'network'")


@dataclass(frozen=True)
class MonteCarloStats:
    trials: int
    seed: int
    delivery_rate: float
    delivery_stderr: float
    mean_success_probability: float
    herald_failure_rate: float
    blocked_rate: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


MC_BLOCK = 1024


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Stream for trials ``block * MC_BLOCK`` up to the next block boundary."""
    return np.random.default_rng([seed, block])


def _unit_trial(traffic: TrafficSpec, rng, ff, detector) -> tuple[int, float, int, int]:
    f = int(rng.integers(2)) if traffic.unit_f is None else traffic.unit_f
    controls = SwitchControls(f=f, F=int(rng.integers(2)), s=int(rng.integers(2)))
    q7, q8 = QubitSpec.random(rng), QubitSpec.random(rng)
    res = oqsu(q7, q8, controls, ff, rng=rng, detector=detector)
    p = unit_probability(controls, ff, detector)
    return int(res.success), p, int(not res.success), 0


def _network_trial(traffic: TrafficSpec, topo, rng, ff, detector) -> tuple[int, float, int, int]:
    perm = traffic.permutation
    if perm is None:
        perm = tuple(int(x) for x in rng.permutation(traffic.n_ports))
    payloads = [QubitSpec.random(rng) for _ in perm]
    res = route(packets_from_permutation(perm, traffic.n_ports, payloads), traffic.mode, topo,
                ff=ff, rng=rng, detector=detector)
    delivered = res.status is RouteStatus.DELIVERED
    failed = res.status is RouteStatus.HERALD_FAILED
    return int(delivered), res.success_probability, int(failed), int(not delivered and not failed)


def _run_blocks(traffic: TrafficSpec, blocks: range, trials: int, seed: int, ff,
                detector) -> np.ndarray:
    topo = build_topology(traffic.n_ports, traffic.wiring) if traffic.kind == "network" else None
    rows = []
    for b in blocks:
        rng = block_rng(seed, b)
        for _ in range(b * MC_BLOCK, min((b + 1) * MC_BLOCK, trials)):
            if traffic.kind == "unit":
                rows.append(_unit_trial(traffic, rng, ff, detector))
            else:
                rows.append(_network_trial(traffic, topo, rng, ff, detector))
    return np.array(rows, dtype=float).reshape(-1, 4)


def monte_carlo(traffic: TrafficSpec, trials: int, seed: int, *, ff=True,
                detector: DetectorModel = IDEAL_DETECTOR, n_jobs: int = 1) -> MonteCarloStats:
    """Run ``trials`` independent trials.

    Trials are grouped in fixed blocks of ``MC_BLOCK``, each block drawing from
    its own stream derived from ``(seed, block)``.  Workers receive whole
    blocks and records are reduced in trial order, so any ``n_jobs`` gives
    bit-identical statistics.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_blocks = -(-trials // MC_BLOCK)
    if n_jobs <= 1 or n_blocks == 1:
        records = _run_blocks(traffic, range(n_blocks), trials, seed, ff, detector)
    else:
        bounds = np.linspace(0, n_blocks, min(n_jobs, n_blocks) + 1).astype(int)
        chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        k = len(chunks)
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(_run_blocks, [traffic] * k, chunks, [trials] * k,
                                  [seed] * k, [ff] * k, [detector] * k))
        records = np.concatenate(parts)
    delivered, prob, failed, blocked = records.T
    rate = float(delivered.sum() / trials)
    return MonteCarloStats(
        trials=trials,
        seed=seed,
        delivery_rate=rate,
        delivery_stderr=math.sqrt(rate * (1 - rate) / trials),
        mean_success_probability=float(prob.sum() / trials),
        herald_failure_rate=float(failed.sum() / trials),
        blocked_rate=float(blocked.sum() / trials),
    )
