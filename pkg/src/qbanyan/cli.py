"""Command-line driver.

    qbanyan gate --fredkin --control 1
    qbanyan unit --table1
    qbanyan route --n 8 --perm 0,1,2,3,4,5,6,7 --mode quantum --seed 7
    qbanyan stats --unit --f-uniform --trials 100000 --seed 1
    qbanyan enumerate --n 4

Every flag can also come from a JSON file given with ``--config``; flags on
the command line win.  Exit status: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from . import banyan, gates, switch_unit
from .components import DetectorModel
from .exceptions import QBanyanError
from .fock import QubitSpec
from .report import complex_pair, dumps, port_json, qubit_json, state_triples, to_csv

COMMANDS = ("gate", "unit", "route", "stats", "enumerate")


class UsageError(Exception):
    pass


@dataclass
class ScenarioConfig:
    command: str
    gate: str = "fredkin"
    control: int = 0
    q1: str = "0.6,0.8j"
    q2: str = "0.8,-0.6"
    table1: bool = False
    pairs: int = 100
    f: int | None = None
    F: int = 0
    s: int = 0
    d: int = 1
    n: int = 8
    wiring: str = "omega"
    perm: list[int] | None = None
    mode: str = "quantum"
    sample_heralds: bool = False
    traffic: str = "unit"
    trials: int = 1000
    n_jobs: int = 1
    samples: int | None = None
    seed: int | None = None
    eta: float = 1.0
    dark: float = 0.0
    feed_forward: bool = True
    format: str = "json"
    output: str | None = None

    def detector(self) -> DetectorModel:
        return DetectorModel(self.eta, self.dark)


CONFIG_KEYS = {f.name for f in dataclasses.fields(ScenarioConfig)}


def parse_qubit(text: str) -> QubitSpec:
    """``"beta_h,beta_v"`` with Python complex literals, normalized."""
    try:
        h, v = (complex(part.strip().replace(" ", "")) for part in text.split(","))
    except ValueError as exc:
        raise UsageError(f"cannot parse qubit {text!r}; expected 'beta_h,beta_v'") from exc
    return QubitSpec.normalized(h, v)


def parse_perm(text) -> list[int]:
    if isinstance(text, list):
        return [int(x) for x in text]
    try:
        return [int(x) for x in str(text).split(",")]
    except ValueError as exc:
        raise UsageError(f"cannot parse permutation {text!r}") from exc


def _parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--config", help="JSON file with the same keys as the flags")
    common.add_argument("--seed", type=int)
    common.add_argument("--eta", type=float, help="detector efficiency")
    common.add_argument("--dark", type=float, help="dark count probability per window")
    common.add_argument("--no-feed-forward", dest="feed_forward", action="store_false")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--output", help="report path (default: stdout)")

    parser = argparse.ArgumentParser(prog="qbanyan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gate", parents=[common], argument_default=S, help="run one heralded gate")
    which = g.add_mutually_exclusive_group()
    for name in ("fredkin", "fuse", "fission"):
        which.add_argument(f"--{name}", dest="gate", action="store_const", const=name)
    g.add_argument("--control", type=int)
    g.add_argument("--q1", help="first qubit 'beta_h,beta_v'")
    g.add_argument("--q2", help="second qubit 'beta_h,beta_v'")

    u = sub.add_parser("unit", parents=[common], argument_default=S, help="run the switch unit")
    u.add_argument("--table1", action="store_true", help="check all eight control rows")
    u.add_argument("--pairs", type=int, help="random input pairs per row with --table1")
    u.add_argument("--f", type=int)
    u.add_argument("--F", type=int)
    u.add_argument("--s", type=int)
    u.add_argument("--d", type=int)
    u.add_argument("--q1", help="qubit on a7")
    u.add_argument("--q2", help="qubit on a8")

    r = sub.add_parser("route", parents=[common], argument_default=S, help="route one traffic pattern")
    r.add_argument("--n", type=int)
    r.add_argument("--wiring", choices=banyan.WIRINGS)
    r.add_argument("--perm", help="destination per input, -1 for idle, comma separated")
    r.add_argument("--mode", choices=("quantum", "classical"))
    r.add_argument("--sample-heralds", action="store_true", help="draw every herald from --seed")

    st = sub.add_parser("stats", parents=[common], argument_default=S, help="Monte Carlo statistics")
    kind = st.add_mutually_exclusive_group()
    kind.add_argument("--unit", dest="traffic", action="store_const", const="unit")
    kind.add_argument("--network", dest="traffic", action="store_const", const="network")
    fsel = st.add_mutually_exclusive_group()
    fsel.add_argument("--f", type=int)
    fsel.add_argument("--f-uniform", dest="f", action="store_const", const=None)
    st.add_argument("--trials", type=int)
    st.add_argument("--n-jobs", type=int)
    st.add_argument("--n", type=int)
    st.add_argument("--wiring", choices=banyan.WIRINGS)
    st.add_argument("--perm")
    st.add_argument("--mode", choices=("quantum", "classical"))

    e = sub.add_parser("enumerate", parents=[common], argument_default=S, help="blocking fractions")
    e.add_argument("--n", type=int)
    e.add_argument("--wiring", choices=banyan.WIRINGS)
    e.add_argument("--samples", type=int, help="sample this many permutations instead of all")
    return parser


def _load_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config key {unknown[0]!r}")
    return data


def _validate(cfg: ScenarioConfig) -> ScenarioConfig:
    if cfg.command not in COMMANDS:
        raise UsageError(f"unknown command {cfg.command!r}")
    if cfg.gate not in ("fredkin", "fuse", "fission"):
        raise UsageError(f"unknown gate {cfg.gate!r}")
    for name in ("control", "F", "s", "d") + (("f",) if cfg.f is not None else ()):
        if getattr(cfg, name) not in (0, 1):
            raise UsageError(f"{name} must be 0 or 1")
    if cfg.traffic not in ("unit", "network"):
        raise UsageError(f"unknown traffic {cfg.traffic!r}")
    if cfg.mode not in ("quantum", "classical"):
        raise UsageError(f"unknown mode {cfg.mode!r}")
    if cfg.wiring not in banyan.WIRINGS:
        raise UsageError(f"unknown wiring {cfg.wiring!r}")
    if cfg.n < 4 or cfg.n & (cfg.n - 1):
        raise UsageError("n must be a power of two >= 4")
    if cfg.trials < 1 or cfg.pairs < 1 or cfg.n_jobs < 1:
        raise UsageError("trials, pairs and n_jobs must be positive")
    if cfg.samples is not None and cfg.samples < 1:
        raise UsageError("samples must be positive")
    if not 0.0 <= cfg.eta <= 1.0 or not 0.0 <= cfg.dark < 1.0:
        raise UsageError("eta must lie in [0, 1] and dark in [0, 1)")
    if cfg.format not in ("json", "csv"):
        raise UsageError(f"unknown format {cfg.format!r}")
    stochastic = cfg.command == "stats" or (cfg.command == "enumerate" and cfg.samples is not None) \
        or (cfg.command == "route" and cfg.sample_heralds)
    if stochastic and cfg.seed is None:
        raise UsageError(f"--seed is required for {cfg.command}")
    if cfg.perm is not None:
        cfg.perm = parse_perm(cfg.perm)
        if len(cfg.perm) != cfg.n:
            raise UsageError(f"perm has {len(cfg.perm)} entries, expected {cfg.n}")
    parse_qubit(cfg.q1)
    parse_qubit(cfg.q2)
    return cfg


def parse_config(argv: list[str] | None = None) -> ScenarioConfig:
    """Parse flags (and an optional JSON config file) into a validated config.

    Raises :class:`UsageError` for inconsistent settings; argparse itself
    exits with status 2 on malformed flags.
    """
    ns = vars(_parser().parse_args(argv))
    values: dict = {}
    if "config" in ns:
        values.update(_load_file(ns.pop("config")))
    values.update(ns)
    return _validate(ScenarioConfig(**values))


def _run_gate(cfg: ScenarioConfig) -> dict:
    q1, q2 = parse_qubit(cfg.q1), parse_qubit(cfg.q2)
    ff = cfg.feed_forward
    det = cfg.detector()
    call = {
        "fredkin": lambda rng: gates.fredkin(q1, q2, cfg.control, rng=rng, detector=det),
        "fuse": lambda rng: gates.fuse(q1, q2, ff, rng=rng, detector=det),
        "fission": lambda rng: gates.fission(gates.FusedState.from_qubits(q1, q2), ff, rng=rng, detector=det),
    }[cfg.gate]
    res = call(None)
    out = {
        "gate": cfg.gate,
        "inputs": {"q1": qubit_json(q1), "q2": qubit_json(q2)},
        "analytic": {
            "probability": res.probability,
            "herald": res.pattern.as_dict(),
            "output": state_triples(res.output),
        },
    }
    if res.fused is not None:
        out["analytic"]["fused_coefficients"] = [complex_pair(z) for z in res.fused.coefficients.reshape(4)]
    if cfg.seed is not None:
        drawn = call(np.random.default_rng(cfg.seed))
        out["monte_carlo"] = {"seed": cfg.seed, "success": drawn.success}
    return out


def _table1_row(c: switch_unit.SwitchControls, rng, pairs: int, ff, det) -> dict:
    ok = True
    for _ in range(pairs):
        q7, q8 = QubitSpec.random(rng), QubitSpec.random(rng)
        res = switch_unit.oqsu(q7, q8, c, ff, detector=det)
        P = switch_unit.PortContent
        if not c.f:
            want = (q8, q7) if c.F else (q7, q8)
            ok &= res.out_b7.equal_up_to_phase(P.qubit(want[0]))
            ok &= res.out_b8.equal_up_to_phase(P.qubit(want[1]))
            ok &= res.herald.as_dict() == {"D1": 0, "D2": 0}
        else:
            fused = P.fused(gates.FusedState.from_qubits(q8, q7))
            full, empty = (res.out_b7, res.out_b8) if c.s else (res.out_b8, res.out_b7)
            ok &= full.equal_up_to_phase(fused) and empty.kind is switch_unit.PortKind.VACUUM
            ok &= res.herald.as_dict() == {"D3": 1, "D5": 1, "D4": 0, "D6": 0}
        ok &= abs(res.probability - switch_unit.unit_probability(c, ff, det)) <= 1e-12
    b7 = "psi_f" if c.f and c.s else ("phi" if c.f else ("psi_a8" if c.F else "psi_a7"))
    b8 = "phi" if c.f and c.s else ("psi_f" if c.f else ("psi_a7" if c.F else "psi_a8"))
    return {"f": c.f, "F": c.F, "s": c.s, "b7": b7, "b8": b8, "pass": bool(ok)}


def _run_unit(cfg: ScenarioConfig) -> dict:
    det, ff = cfg.detector(), cfg.feed_forward
    if cfg.table1:
        rng = np.random.default_rng(0 if cfg.seed is None else cfg.seed)
        rows = [_table1_row(c, rng, cfg.pairs, ff, det) for c in switch_unit.SwitchControls.table1()]
        return {"table1": rows, "all_pass": all(r["pass"] for r in rows), "pairs_per_row": cfg.pairs}
    c = switch_unit.SwitchControls(cfg.f or 0, cfg.F, cfg.s, cfg.d)
    q7, q8 = parse_qubit(cfg.q1), parse_qubit(cfg.q2)
    res = switch_unit.oqsu(q7, q8, c, ff, detector=det)
    out = {
        "controls": c.as_dict(),
        "analytic": {
            "probability": res.probability,
            "herald": res.herald.as_dict(),
            "b7": port_json(res.out_b7),
            "b8": port_json(res.out_b8),
            "output": state_triples(res.state),
        },
    }
    if cfg.seed is not None:
        drawn = switch_unit.oqsu(q7, q8, c, ff, rng=np.random.default_rng(cfg.seed), detector=det)
        out["monte_carlo"] = {"seed": cfg.seed, "success": drawn.success}
    return out


def _run_route(cfg: ScenarioConfig) -> dict:
    perm = cfg.perm if cfg.perm is not None else list(range(cfg.n))
    rng = np.random.default_rng(0 if cfg.seed is None else cfg.seed)
    payloads = [QubitSpec.random(rng) for _ in perm]
    topo = banyan.build_topology(cfg.n, cfg.wiring)
    res = banyan.route(banyan.packets_from_permutation(perm, cfg.n, payloads), cfg.mode, topo,
                       ff=cfg.feed_forward, detector=cfg.detector(),
                       rng=rng if cfg.sample_heralds else None)
    delivered = {}
    for port, d in sorted(res.delivered.items()):
        entry = {"from_input": d.packet}
        if d.payload is not None:
            entry["payload"] = qubit_json(d.payload)
            entry["payload_intact"] = d.payload.equal_up_to_phase(payloads[d.packet], 1e-10)
        delivered[str(port)] = entry
    return {
        "status": res.status.value,
        "success_probability": res.success_probability,
        "heralds": "sampled" if cfg.sample_heralds else "analytic",
        "blocked_at": list(res.blocked_at) if res.blocked_at else None,
        "units": [
            {"stage": u.stage, "switch": u.switch, "kind": u.kind, "controls": u.controls.as_dict(),
             "probability": u.probability, "packets": list(u.packets)}
            for u in res.units
        ],
        "fused_segments": [
            {"start_stage": s.start_stage, "end_stage": s.end_stage, "packets": list(s.packets)}
            for s in res.fused_segments
        ],
        "delivered": delivered,
    }


def _run_stats(cfg: ScenarioConfig) -> dict:
    traffic = banyan.TrafficSpec(
        kind=cfg.traffic, unit_f=cfg.f, n_ports=cfg.n, wiring=cfg.wiring,
        permutation=tuple(cfg.perm) if cfg.perm is not None else None, mode=cfg.mode,
    )
    det = cfg.detector()
    stats = banyan.monte_carlo(traffic, cfg.trials, cfg.seed, ff=cfg.feed_forward, detector=det,
                               n_jobs=cfg.n_jobs)
    out = {"monte_carlo": stats.as_dict()}
    if cfg.traffic == "unit":
        p = (switch_unit.average_unit_probability(cfg.feed_forward, detector=det) if cfg.f is None
             else switch_unit.unit_probability(switch_unit.SwitchControls(f=cfg.f), cfg.feed_forward, det))
        z = (stats.delivery_rate - p) / stats.delivery_stderr if stats.delivery_stderr else 0.0
        out["analytic"] = {"success_probability": p}
        out["monte_carlo"]["z_score"] = z
    return out


def _run_enumerate(cfg: ScenarioConfig) -> dict:
    summ = banyan.enumerate_blocking(cfg.n, cfg.wiring, samples=cfg.samples, seed=cfg.seed or 0)
    b, u = summ.blocked_fraction_classical, summ.unsupported_fraction_quantum
    return {
        "exhaustive": summ.exhaustive,
        "permutations": summ.n_permutations,
        "blocked_classical": summ.blocked_classical,
        "unsupported_quantum": summ.unsupported_quantum,
        "blocked_fraction_classical": b,
        "unsupported_fraction_quantum": u,
        "blocked_stderr": summ.stderr(b),
        "unsupported_stderr": summ.stderr(u),
    }


_RUNNERS = {
    "gate": _run_gate,
    "unit": _run_unit,
    "route": _run_route,
    "stats": _run_stats,
    "enumerate": _run_enumerate,
}


def _version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def run(cfg: ScenarioConfig) -> dict:
    start = time.perf_counter()
    results = _RUNNERS[cfg.command](cfg)
    return {
        "tool": "qbanyan",
        "version": _version(),
        "config": dataclasses.asdict(cfg),
        "results": results,
        "duration_s": time.perf_counter() - start,
    }


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"qbanyan: usage error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run(cfg)
    except (QBanyanError, ValueError) as exc:
        print(f"qbanyan: error in {cfg.command}: {exc}", file=sys.stderr)
        return 1
    text = to_csv(report) if cfg.format == "csv" else dumps(report)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
