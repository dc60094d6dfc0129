"""Acceptance checks, one per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` or ``python3 tests/test_acceptance.py``.
"""

import itertools
import json
import math
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

import oracles  # noqa: E402
from qbanyan import cli  # noqa: E402
from qbanyan.banyan import (  # noqa: E402
    RouteStatus,
    TrafficSpec,
    build_topology,
    monte_carlo,
    packets_from_permutation,
    route,
)
from qbanyan.components import controlled_flip, delay_apply, hwp_apply, pbs_apply  # noqa: E402
from qbanyan.fock import (  # noqa: E402
    H,
    V,
    FockConfig,
    Mode,
    PhotonicState,
    QubitSpec,
    apply_mode_map,
    make_qubit_state,
    tensor,
)
from qbanyan.gates import (  # noqa: E402
    FusedState,
    fission,
    fredkin,
    fuse,
    qubit_pair,
    spatial_to_time,
    time_to_spatial,
)
from qbanyan.report import dumps, strip_volatile  # noqa: E402
from qbanyan.switch_unit import (  # noqa: E402
    PortContent,
    PortKind,
    SwitchControls,
    average_unit_probability,
    oqsu,
    variant_a,
    variant_b,
    variant_c,
    variant_d,
)

R = 1 / math.sqrt(2)


def qubits(seed, n):
    rng = np.random.default_rng(seed)
    return [QubitSpec.random(rng) for _ in range(n)]


def pair_state(q1, p1, q2, p2):
    return tensor(make_qubit_state(p1, 0, q1), make_qubit_state(p2, 0, q2))


def c01_plates():
    maps = {
        22.5: {H: (R, R), V: (R, -R)},
        67.5: {H: (-R, R), V: (R, R)},
        45.0: {H: (0, 1), V: (1, 0)},
        -22.5: {H: (R, -R), V: (-R, -R)},
    }
    worst = 0.0
    for theta, images in maps.items():
        for pol, (ah, av) in images.items():
            out = hwp_apply(PhotonicState.single(Mode("a", pol)), "a", theta)
            got = (out.amplitude([Mode("a", H)]), out.amplitude([Mode("a", V)]))
            worst = max(worst, abs(got[0] - ah), abs(got[1] - av))
    return worst <= 1e-12, f"max deviation {worst:.2e}"


def c02_fredkin():
    worst, probs = 0.0, set()
    for q1, q2 in zip(qubits(1, 200), qubits(2, 200)):
        for control in (0, 1):
            res = fredkin(q1, q2, control)
            want = pair_state(q1, "b1", q2, "b2") if control == 0 else pair_state(q2, "b1", q1, "b2")
            worst = max(worst, max(abs(res.output.amplitude(c) - a) for c, a in want.terms.items()))
            worst = max(worst, abs(res.output.norm_squared() - 1))
            probs.add(res.probability)
    return worst <= 1e-12 and probs == {0.25}, f"max deviation {worst:.2e}, p={sorted(probs)}"


def c03_fusion():
    worst, probs = 0.0, {True: set(), False: set()}
    for q3, q4 in zip(qubits(3, 200), qubits(4, 200)):
        for ff in (True, False):
            res = fuse(q3, q4, ff)
            worst = max(worst, np.abs(res.fused.coefficients - np.outer(q4.vector, q3.vector)).max())
            probs[ff].add(res.probability)
    ok = worst <= 1e-12 and probs[False] == {1 / 32} and probs[True] == {1 / 8}
    return ok, f"max deviation {worst:.2e}, p={sorted(probs[False])}/{sorted(probs[True])}"


def c04_roundtrip():
    ok = True
    for qa, qb in zip(qubits(5, 200), qubits(6, 200)):
        out = fission(fuse(qa, qb).fused).output
        ok &= out.equal_up_to_phase(pair_state(qb, "b5", qa, "b6"), atol=1e-10)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        c = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        c /= np.linalg.norm(c)
        out = fission(FusedState(c)).output
        for b, p in itertools.product((0, 1), repeat=2):
            cfg = FockConfig.from_modes([Mode("b5", (H, V)[b]), Mode("b6", (H, V)[p])])
            worst = max(worst, abs(out.amplitude(cfg) - c[b, p]))
        worst = max(worst, abs(out.norm_squared() - 1))
    return bool(ok) and worst <= 1e-10, f"product roundtrips ok={bool(ok)}, entangled max dev {worst:.2e}"


def c05_converters():
    rng = np.random.default_rng(8)
    worst = 0.0
    modes = [Mode(a, p) for a in ("b3'", "b4'") for p in (H, V)]
    for _ in range(100):
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        v /= np.linalg.norm(v)
        s = PhotonicState({FockConfig.from_modes([m]): x for m, x in zip(modes, v)})
        back = time_to_spatial(spatial_to_time(s), source="b43", outputs=("b3'", "b4'"))
        keys = set(s.terms) | set(back.terms)
        worst = max(worst, max(abs(back.amplitude(k) - s.amplitude(k)) for k in keys))
    return worst <= 1e-12, f"max term deviation {worst:.2e}"


def c06_table1():
    q7s, q8s = qubits(9, 100), qubits(10, 100)
    failures = []
    for c in SwitchControls.table1():
        for q7, q8 in zip(q7s, q8s):
            res = oqsu(q7, q8, c)
            if not c.f:
                want = (q7, q8) if c.F == 0 else (q8, q7)
                b7, b8 = PortContent.qubit(want[0]), PortContent.qubit(want[1])
                herald, p = {"D1": 0, "D2": 0}, 0.25
            else:
                fused, vac = PortContent.fused(FusedState.from_qubits(q8, q7)), PortContent.vacuum()
                b7, b8 = (fused, vac) if c.s else (vac, fused)
                herald, p = {"D3": 1, "D5": 1, "D4": 0, "D6": 0}, 1 / 8
            ok = (res.success and res.probability == p and res.herald.as_dict() == herald
                  and res.out_b7.equal_up_to_phase(b7) and res.out_b8.equal_up_to_phase(b8))
            if not ok:
                failures.append((c.f, c.F, c.s))
                break
    return not failures, f"8 rows x 100 pairs, failing rows {failures}"


def c07_unit_average(trials=100_000, seed=1):
    exact = average_unit_probability(ff=True) == 3 / 16
    stats = monte_carlo(TrafficSpec(kind="unit", unit_f=None), trials, seed)
    sigma = math.sqrt(3 / 16 * 13 / 16 / trials)
    z = (stats.delivery_rate - 3 / 16) / sigma
    return exact and abs(z) <= 3, f"analytic {average_unit_probability()}, MC {stats.delivery_rate:.5f} (z={z:+.2f})"


def c08_variants():
    ok = True
    for (qa, qb, qc, qd) in zip(*(qubits(s, 25) for s in (11, 12, 13, 14))):
        fab, fcd = FusedState.from_qubits(qa, qb), FusedState.from_qubits(qc, qd)
        for F in (0, 1):
            res = variant_a(fab, F)
            t, p = qubit_pair(fission(fab).output, ("b5", "b6"))
            ok &= res.state.equal_up_to_phase(fredkin(t, p, F, out_paths=("c1", "c2")).output)
            ok &= res.probability == (1 / 8) * (1 / 4)
            ok &= variant_a(fab, F, ff=False).probability == (1 / 32) * (1 / 4)
            res = variant_c(fab, qc, F)
            f_out, s_out = res.outputs if F == 0 else res.outputs[::-1]
            ok &= f_out.equal_up_to_phase(PortContent.fused(fab), 1e-10)
            ok &= s_out.equal_up_to_phase(PortContent.qubit(qc), 1e-10)
            ok &= res.probability == 1 / 4
        for s in (0, 1):
            res = variant_b(fab, qc, s)
            direct, recycled = (qa, qb) if s == 0 else (qb, qa)
            ok &= res.outputs[0].kind is PortKind.QUBIT
            ok &= res.outputs[0].payload.equal_up_to_phase(direct, 1e-10)
            ok &= res.outputs[1].equal_up_to_phase(PortContent.fused(FusedState.from_qubits(recycled, qc)), 1e-10)
            ok &= res.probability == (1 / 8) * (1 / 8)
        res = variant_d(fab, fcd)
        ok &= res.outputs[0].equal_up_to_phase(PortContent.fused(FusedState.from_qubits(qa, qd)), 1e-10)
        ok &= res.outputs[1].equal_up_to_phase(PortContent.fused(FusedState.from_qubits(qc, qb)), 1e-10)
        ok &= math.isclose(res.probability, (1 / 8) ** 4, rel_tol=1e-15)
    return bool(ok), "variants a-d against composed oracles on 25 inputs each"


def c09_banyan_n4():
    details, ok = [], True
    for wiring in ("omega", "butterfly"):
        topo = build_topology(4, wiring)
        start = time.perf_counter()
        statuses = {}
        for perm in itertools.permutations(range(4)):
            pks = packets_from_permutation(perm, 4)
            statuses[perm] = (route(pks, "classical", topo, track_payloads=False).status,
                              route(pks, "quantum", topo, track_payloads=False).status)
        elapsed = time.perf_counter() - start
        o_block = [p for p in statuses if oracles.classically_blocked(topo, p)]
        o_unsup = [p for p in statuses if oracles.unsupported(topo, p)]
        blocked = [p for p, (c, _) in statuses.items() if c is RouteStatus.BLOCKED_CLASSICAL]
        unsup = [p for p, (_, q) in statuses.items() if q is RouteStatus.UNSUPPORTED_CONTENTION]
        pairwise = [p for p in o_block if p not in o_unsup]
        ok &= blocked == o_block and len(unsup) == len(o_unsup)
        ok &= all(statuses[p][1] is RouteStatus.DELIVERED for p in pairwise)
        ok &= elapsed < 1.0
        details.append(f"{wiring}: blocked {len(blocked)}/24 (oracle {len(o_block)}), "
                       f"unsupported {len(unsup)} (oracle {len(o_unsup)}), {elapsed:.3f}s")
    return ok, "; ".join(details)


def c10_banyan_n8():
    topo = build_topology(8, "omega")
    perm = oracles.single_segment_pattern(topo, 7)
    k = oracles.engaged_switches(topo, perm) - 1
    pks = packets_from_permutation(perm, 8, qubits(15, 8))
    classical = route(pks, "classical", topo).status
    res = route(pks, "quantum", topo)
    want = 0.25 ** k * 0.125 ** 2
    ok = (classical is RouteStatus.BLOCKED_CLASSICAL and res.status is RouteStatus.DELIVERED
          and len(res.fused_segments) == 1 and math.isclose(res.success_probability, want, rel_tol=1e-12))
    return ok, f"perm {perm}, k={k}, p={res.success_probability:.6e} (oracle {want:.6e})"


def c11_norm_suite():
    rng = np.random.default_rng(16)
    worst = 0.0
    for i in range(1000):
        q1, q2 = QubitSpec.random(rng), QubitSpec.random(rng)
        s = pair_state(q1, "a", q2, "b")
        op = i % 5
        if op == 0:
            out = hwp_apply(s, "a", float(rng.uniform(-90, 90)))
        elif op == 1:
            out = pbs_apply(s, "a", "b", "t", "r")
        elif op == 2:
            out = delay_apply(s, "b", int(rng.integers(0, 4)))
        elif op == 3:
            out = controlled_flip(s, int(rng.integers(2)), "a")
        else:
            z = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            u, _ = np.linalg.qr(z)
            modes = [Mode(p, pol) for p in "ab" for pol in (H, V)]
            out = apply_mode_map(s, modes, u)
        worst = max(worst, abs(out.norm_squared() - s.norm_squared()))
    a, b, c, d = (Mode(p, H) for p in "abcd")
    hom = apply_mode_map(PhotonicState.single(a, b), [a, b], np.array([[1, 1], [1, -1]]) * R, [c, d])
    oracle = {FockConfig(((c, 2),)): R, FockConfig(((d, 2),)): -R}
    hom_ok = set(hom.terms) == set(oracle) and all(abs(hom.amplitude(k) - v) < 1e-12 for k, v in oracle.items())
    return worst <= 1e-10 and hom_ok, f"max norm drift {worst:.2e}, HOM match {hom_ok}"


def c12_reproducibility():
    def report():
        cfg = cli.parse_config(["stats", "--unit", "--trials", "3000", "--seed", "4"])
        return dumps(strip_volatile(cli.run(cfg))).encode()

    same_report = report() == report()
    traffic = TrafficSpec(kind="unit")
    serial = monte_carlo(traffic, 5000, seed=4)
    parallel = monte_carlo(traffic, 5000, seed=4, n_jobs=2)
    return same_report and serial == parallel, f"byte-identical {same_report}, parallel==serial {serial == parallel}"


CRITERIA = [
    ("1 component maps", c01_plates),
    ("2 Fredkin", c02_fredkin),
    ("3 fusion", c03_fusion),
    ("4 fission roundtrip", c04_roundtrip),
    ("5 converters", c05_converters),
    ("6 switch unit table", c06_table1),
    ("7 unit average probability", c07_unit_average),
    ("8 variants a-d", c08_variants),
    ("9 Banyan N=4 exhaustive", c09_banyan_n4),
    ("10 Banyan N=8 fused segment", c10_banyan_n8),
    ("11 norm and HOM", c11_norm_suite),
    ("12 reproducibility", c12_reproducibility),
]


@pytest.mark.parametrize("name,check", CRITERIA, ids=[n.split()[0] for n, _ in CRITERIA])
def test_criterion(name, check):
    ok, detail = check()
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {name}: {detail}")
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for name, check in CRITERIA:
        t0 = time.perf_counter()
        ok, detail = check()
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} criterion {name}: {detail} [{time.perf_counter() - t0:.1f}s]")
    print(json.dumps({"passed": len(CRITERIA) - failed, "failed": failed}))
    sys.exit(1 if failed else 0)
