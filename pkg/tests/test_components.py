import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbanyan.components import (
    ClickPattern,
    DetectorModel,
    HwpSetting,
    check_bit,
    controlled_flip,
    delay_apply,
    detect,
    hwp_apply,
    hwp_matrix,
    pbs_apply,
)
from qbanyan.exceptions import UnsupportedControlError
from qbanyan.fock import H, V, Mode, PhotonicState, QubitSpec, make_qubit_state, tensor

R = 1 / math.sqrt(2)

# Column j is the image of basis state j (H, V).
PLATE_MAPS = {
    22.5: {H: (R, R), V: (R, -R)},
    67.5: {H: (-R, R), V: (R, R)},
    45.0: {H: (0, 1), V: (1, 0)},
    -22.5: {H: (R, -R), V: (-R, -R)},
}


def image(theta, pol):
    out = hwp_apply(PhotonicState.single(Mode("a", pol)), "a", theta)
    return out.amplitude([Mode("a", H)]), out.amplitude([Mode("a", V)])


@pytest.mark.parametrize("theta", sorted(PLATE_MAPS))
def test_plate_maps(theta):
    for pol, expected in PLATE_MAPS[theta].items():
        assert np.allclose(image(theta, pol), expected, atol=1e-12, rtol=0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-720, 720, allow_nan=False))
def test_plate_is_a_real_involution(theta):
    u = hwp_matrix(theta)
    assert np.allclose(u @ u, np.eye(2), atol=1e-12)
    assert np.allclose(u, hwp_matrix(theta + 180.0), atol=1e-9)


def test_plate_angle_is_canonicalized():
    assert HwpSetting(112.5).theta == pytest.approx(-67.5)
    assert HwpSetting(90.0).theta == 90.0
    with pytest.raises(ValueError):
        HwpSetting(float("inf"))


def test_pbs_transmits_h_reflects_v():
    q = QubitSpec(0.6, 0.8)
    s = pbs_apply(make_qubit_state("in1", 0, q), "in1", None, "t", "r")
    assert s.amplitude([Mode("t", H)]) == pytest.approx(0.6)
    assert s.amplitude([Mode("r", V)]) == pytest.approx(0.8)
    s2 = pbs_apply(make_qubit_state("in2", 0, q), "in1", "in2", "t", "r")
    assert s2.amplitude([Mode("r", H)]) == pytest.approx(0.6)
    assert s2.amplitude([Mode("t", V)]) == pytest.approx(0.8)


def test_delay_and_flip():
    s = make_qubit_state("a", 0, QubitSpec(0.6, 0.8))
    d = delay_apply(s, "a", 2)
    assert d.amplitude([Mode("a", H, 2)]) == pytest.approx(0.6)
    f = controlled_flip(s, 1, "a")
    assert f.amplitude([Mode("a", V)]) == pytest.approx(0.6)
    assert controlled_flip(s, 0, "a") is s
    with pytest.raises(ValueError):
        delay_apply(s, "a", -1)


def test_flip_acts_on_one_bin_only():
    s = PhotonicState.single(Mode("a", H, 0))
    s2 = PhotonicState.single(Mode("a", H, 1))
    assert controlled_flip(s, 1, "a", bin=1).allclose(s)
    assert controlled_flip(s2, 1, "a", bin=1).amplitude([Mode("a", V, 1)]) == 1


@pytest.mark.parametrize("bad", [2, -1, 0.5, "1", None])
def test_controls_must_be_classical_bits(bad):
    with pytest.raises(UnsupportedControlError):
        check_bit(bad)


def test_detector_binomial_thinning():
    m = DetectorModel(efficiency=0.5)
    r = m.response(3)
    for k in range(4):
        assert r[k] == pytest.approx(math.comb(3, k) / 8)
    dark = DetectorModel(efficiency=1.0, dark_count_prob=0.1)
    assert dark.response(0) == pytest.approx({0: 0.9, 1: 0.1})
    bucket = DetectorModel(efficiency=0.5, number_resolving=False)
    assert bucket.response(2) == pytest.approx({0: 0.25, 1: 0.75})
    with pytest.raises(ValueError):
        DetectorModel(efficiency=1.5)


def test_detect_analytic_and_sampled():
    q = QubitSpec(0.6, 0.8)
    s = pbs_apply(make_qubit_state("a", 0, q), "a", None, "t", "r")
    dets = {"DT": ("t", None), "DR": ("r", None)}
    outcomes = detect(s, dets)
    probs = {str(o.pattern): o.probability for o in outcomes}
    assert probs == pytest.approx({"DR=0,DT=1": 0.36, "DR=1,DT=0": 0.64})
    assert all(o.state.is_normalized() for o in outcomes)
    drawn = [detect(s, dets, rng=np.random.default_rng([3, i])).pattern for i in range(4000)]
    frac = sum(p == ClickPattern.from_dict({"DT": 1, "DR": 0}) for p in drawn) / len(drawn)
    assert abs(frac - 0.36) < 4 * math.sqrt(0.36 * 0.64 / len(drawn))


def test_detect_keeps_unmeasured_photon_coherent():
    q = QubitSpec(0.6, 0.8j)
    s = tensor(make_qubit_state("keep", 0, q), PhotonicState.single(Mode("herald", H)))
    (out,) = detect(s, {"D": ("herald", None)})
    assert out.probability == pytest.approx(1.0)
    assert out.state.allclose(make_qubit_state("keep", 0, q))
