import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blstab.datum import Datum, frame_120, holder_pair, random_rank_one
from blstab.fourier import (
    a_p,
    conjugate_exponent,
    fbl_constant,
    fourier_norm,
    gaussian_self_duality_error,
    hy_ratio,
    strengthened_bl_check,
)
from blstab.gaussian import ComplexGaussianSpec, centered, fourier, lp_norm
from blstab.integrator import Bump, ClosedGaussian, GaussianPlusBump, zero_function
from oracles import fourier_side_gaussian_max

PI_GAUSS = centered([[math.pi]])


def test_a_p_examples():
    assert a_p(2) == 1 and a_p(1) == 1
    g = PI_GAUSS
    assert a_p(4 / 3) == pytest.approx(lp_norm(fourier(g), 4) / lp_norm(g, 4 / 3), rel=1e-14)
    for bad in (0.9, 2.5):
        with pytest.raises(ValueError):
            a_p(bad)


def test_a_p_shape():
    grid = np.linspace(1, 2, 50)
    vals = np.array([a_p(p) for p in grid])
    assert np.all(vals[1:-1] < 1)
    assert a_p(1 + 1e-9) == pytest.approx(1, abs=1e-7)
    assert a_p(2 - 1e-9) == pytest.approx(1, abs=1e-7)


def test_conjugate_exponent():
    assert conjugate_exponent(1) == math.inf
    assert conjugate_exponent(2) == 2
    assert conjugate_exponent(1.5) == pytest.approx(3)


def test_fbl_constant_examples():
    assert fbl_constant(holder_pair((2, 2)), 1.0) == 1.0
    d = Datum.from_maps([[[1, 0]], [[0, 1]]], [2, 2])
    assert fbl_constant(d, 0.7) == 0.7
    assert fbl_constant(frame_120(), 1.0) == pytest.approx(a_p(1.5) ** -3, rel=1e-14)
    with pytest.raises(ValueError):
        fbl_constant(holder_pair((3, 1.5)), 1.0)


def test_fbl_against_fourier_side_maximization():
    d = frame_120()
    best = fourier_side_gaussian_max(d.maps, d.p)
    assert fbl_constant(d, 1.0) == pytest.approx(best, rel=1e-4)


@settings(max_examples=25, deadline=None)
@given(ps=st.lists(st.floats(1.0, 2.0), min_size=2, max_size=4), bl=st.floats(0.1, 10))
def test_fbl_not_below_bl(ps, bl):
    d = Datum.from_maps([[[1.0]]] * len(ps), ps)
    out = fbl_constant(d, bl)
    assert out >= bl * (1 - 1e-12)
    if all(p in (1.0, 2.0) for p in ps):
        assert out == pytest.approx(bl)


def test_self_duality_calibration():
    assert gaussian_self_duality_error() < 1e-6


def test_hy_ratio_gaussian():
    r = hy_ratio(ClosedGaussian(centered([[0.8]])), 4 / 3)
    assert r.ratio == pytest.approx(1, abs=1e-9)
    assert r.dist_ratio == 0


def test_hy_ratio_gaussian_numeric():
    r = hy_ratio(ClosedGaussian(centered([[0.8]])), 4 / 3, numeric=True, with_distance=False)
    assert r.ratio == pytest.approx(1, abs=1e-3)


def test_hy_ratio_bump_perturbation():
    f = GaussianPlusBump(PI_GAUSS, 0.2, [0.3])
    r = hy_ratio(f, 4 / 3, starts=8)
    assert r.ratio < 1
    assert r.dist_ratio > 0 and r.implied_c > 0


def test_plancherel_ratio():
    for f in (Bump([0.0], 1.2), GaussianPlusBump(centered([[2.0]]), -0.4, [1.0])):
        assert hy_ratio(f, 2, with_distance=False).ratio == pytest.approx(1, abs=1e-6)


@pytest.mark.parametrize("p", [1.0, 1.25, 1.5, 1.8])
def test_hy_ratio_at_most_one(p):
    for f in (Bump([0.0], 0.7, power=2.0), GaussianPlusBump(centered([[1.0]]), 0.5, [-0.4], 0.5)):
        assert hy_ratio(f, p, with_distance=False).ratio <= 1 + 1e-6


def test_hy_ratio_complex_gaussian_closed_form():
    g = ComplexGaussianSpec(0.3 + 1j, [[1.0 - 0.8j]], [0.5 + 0.2j])
    assert hy_ratio(ClosedGaussian(g), 1.5, with_distance=False).ratio <= 1 + 1e-12


def test_fourier_norm_zero_function():
    assert fourier_norm(zero_function(1), 3) == 0.0


def test_strengthened_check_extremizers():
    d = frame_120()
    fs = [ClosedGaussian(centered(np.eye(1) * math.pi / p)) for p in d.p]
    out = strengthened_bl_check(d, fs, 1.0)
    assert out["lhs"] == pytest.approx(out["rhs"], rel=1e-6)
    assert out["holds"]


def test_strengthened_check_random_perturbations():
    d = frame_120()
    rng = np.random.default_rng(0)
    for _ in range(100):
        fs = [GaussianPlusBump(centered([[rng.uniform(0.5, 3)]]), rng.uniform(-0.3, 0.5),
                               [rng.normal(0, 0.5)], rng.uniform(0.5, 1.5)) for _ in range(3)]
        assert strengthened_bl_check(d, fs, 1.0)["holds"]


def test_strengthened_check_zero_slot():
    d = frame_120()
    out = strengthened_bl_check(d, [Bump([0.0]), Bump([0.0]), zero_function(1)], 1.0)
    assert out["lhs"] == 0 and out["rhs"] == 0


def test_fbl_random_rank_one_matches_gaussian_maximum():
    from blstab.optimizer import bl_constant

    d = random_rank_one(2, 3, 1)
    d = Datum.from_maps(d.maps, [1.5] * 3)
    bl = bl_constant(d, restarts=6).value
    best = fourier_side_gaussian_max(d.maps, d.p)
    assert fbl_constant(d, bl) == pytest.approx(best, rel=1e-4)
