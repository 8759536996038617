import math

import numpy as np
import pytest

from blstab.datum import (Datum, frame_120, holder_pair, is_geometric, loomis_whitney_2d,
                          random_rank_one)
from blstab.gaussian_bl import GaussianTuple, gaussian_bl_value, log_value, normalize_det
from blstab.optimizer import (
    _pack,
    bl_constant,
    compactness_probe,
    degenerate_tuple,
    el_residual,
    fixed_point_iterate,
    geometric_reduce,
    gradient_ascent,
    log_value_and_grad,
    random_tuple,
)
from oracles import young_brute_force

YOUNG = Datum.from_maps([[[1, 0]], [[0, 1]], [[1, -1]]], [1.5] * 3)


def test_el_residual_examples():
    d = frame_120()
    assert el_residual(d, GaussianTuple.identity(d)) < 1e-14
    lw = loomis_whitney_2d((1, 1))
    assert el_residual(lw, GaussianTuple(([[3.0]], [[0.1]]))) < 1e-14
    assert el_residual(d, GaussianTuple(([[1.0]], [[2.0]], [[0.5]]))) > 1e-3


def test_fixed_point_examples():
    d = frame_120()
    r = fixed_point_iterate(d, GaussianTuple.identity(d))
    assert r.converged and r.iterations == 0 and r.value == pytest.approx(1, abs=1e-14)
    h = holder_pair((2, 2))
    r = fixed_point_iterate(h, GaussianTuple(([[1.0]], [[4.0]])))
    assert r.converged and r.value == pytest.approx(1, abs=1e-10)
    assert r.maximizer.A[0][0, 0] == pytest.approx(r.maximizer.A[1][0, 0], rel=1e-8)


def test_fixed_point_is_monotone_on_simple_datum():
    d = random_rank_one(2, 4, 3)
    r = fixed_point_iterate(d, random_tuple(d, np.random.default_rng(1)), max_iters=300)
    assert r.monotone
    values = [t[1] for t in r.trace]
    assert all(b >= a * (1 - 1e-12) for a, b in zip(values, values[1:]))


def test_divergence_on_infeasible_datum():
    d = Datum.from_maps([[[1, 0]], [[1, 0]], [[0, 1]]], [1, 2, 2])
    r = bl_constant(d, restarts=2, seed=0)
    assert r.divergence_flag
    assert "diverged" in r.note


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    for seed in range(20):
        d = random_rank_one(3, 5, seed) if seed % 2 else frame_120()
        theta = _pack(d, random_tuple(d, rng, scale=0.5))
        F, g, _, _ = log_value_and_grad(d, theta)
        h = 1e-6
        fd = np.array([(log_value_and_grad(d, theta + h * e)[0]
                        - log_value_and_grad(d, theta - h * e)[0]) / (2 * h)
                       for e in np.eye(len(theta))])
        assert np.linalg.norm(fd - g) <= 1e-5 * max(np.linalg.norm(g), 1e-3)


@pytest.mark.parametrize("datum", [loomis_whitney_2d((1, 1)), frame_120(), holder_pair((3, 1.5))])
def test_geometric_constant_is_one(datum):
    r = bl_constant(datum, restarts=5, seed=1)
    assert r.value == pytest.approx(1, abs=1e-8)
    assert not r.divergence_flag


def test_simple_data_restarts_agree():
    assert bl_constant(frame_120(), restarts=5).restarts_agree
    assert bl_constant(holder_pair((2, 2)), restarts=5).restarts_agree


def test_young_constant():
    expected, _ = young_brute_force()
    r = bl_constant(YOUNG, restarts=6, seed=2)
    assert r.value == pytest.approx(expected, abs=1e-6)
    assert r.value == pytest.approx(math.sqrt(3) / 2, abs=1e-6)


def test_gradient_ascent_improves_value():
    d = random_rank_one(3, 5, 7)
    A0 = random_tuple(d, np.random.default_rng(5), scale=1.0)
    r = gradient_ascent(d, A0)
    assert r.value >= gaussian_bl_value(d, A0).value - 1e-12
    assert r.el_residual < 1e-6


def test_sup_property():
    d = random_rank_one(2, 4, 11)
    best = bl_constant(d, restarts=6).value
    rng = np.random.default_rng(2)
    for _ in range(200):
        t = random_tuple(d, rng, scale=rng.uniform(0.1, 3))
        assert gaussian_bl_value(d, t).value <= best + 1e-8


def test_deterministic_given_seed():
    d = random_rank_one(3, 5, 2)
    a = bl_constant(d, restarts=3, seed=9).to_dict(with_trace=True)
    b = bl_constant(d, restarts=3, seed=9, workers=2).to_dict(with_trace=True)
    assert a == b


def test_reduce_identity_on_geometric():
    d = frame_120()
    red = geometric_reduce(d, GaussianTuple.identity(d))
    assert all(np.allclose(e, np.eye(1)) for e in red.E)
    assert np.allclose(red.F, np.eye(2))
    for a, b in zip(red.datum.maps, d.maps):
        assert np.allclose(np.abs(a), np.abs(b))


def test_reduce_holder_and_random():
    h = holder_pair((2, 2))
    red = geometric_reduce(h, GaussianTuple(([[2.5]], [[2.5]])))
    assert np.allclose(np.abs(red.datum.maps[0]), 1)
    for seed, (d, m) in enumerate([(2, 3), (3, 5)]):
        datum = random_rank_one(d, m, seed + 1)
        best = bl_constant(datum, restarts=4)
        red = geometric_reduce(datum, best.maximizer)
        assert is_geometric(red.datum)[0]
        assert bl_constant(red.datum, restarts=3).value == pytest.approx(1, abs=1e-6)


def test_reduce_refuses_non_stationary():
    d = frame_120()
    with pytest.raises(ValueError):
        geometric_reduce(d, GaussianTuple(([[1.0]], [[3.0]], [[0.5]])))


def test_compactness_probe():
    d = frame_120()
    rep = compactness_probe(d, 0.9, n_samples=300, seed=0)
    assert rep.n_high >= 1
    assert 0 < rep.a_eig_min <= 1 <= rep.a_eig_max < math.inf
    assert rep.low_ratio_below_eta
    t = degenerate_tuple(d, 1e-6)
    assert gaussian_bl_value(d, t).value < 0.9
    assert math.isclose(math.exp(log_value(d, normalize_det(d, t))), gaussian_bl_value(d, t).value)
