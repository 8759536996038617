import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blstab.datum import Datum, frame_120, holder_pair, loomis_whitney_2d, random_rank_one
from blstab.gaussian import ComplexGaussianSpec, centered
from blstab.gaussian_bl import (
    GaussianTuple,
    centered_blbp_p,
    complete_square,
    consistent_offsets,
    distance_to_consistent,
    gaussian_bl_value,
    m_matrix,
    modulated_blbp,
    normalize_det,
    offset_gaussian_ratio,
)
from blstab.integrator import ClosedGaussian, blbp_ratio
from blstab._linalg import NotPositiveDefiniteError
from blstab.optimizer import random_tuple


def offset_specs(datum, tup):
    """``f_j^{q_j}`` for ``f_j = exp(-A_j (y - v_j)^2)`` as closed Gaussians."""
    out = []
    for f, a, v in zip(datum.factors, tup.A, tup.offsets):
        S = f.q * a
        out.append(ClosedGaussian(ComplexGaussianSpec(math.exp(-float(v @ S @ v)), S, 2 * S @ v)))
    return out


def test_m_matrix_examples():
    assert np.allclose(m_matrix(loomis_whitney_2d((1, 1)), GaussianTuple.identity(loomis_whitney_2d((1, 1)))), np.eye(2))
    assert np.allclose(m_matrix(frame_120(), GaussianTuple.identity(frame_120())), np.eye(2), atol=1e-14)
    with pytest.raises(NotPositiveDefiniteError):
        m_matrix(Datum.from_maps([[[1, 0]], [[1, 0]]], [2, 2]), GaussianTuple(([[1.0]], [[1.0]])))


def test_value_examples():
    for datum in (loomis_whitney_2d((1, 1)), frame_120(), holder_pair((3, 1.5))):
        assert gaussian_bl_value(datum, GaussianTuple.identity(datum)).value == pytest.approx(1, abs=1e-14)
    lw = loomis_whitney_2d((1, 1))
    assert gaussian_bl_value(lw, GaussianTuple(([[3.0]], [[0.2]]))).value == pytest.approx(1, abs=1e-14)
    h = holder_pair((2, 2))
    assert gaussian_bl_value(h, GaussianTuple(([[1.0]], [[4.0]]))).value == pytest.approx(math.sqrt(0.8), abs=1e-14)


def test_infeasible_scaling_warns():
    with pytest.warns(RuntimeWarning):
        gaussian_bl_value(loomis_whitney_2d((2, 2)), GaussianTuple(([[1.0]], [[1.0]])))


def test_centered_p_form_examples():
    d = frame_120()
    assert centered_blbp_p(d, GaussianTuple(tuple(np.eye(1) / p for p in d.p))) == pytest.approx(1, abs=1e-14)
    assert centered_blbp_p(holder_pair((2, 2)), GaussianTuple(([[1.0]], [[1.0]]))) == pytest.approx(1, abs=1e-14)


@pytest.mark.parametrize("seed", range(6))
def test_centered_p_form_matches_quadrature(seed):
    d = [2, 3][seed % 2]
    datum = random_rank_one(d, d + 1 + seed % 2, seed)
    C = random_tuple(datum, np.random.default_rng(seed))
    fs = [ClosedGaussian(centered(c)) for c in C.A]
    assert blbp_ratio(datum, fs) == pytest.approx(centered_blbp_p(datum, C), rel=1e-6)


def test_normalize_det():
    datum = frame_120()
    tup = GaussianTuple(tuple(np.eye(1) * 4 for _ in range(3)))
    assert np.linalg.det(m_matrix(datum, tup)) == pytest.approx(16)
    n = normalize_det(datum, tup)
    assert n.A[0][0, 0] == pytest.approx(1.0)
    same = normalize_det(datum, GaussianTuple.identity(datum))
    assert np.allclose(same.A[0], 1.0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), log_r=st.floats(-3, 3))
def test_scaling_symmetry(seed, log_r):
    datum = random_rank_one(3, 5, seed % 50)
    tup = random_tuple(datum, np.random.default_rng(seed), scale=0.7)
    v = gaussian_bl_value(datum, tup).value
    assert gaussian_bl_value(datum, tup.scaled(math.exp(log_r))).value == pytest.approx(v, rel=1e-12)
    assert gaussian_bl_value(datum, normalize_det(datum, tup)).value == pytest.approx(v, rel=1e-12)


def test_complete_square_examples():
    datum = frame_120()
    tup = GaussianTuple.identity(datum)
    cs = complete_square(datum, tup)
    assert np.allclose(cs.center, 0) and cs.c == 1
    x0 = np.array([0.4, -1.3])
    cs = complete_square(datum, tup.with_offsets(consistent_offsets(datum, x0)))
    assert np.allclose(cs.center, x0) and cs.c == pytest.approx(1, abs=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_offset_value_matches_quadrature(seed):
    datum = random_rank_one(2, 3 + seed % 2, seed)
    rng = np.random.default_rng(seed)
    tup = random_tuple(datum, rng).with_offsets([rng.normal(size=dj) for dj in datum.dims])
    expected = offset_gaussian_ratio(datum, tup)
    assert blbp_ratio(datum, offset_specs(datum, tup)) == pytest.approx(expected, rel=1e-5)


def test_offset_ratio_decreases_away_from_consistent_subspace():
    datum = frame_120()
    tup = GaussianTuple.identity(datum)
    base = gaussian_bl_value(datum, tup).value
    inside = tup.with_offsets(consistent_offsets(datum, [1.0, 2.0]))
    assert offset_gaussian_ratio(datum, inside) == pytest.approx(base, abs=1e-14)
    direction = [np.array([1.0]), np.array([1.0]), np.array([1.0])]
    assert distance_to_consistent(datum, direction) > 0.5
    vals = [offset_gaussian_ratio(datum, tup.with_offsets([s * x for x in direction]))
            for s in (0.1, 0.5, 1.0, 2.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < base


def test_modulated_examples():
    datum = frame_120()
    C = GaussianTuple(tuple(np.eye(1) / p for p in datum.p))
    z = modulated_blbp(datum, C, [np.zeros((1, 1))] * 3)
    assert z.imag == 0 and z.real == pytest.approx(centered_blbp_p(datum, C), abs=1e-14)
    h = holder_pair((2, 2))
    z = modulated_blbp(h, GaussianTuple(([[1.0]], [[1.0]])), [[[0.7]], [[-0.7]]])
    assert abs(z) == pytest.approx(1.0, abs=1e-14)
    z = modulated_blbp(h, GaussianTuple(([[1.0]], [[1.0]])), [[[0.7]], [[0.7]]])
    assert abs(z) < 1


def test_tuple_json_round_trip():
    t = GaussianTuple(([[1.0, 0.2], [0.2, 2.0]], [[3.0]]), v=([0.1, 0.2], [1.0]), c=(1.0, 2.0))
    back = GaussianTuple.from_dict(t.to_dict())
    assert all(np.allclose(a, b) for a, b in zip(back.A, t.A))
    assert back.c == t.c
    with pytest.raises(ValueError):
        GaussianTuple(([[1.0]],), c=(0.0,))
    with pytest.raises(NotPositiveDefiniteError):
        GaussianTuple(([[-1.0]],))
