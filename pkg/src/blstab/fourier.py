"""Hausdorff-Young constants and the Fourier-side form of the inequality.

With ``fhat(xi) = int f(x) exp(-2 pi i <x, xi>) dx`` the sharp Hausdorff-Young
inequality reads ``||fhat||_{p'} <= a_p(p)^d ||f||_p`` for ``1 <= p <= 2``, with
equality for Gaussians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .datum import Datum
from .gaussian import fourier, lp_norm
from .integrator import (
    COMPLEX,
    ClosedGaussian,
    GridFunction,
    ModulatedGaussian,
    QuadratureOpts,
    as_spec,
    bl_integral_numeric,
    dist_to_gaussians,
    fourier_numeric,
    lp_norm_numeric,
)


def conjugate_exponent(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def a_p(p: float) -> float:
    """``(p^{1/p} / p'^{1/p'})^{1/2}``, restricted to ``1 <= p <= 2``."""
    if not 1.0 <= p <= 2.0:
        raise ValueError("a_p is only provided for 1 <= p <= 2, got %r" % p)
    if p == 1.0:
        return 1.0
    pp = conjugate_exponent(p)
    return math.sqrt(p ** (1.0 / p) / pp ** (1.0 / pp))


def _check_fourier_range(datum: Datum):
    bad = [j for j, p in enumerate(datum.p) if not 1.0 <= p <= 2.0]
    if bad:
        raise ValueError("exponents of factors %s lie outside [1, 2]" % bad)


def fbl_constant(datum: Datum, bl_value: float) -> float:
    """Fourier-side constant ``bl_value * prod_j a_p(p_j)^{-d_j}``."""
    if not math.isfinite(bl_value):
        raise ValueError("the constant must be finite")
    _check_fourier_range(datum)
    out = float(bl_value)
    for f in datum.factors:
        out *= a_p(f.p) ** (-f.dim)
    return out


def _closed_form(f):
    f = as_spec(f)
    if isinstance(f, ClosedGaussian):
        return f.g
    if isinstance(f, ModulatedGaussian):
        return f.as_gaussian()
    return None


def fourier_norm(f, p_dual: float, opts: Optional[QuadratureOpts] = None,
                 numeric: bool = False) -> float:
    """``||fhat||_{p_dual}``, closed form for Gaussian specs unless ``numeric``."""
    f = as_spec(f)
    g = _closed_form(f)
    if g is not None and not numeric:
        return lp_norm(fourier(g), p_dual)
    if not isinstance(f, GridFunction) and not f.pieces((opts or QuadratureOpts()).level):
        return 0.0
    return lp_norm_numeric(fourier_numeric(f, opts), p_dual, opts).value


@dataclass
class HYReport:
    ratio: float
    dist_ratio: Optional[float]
    implied_c: Optional[float]
    p: float
    fourier_norm: float
    norm: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def hy_ratio(f, p: float, opts: Optional[QuadratureOpts] = None, numeric: bool = False,
             with_distance: bool = True, starts: int = 16, seed: int = 0) -> HYReport:
    """Ratio ``||fhat||_{p'} / (a_p^d ||f||_p)`` plus the stability quantities.

    ``dist_ratio`` is the best-found relative distance to complex Gaussians and
    is only computed for ``1 < p < 2``; ``implied_c = (1 - ratio) / dist_ratio^2``.
    """
    f = as_spec(f)
    if not 1.0 <= p <= 2.0:
        raise ValueError("Hausdorff-Young needs 1 <= p <= 2, got %r" % p)
    pp = conjugate_exponent(p)
    g = _closed_form(f)
    if g is not None and not numeric:
        norm = lp_norm(g, p)
    else:
        norm = lp_norm_numeric(f, p, opts).value
    if not norm > 0:
        raise ValueError("the input has zero norm")
    fn = fourier_norm(f, pp, opts, numeric=numeric)
    ratio = fn / (a_p(p) ** f.dim * norm)
    dist_ratio = implied_c = None
    if with_distance and 1.0 < p < 2.0:
        dist_ratio = dist_to_gaussians(f, p, COMPLEX, opts, starts=starts, seed=seed).relative
        if dist_ratio > 0:
            implied_c = (1.0 - ratio) / dist_ratio ** 2
    return HYReport(ratio, dist_ratio, implied_c, p, fn, norm)


def strengthened_bl_check(datum: Datum, fs: Sequence, bl_value: float,
                          opts: Optional[QuadratureOpts] = None, tol: float = 1e-6) -> dict:
    """Compare ``|int prod f_j(B_j x) dx|`` with ``bl_value prod a_p^{-d_j} ||fhat_j||_{p_j'}``."""
    _check_fourier_range(datum)
    fs = [as_spec(f) for f in fs]
    lhs = abs(bl_integral_numeric(datum, fs, opts).value)
    rhs = fbl_constant(datum, bl_value)
    for f, fac in zip(fs, datum.factors):
        rhs *= fourier_norm(f, conjugate_exponent(fac.p), opts)
    return {"lhs": float(lhs), "rhs": float(rhs), "holds": bool(lhs <= rhs * (1 + tol) + 1e-300)}


def gaussian_self_duality_error(n_points: Optional[int] = None) -> float:
    """Max deviation of the grid transform of ``exp(-pi x^2)`` from itself."""
    from .gaussian import centered

    g = ClosedGaussian(centered([[math.pi]]))
    G = fourier_numeric(g, QuadratureOpts(points_per_axis=n_points))
    xi = G.axes[0]
    return float(np.max(np.abs(G.values - np.exp(-math.pi * xi ** 2))))
