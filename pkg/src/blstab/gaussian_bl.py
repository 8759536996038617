"""The Brascamp-Lieb functional evaluated on Gaussian tuples.

Centered inputs ``f_j(y) = exp(-<A_j y, y>)`` in the weighted (``q_j = 1/p_j``)
form give ``prod_j f_j(B_j x)^{q_j} = exp(-<M x, x>)`` with
``M = sum_j q_j B_j^T A_j B_j`` and the ratio

    det(M)^{-1/2} prod_j det(A_j)^{q_j/2}

whenever ``d = sum_j q_j d_j``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ._linalg import NotPositiveDefiniteError, as_matrix, check_pd, logdet_pd, symmetrize
from .datum import Datum, scaling_defect
from .gaussian import centered, gaussian_integral, lp_norm


@dataclass(frozen=True)
class GaussianTuple:
    """Per-factor Gaussians ``c_j exp(-<A_j (y - v_j), y - v_j>)``."""

    A: tuple
    v: Optional[tuple] = None
    c: Optional[tuple] = None

    def __post_init__(self):
        A = tuple(symmetrize(as_matrix(np.asarray(a, dtype=float))) for a in self.A)
        for j, a in enumerate(A):
            check_pd(a, "A_%d" % j)
        object.__setattr__(self, "A", A)
        if self.v is not None:
            v = tuple(np.atleast_1d(np.asarray(x, dtype=float)) for x in self.v)
            if len(v) != len(A) or any(x.shape != (a.shape[0],) for x, a in zip(v, A)):
                raise ValueError("offsets do not match the matrices")
            object.__setattr__(self, "v", v)
        if self.c is not None:
            c = tuple(float(x) for x in self.c)
            if len(c) != len(A) or any(not x > 0 for x in c):
                raise ValueError("amplitudes must be positive, one per factor")
            object.__setattr__(self, "c", c)

    @property
    def m(self):
        return len(self.A)

    @property
    def offsets(self):
        return self.v if self.v is not None else tuple(np.zeros(a.shape[0]) for a in self.A)

    def scaled(self, r: float) -> "GaussianTuple":
        return replace(self, A=tuple(r * a for a in self.A))

    def centered(self) -> "GaussianTuple":
        return GaussianTuple(self.A)

    def with_offsets(self, v) -> "GaussianTuple":
        return replace(self, v=tuple(v))

    def to_dict(self) -> dict:
        out = {"A": [a.tolist() for a in self.A]}
        if self.v is not None:
            out["v"] = [x.tolist() for x in self.v]
        if self.c is not None:
            out["c"] = list(self.c)
        return out

    @classmethod
    def from_dict(cls, obj) -> "GaussianTuple":
        return cls(tuple(obj["A"]), tuple(obj["v"]) if "v" in obj else None,
                   tuple(obj["c"]) if "c" in obj else None)

    @classmethod
    def identity(cls, datum: Datum) -> "GaussianTuple":
        return cls(tuple(np.eye(dj) for dj in datum.dims))


def _check_tuple(datum, tup):
    if tup.m != datum.m:
        raise ValueError("tuple has %d factors, datum has %d" % (tup.m, datum.m))
    for j, (a, dj) in enumerate(zip(tup.A, datum.dims)):
        if a.shape != (dj, dj):
            raise ValueError("A_%d has shape %r, expected (%d, %d)" % (j, a.shape, dj, dj))


def m_matrix(datum: Datum, tup: GaussianTuple) -> np.ndarray:
    """``M_A = sum_j q_j B_j^T A_j B_j``; raises if it is not positive definite.

    A singular ``M_A`` means the kernels of the ``B_j`` (with ``q_j > 0``)
    share a nonzero vector and the constant is infinite.
    """
    _check_tuple(datum, tup)
    M = np.zeros((datum.d, datum.d))
    for f, a in zip(datum.factors, tup.A):
        if f.q:
            M += f.q * (f.matrix.T @ a @ f.matrix)
    M = symmetrize(M)
    try:
        check_pd(M, "M_A")
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(
            "%s: the kernels of the maps intersect nontrivially, constant is infinite" % exc
        ) from None
    return M


@dataclass
class CenteredValueReport:
    M: np.ndarray
    value: float
    normalized: bool
    det_M: float
    min_eig: float
    pi_correction: float = 1.0

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "det_M": self.det_M,
            "min_eig": self.min_eig,
            "normalized": self.normalized,
            "pi_correction": self.pi_correction,
        }


def log_value(datum: Datum, tup: GaussianTuple, M: Optional[np.ndarray] = None) -> float:
    """Log of the closed-form ratio, including the pi correction when ``d != sum q_j d_j``."""
    if M is None:
        M = m_matrix(datum, tup)
    out = -0.5 * logdet_pd(M)
    for f, a in zip(datum.factors, tup.A):
        if f.q:
            out += 0.5 * f.q * logdet_pd(a)
    return out + 0.5 * scaling_defect(datum) * math.log(math.pi)


def gaussian_bl_value(datum: Datum, tup: GaussianTuple, warn: bool = True) -> CenteredValueReport:
    M = m_matrix(datum, tup)
    sd = scaling_defect(datum)
    if warn and abs(sd) > 1e-12:
        warnings.warn("scaling condition fails (defect %.3g); the constant is infinite and "
                      "the value includes a pi^(%.3g) factor" % (sd, sd / 2), RuntimeWarning)
    lam = np.linalg.eigvalsh(M)
    det_M = float(np.prod(lam))
    return CenteredValueReport(
        M=M,
        value=math.exp(log_value(datum, tup, M)),
        normalized=abs(det_M - 1.0) <= 1e-10,
        det_M=det_M,
        min_eig=float(lam[0]),
        pi_correction=math.pi ** (sd / 2),
    )


def centered_blbp_p(datum: Datum, C: GaussianTuple) -> float:
    """Ratio for ``h_j = exp(-<C_j y, y>)`` against ``prod ||h_j||_{p_j}``.

    Since ``h_j^{p_j} = exp(-<p_j C_j y, y>)`` this is the weighted-form value
    at ``A_j = p_j C_j``.
    """
    if np.any(np.isinf(datum.p)):
        raise ValueError("infinite exponents are not supported here")
    A = GaussianTuple(tuple(p * c for p, c in zip(datum.p, C.A)))
    return gaussian_bl_value(datum, A).value


def normalize_det(datum: Datum, tup: GaussianTuple) -> GaussianTuple:
    """Rescale to ``det(M_A) = 1``; the value is unchanged by scaling symmetry."""
    M = m_matrix(datum, tup)
    r = math.exp(-logdet_pd(M) / datum.d)
    return tup.scaled(r)


@dataclass
class CompletedSquare:
    center: np.ndarray
    c: float
    centered: GaussianTuple
    residuals: list = field(default_factory=list)


def complete_square(datum: Datum, tup: GaussianTuple) -> CompletedSquare:
    """Write ``prod_j f_j(B_j x)^{q_j}`` as ``c exp(-<M (x - xbar), x - xbar>)``.

    Amplitudes are ignored (the ratio does not see them).  ``c == 1`` exactly
    when every offset is ``v_j = B_j xbar``.
    """
    M = m_matrix(datum, tup)
    b = np.zeros(datum.d)
    for f, a, v in zip(datum.factors, tup.A, tup.offsets):
        if f.q:
            b += f.q * (f.matrix.T @ (a @ v))
    xbar = np.linalg.solve(M, b)
    log_c = 0.0
    residuals = []
    for f, a, v in zip(datum.factors, tup.A, tup.offsets):
        r = f.matrix @ xbar - v
        residuals.append(r)
        if f.q:
            log_c -= f.q * float(r @ a @ r)
    return CompletedSquare(xbar, math.exp(min(log_c, 0.0)), tup.centered(), residuals)


def offset_gaussian_ratio(datum: Datum, tup: GaussianTuple) -> float:
    cs = complete_square(datum, tup)
    return cs.c * gaussian_bl_value(datum, cs.centered).value


def consistent_offsets(datum: Datum, x0) -> tuple:
    """The offset tuple ``(B_j x0)_j``, an element of the consistent subspace."""
    x0 = np.asarray(x0, dtype=float)
    return tuple(B @ x0 for B in datum.maps)


def distance_to_consistent(datum: Datum, offsets: Sequence) -> float:
    """Euclidean distance from ``(v_j)`` to ``{(B_j x)_j : x in R^d}``."""
    stacked = np.vstack(datum.maps)
    v = np.concatenate([np.atleast_1d(x) for x in offsets])
    x, *_ = np.linalg.lstsq(stacked, v, rcond=None)
    return float(np.linalg.norm(stacked @ x - v))


def closed_bl_integral(datum: Datum, gaussians) -> complex:
    """``int prod_j g_j(B_j x) dx`` for complex Gaussian specs (p-form, unit weights)."""
    from .gaussian import pullback_exponent

    S, w, c = pullback_exponent(gaussians, datum, [1.0] * datum.m)
    return c * gaussian_integral(S, w)


def modulated_blbp(datum: Datum, base: GaussianTuple, phases: Sequence) -> complex:
    """Complex ratio for ``f_j(y) = exp(-<C_j y, y>) exp(i <P_j y, y>)``.

    ``base`` holds the ``C_j`` (p-form, centered).  The modulus of the result
    is the Brascamp-Lieb ratio of the modulated tuple.
    """
    _check_tuple(datum, base)
    if len(phases) != datum.m:
        raise ValueError("need one phase matrix per factor")
    S = np.zeros((datum.d, datum.d), dtype=complex)
    denom = 1.0
    for f, C, P in zip(datum.factors, base.A, phases):
        P = as_matrix(np.asarray(P, dtype=float), C.shape[0])
        S += f.matrix.T @ (C - 1j * P) @ f.matrix
        denom *= lp_norm(centered(C), f.p)
    return gaussian_integral(S) / denom
