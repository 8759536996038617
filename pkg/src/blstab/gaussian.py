"""Closed-form algebra of real and complex Gaussian functions.

Fourier transforms use the convention ``fhat(xi) = int f(x) exp(-2 pi i <x, xi>) dx``.
Quadratic forms are bilinear (no conjugation): ``<S y, y> = y^T S y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._linalg import NotPositiveDefiniteError, as_matrix, check_pd, symmetrize


def _cvec(w, n):
    w = np.zeros(n, dtype=complex) if w is None else np.atleast_1d(np.asarray(w, dtype=complex))
    if w.shape != (n,):
        raise ValueError("expected a vector of length %d, got shape %r" % (n, w.shape))
    return w


def _check_complex_symmetric(S):
    S = np.asarray(S, dtype=complex)
    scale = max(1.0, float(np.abs(S).max()))
    if np.abs(S - S.T).max() > 1e-12 * scale:
        raise ValueError("exponent matrix is not symmetric")
    return 0.5 * (S + S.T)


def sqrt_det_inv(S):
    """``det(S)^{-1/2}`` on the branch continuous from real positive-definite ``S``.

    Eigenvalues of a complex symmetric matrix with positive-definite real part
    lie in the open right half-plane, so the product of principal reciprocal
    square roots is continuous along ``Re S + t i Im S``.
    """
    lam = np.linalg.eigvals(np.asarray(S, dtype=complex))
    return complex(np.prod(1.0 / np.sqrt(lam)))


def gaussian_integral(S, w=None) -> complex:
    """``int_{R^n} exp(-<S x, x> + w.x) dx`` for ``Re S`` positive definite."""
    S = _check_complex_symmetric(as_matrix(S))
    n = S.shape[0]
    w = _cvec(w, n)
    try:
        check_pd(S.real, "Re(S)")
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError("divergent Gaussian integral: %s" % exc) from None
    quad = w @ np.linalg.solve(S, w)
    return complex(math.pi ** (n / 2) * sqrt_det_inv(S) * np.exp(quad / 4))


@dataclass(frozen=True)
class RealGaussian:
    """``y -> c exp(-<A (y - v), y - v>)`` with ``A`` symmetric positive definite."""

    c: float
    A: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        A = as_matrix(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        check_pd(A, "A")
        v = np.zeros(n) if self.v is None else np.atleast_1d(np.asarray(self.v, dtype=float))
        if v.shape != (n,):
            raise ValueError("offset has wrong length")
        if not self.c > 0:
            raise ValueError("amplitude must be positive")
        object.__setattr__(self, "A", symmetrize(A))
        object.__setattr__(self, "v", v)

    @property
    def dim(self):
        return self.A.shape[0]

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        z = y - self.v
        return self.c * np.exp(-np.einsum("...i,ij,...j->...", z, self.A, z))

    def to_complex(self) -> "ComplexGaussianSpec":
        """Same function written as ``c' exp(-<A y, y> + w.y)``."""
        w = 2.0 * self.A @ self.v
        c = self.c * math.exp(-float(self.v @ self.A @ self.v))
        return ComplexGaussianSpec(complex(c), self.A.astype(complex), w.astype(complex))


@dataclass(frozen=True)
class ComplexGaussianSpec:
    """``y -> c exp(-<S y, y> + w.y)`` with ``Re S`` positive definite."""

    c: complex
    S: np.ndarray
    w: np.ndarray = None

    def __post_init__(self):
        S = _check_complex_symmetric(as_matrix(self.S))
        check_pd(S.real, "Re(S)")
        n = S.shape[0]
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "w", _cvec(self.w, n))
        c = complex(self.c)
        if c == 0:
            raise ValueError("amplitude must be nonzero")
        object.__setattr__(self, "c", c)

    @property
    def dim(self) -> int:
        return self.S.shape[0]

    @property
    def in_complex_class(self) -> bool:
        """Membership in the complex Gaussian class (real quadratic part)."""
        return bool(np.all(self.S.imag == 0))

    @property
    def is_positive(self) -> bool:
        return (self.in_complex_class and self.c.imag == 0 and self.c.real > 0
                and bool(np.all(self.w.imag == 0)))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.dim == 1 and (y.ndim == 0 or y.shape[-1] != 1):
            y = y[..., None]
        quad = np.einsum("...i,ij,...j->...", y, self.S, y)
        return self.c * np.exp(-quad + y @ self.w)

    def modulus_peak(self):
        """Centre and value of the maximum of ``|g|``."""
        R = self.S.real
        mu = 0.5 * np.linalg.solve(R, self.w.real)
        peak = abs(self.c) * math.exp(0.25 * float(self.w.real @ np.linalg.solve(R, self.w.real)))
        return mu, peak

    def scaled(self, factor) -> "ComplexGaussianSpec":
        return ComplexGaussianSpec(self.c * factor, self.S, self.w)

    def reflected(self) -> "ComplexGaussianSpec":
        return ComplexGaussianSpec(self.c, self.S, -self.w)

    def to_dict(self) -> dict:
        return {
            "c_re": self.c.real, "c_im": self.c.imag,
            "S_re": self.S.real.tolist(), "S_im": self.S.imag.tolist(),
            "w_re": self.w.real.tolist(), "w_im": self.w.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ComplexGaussianSpec":
        S = np.asarray(obj["S_re"], dtype=float) + 1j * np.asarray(obj.get("S_im", 0.0))
        S = as_matrix(S)
        n = S.shape[0]
        w_re = np.asarray(obj.get("w_re", np.zeros(n)), dtype=float)
        w_im = np.asarray(obj.get("w_im", np.zeros(n)), dtype=float)
        return cls(complex(obj.get("c_re", 1.0), obj.get("c_im", 0.0)), S, w_re + 1j * w_im)


def centered(A, c=1.0) -> ComplexGaussianSpec:
    """``c exp(-<A y, y>)``."""
    A = as_matrix(A)
    return ComplexGaussianSpec(c, A.astype(complex), None)


def lp_norm(g: ComplexGaussianSpec, p: float) -> float:
    """``||g||_p``; ``p = inf`` gives the sup norm."""
    if p < 1:
        raise ValueError("L^p norm needs p >= 1, got %r" % p)
    if math.isinf(p):
        return g.modulus_peak()[1]
    R = g.S.real
    I = gaussian_integral(p * R, p * g.w.real).real
    return abs(g.c) * I ** (1.0 / p)


def fourier(g: ComplexGaussianSpec) -> ComplexGaussianSpec:
    """Exact Fourier transform, again a complex Gaussian.

    ``ghat(xi) = c pi^{n/2} det(S)^{-1/2} exp(<S^{-1}(w - 2 pi i xi), w - 2 pi i xi>/4)``.
    """
    n = g.dim
    Sinv = np.linalg.inv(g.S)
    Sinv = 0.5 * (Sinv + Sinv.T)
    amp = g.c * math.pi ** (n / 2) * sqrt_det_inv(g.S) * np.exp(g.w @ Sinv @ g.w / 4)
    return ComplexGaussianSpec(amp, math.pi ** 2 * Sinv, -1j * math.pi * (Sinv @ g.w))


def convert_parametrizations(Q, v, c=1.0) -> RealGaussian:
    """Rewrite ``c exp(-<Q x, x> + v.x)`` as ``c' exp(-<Q (x - v'), x - v'>)``."""
    Q = as_matrix(np.asarray(Q, dtype=float))
    check_pd(Q, "Q")
    v = np.atleast_1d(np.asarray(v, dtype=float))
    shift = np.linalg.solve(Q, v)
    return RealGaussian(c * math.exp(float(shift @ v) / 4), Q, shift / 2)


def pullback_exponent(gaussians, datum, weights):
    """Exponent of ``x -> prod_j g_j(B_j x) ** weight_j``.

    Returns ``(S_total, w_total, c_total)`` with ``S_total = sum weight_j B_j^T S_j B_j``,
    ``w_total = sum weight_j B_j^T w_j`` and ``c_total = prod c_j ** weight_j``.
    """
    if len(gaussians) != datum.m or len(weights) != datum.m:
        raise ValueError("need one Gaussian and one weight per factor (m=%d)" % datum.m)
    S = np.zeros((datum.d, datum.d), dtype=complex)
    w = np.zeros(datum.d, dtype=complex)
    c = 1.0 + 0j
    for g, B, wt in zip(gaussians, datum.maps, weights):
        if g.dim != B.shape[0]:
            raise ValueError("Gaussian of dimension %d paired with a map onto R^%d"
                             % (g.dim, B.shape[0]))
        if wt == 0:
            continue
        S += wt * (B.T @ g.S @ B)
        w += wt * (B.T @ g.w)
        c *= g.c ** wt
    return S, w, c
