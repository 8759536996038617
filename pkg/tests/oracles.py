"""Reference computations that avoid the package's own algorithms.

Only numpy/scipy and explicit formulas are used here, so agreement with the
package is evidence rather than a tautology.
"""

import math

import numpy as np
from scipy import integrate, optimize


def young_value(s, q=2.0 / 3.0):
    """Closed-form value for the maps x, y, x - y with weights (1, 1, s).

    ``M = q [[1 + s, -s], [-s, 1 + s]]`` so ``det M = q^2 (1 + 2 s)``.
    """
    return (q * q * (1 + 2 * s)) ** -0.5 * s ** (q / 2)


def young_brute_force(q=2.0 / 3.0, lo=-6.0, hi=6.0, n=4001, rounds=8):
    """Grid search in ``log s`` followed by repeated local grid refinement."""
    best = None
    for _ in range(rounds):
        grid = np.linspace(lo, hi, n)
        vals = [young_value(math.exp(t), q) for t in grid]
        k = int(np.argmax(vals))
        best = (vals[k], math.exp(grid[k]))
        step = grid[1] - grid[0]
        lo, hi = grid[k] - 2 * step, grid[k] + 2 * step
    return best


def _chol(theta, n):
    L = np.zeros((n, n))
    L[np.tril_indices(n)] = theta
    L[np.diag_indices(n)] = np.exp(np.diag(L))
    return L @ L.T


def fourier_side_log_ratio(maps, p, Cs):
    """log of |int prod h_j(B_j x) dx| / prod ||hhat_j||_{p_j'} for h_j = exp(-<C_j y, y>)."""
    d = maps[0].shape[1]
    S = sum(B.T @ C @ B for B, C in zip(maps, Cs))
    sign, logdet = np.linalg.slogdet(S)
    if sign <= 0:
        return -np.inf
    out = 0.5 * d * math.log(math.pi) - 0.5 * logdet
    for C, pj in zip(Cs, p):
        n = C.shape[0]
        # hhat(xi) = pi^{n/2} det(C)^{-1/2} exp(-pi^2 <C^{-1} xi, xi>)
        log_amp = 0.5 * n * math.log(math.pi) - 0.5 * np.linalg.slogdet(C)[1]
        if pj == 1:
            log_norm = log_amp
        else:
            pp = pj / (pj - 1)
            Q = pp * math.pi ** 2 * np.linalg.inv(C)
            log_int = 0.5 * n * math.log(math.pi) - 0.5 * np.linalg.slogdet(Q)[1]
            log_norm = log_amp + log_int / pp
        out -= log_norm
    return out


def fourier_side_gaussian_max(maps, p, restarts=12, seed=0):
    """Maximize the Fourier-side ratio over centered Gaussian tuples by BFGS."""
    dims = [B.shape[0] for B in maps]
    sizes = [n * (n + 1) // 2 for n in dims]
    rng = np.random.default_rng(seed)

    def unpack(x):
        out, k = [], 0
        for n, s in zip(dims, sizes):
            out.append(_chol(x[k:k + s], n))
            k += s
        return out

    def neg(x):
        v = fourier_side_log_ratio(maps, p, unpack(x))
        return 1e6 if not np.isfinite(v) else -v

    best = -np.inf
    for _ in range(restarts):
        x0 = rng.normal(0, 0.5, size=sum(sizes))
        res = optimize.minimize(neg, x0, method="BFGS", options={"gtol": 1e-11, "maxiter": 5000})
        best = max(best, -res.fun)
    return math.exp(best)


def quad_1d(fn, a=-np.inf, b=np.inf):
    """Adaptive quadrature of a complex-valued function of one variable."""
    re = integrate.quad(lambda x: np.real(fn(x)), a, b, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    im = integrate.quad(lambda x: np.imag(fn(x)), a, b, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    return complex(re, im)


def bump(x):
    x = np.asarray(x, float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out
