"""Brascamp-Lieb constants as suprema of the Gaussian functional.

The objective is ``log det(M_A)^{-1/2} prod det(A_j)^{q_j/2}`` over tuples of
positive-definite matrices.  Its gradient in ``A_j`` is

    (q_j / 2) (A_j^{-1} - B_j M_A^{-1} B_j^T)

so interior critical points satisfy ``A_j^{-1} = B_j M_A^{-1} B_j^T``.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from ._linalg import (NotPositiveDefiniteError, expm_sym, inv_sqrtm_pd, logdet_pd,
                      sqrtm_pd, symmetrize)
from .datum import Datum, Factor, is_geometric
from .gaussian_bl import GaussianTuple, gaussian_bl_value, log_value, m_matrix, normalize_det

logger = logging.getLogger(__name__)

#: divergence monitor: window length, value growth and eigenvalue-ratio thresholds
DIVERGENCE_WINDOW = 50
DIVERGENCE_GROWTH = 1e6
DIVERGENCE_RATIO = 1e-8


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("BLSTAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class OptimizerResult:
    value: float
    maximizer: GaussianTuple
    el_residual: float
    restarts_agree: bool = True
    divergence_flag: bool = False
    iterations: int = 0
    trace: list = field(default_factory=list)
    converged: bool = False
    monotone: bool = True
    restarts: list = field(default_factory=list)
    note: str = ""

    def to_dict(self, with_trace: bool = False) -> dict:
        out = {
            "value": self.value,
            "maximizer": self.maximizer.to_dict(),
            "el_residual": self.el_residual,
            "restarts_agree": self.restarts_agree,
            "divergence_flag": self.divergence_flag,
            "iterations": self.iterations,
            "converged": self.converged,
            "monotone": self.monotone,
            "restarts": self.restarts,
            "note": self.note,
        }
        if with_trace:
            out["trace"] = [list(t) for t in self.trace]
        return out


def eig_ratio(M) -> float:
    lam = np.linalg.eigvalsh(M)
    return float(lam[0] / lam[-1])


def el_residual(datum: Datum, tup: GaussianTuple, M: Optional[np.ndarray] = None) -> float:
    """``max_j || A_j^{-1} - B_j M_A^{-1} B_j^T ||_2`` over factors with ``q_j > 0``."""
    if M is None:
        M = m_matrix(datum, tup)
    Minv = np.linalg.inv(M)
    res = 0.0
    for f, a in zip(datum.factors, tup.A):
        if f.q:
            diff = np.linalg.inv(a) - f.matrix @ Minv @ f.matrix.T
            res = max(res, float(np.linalg.norm(diff, 2)))
    return res


def _grad_A(datum, tup, M):
    Minv = np.linalg.inv(M)
    return [0.5 * f.q * (np.linalg.inv(a) - f.matrix @ Minv @ f.matrix.T)
            for f, a in zip(datum.factors, tup.A)]


class _Divergence:
    def __init__(self, v0):
        self.v0 = v0
        self.values = []
        self.ratios = []

    def update(self, value, ratio):
        self.values.append(value)
        self.ratios.append(ratio)
        if len(self.values) < DIVERGENCE_WINDOW:
            return False
        window = self.values[-DIVERGENCE_WINDOW:]
        increasing = window[-1] >= window[0]
        grown = value > DIVERGENCE_GROWTH * self.v0
        squashed = max(self.ratios[-DIVERGENCE_WINDOW:]) < DIVERGENCE_RATIO
        return increasing and (grown or squashed)


def fixed_point_iterate(datum: Datum, A0: GaussianTuple, max_iters: int = 500,
                        tol: float = 1e-12) -> OptimizerResult:
    """Iterate ``A_j <- (B_j M_A^{-1} B_j^T)^{-1}`` followed by det normalization."""
    tup = normalize_det(datum, A0.centered())
    M = m_matrix(datum, tup)
    value = math.exp(log_value(datum, tup, M))
    trace = [(0, value, eig_ratio(M))]
    monitor = _Divergence(value)
    monotone, converged, diverged = True, False, False
    best = (value, tup)
    it = 0
    if el_residual(datum, tup, M) < tol:
        converged = True
    while not converged and it < max_iters:
        it += 1
        Minv = np.linalg.inv(M)
        new = []
        for f, a in zip(datum.factors, tup.A):
            new.append(symmetrize(np.linalg.inv(f.matrix @ Minv @ f.matrix.T)) if f.q else a)
        try:
            cand = normalize_det(datum, GaussianTuple(tuple(new)))
            Mc = m_matrix(datum, cand)
        except NotPositiveDefiniteError:
            diverged = True
            break
        new_value = math.exp(log_value(datum, cand, Mc))
        if new_value < value * (1 - 1e-13):
            monotone = False
        change = abs(new_value - value)
        tup, M, value = cand, Mc, new_value
        trace.append((it, value, eig_ratio(M)))
        if value > best[0]:
            best = (value, tup)
        if monitor.update(value, trace[-1][2]):
            diverged = True
            break
        if change < tol * value or el_residual(datum, tup, M) < tol:
            converged = True
    res_tup = tup if converged else best[1]
    return OptimizerResult(
        value=best[0] if not converged else value,
        maximizer=res_tup,
        el_residual=el_residual(datum, res_tup),
        divergence_flag=diverged,
        iterations=it,
        trace=trace,
        converged=converged,
        monotone=monotone,
    )


# ---------------------------------------------------------------------------
# Cholesky-parametrized ascent

def _tril_indices(datum):
    return [np.tril_indices(dj) for dj in datum.dims]


def _pack(datum, tup):
    parts = []
    for a, (r, c) in zip(tup.A, _tril_indices(datum)):
        L = np.linalg.cholesky(a)
        L[np.diag_indices_from(L)] = np.log(np.diag(L))
        parts.append(L[r, c])
    return np.concatenate(parts)


def _unpack(datum, theta):
    A, Ls, k = [], [], 0
    for dj, (r, c) in zip(datum.dims, _tril_indices(datum)):
        n = len(r)
        L = np.zeros((dj, dj))
        L[r, c] = theta[k:k + n]
        L[np.diag_indices(dj)] = np.exp(np.diag(L))
        k += n
        Ls.append(L)
        A.append(L @ L.T)
    return GaussianTuple(tuple(A)), Ls


def log_value_and_grad(datum: Datum, theta: np.ndarray):
    """Objective and gradient in the log-Cholesky coordinates."""
    tup, Ls = _unpack(datum, theta)
    M = m_matrix(datum, tup)
    F = log_value(datum, tup, M)
    grads = []
    for G, L, (r, c) in zip(_grad_A(datum, tup, M), Ls, _tril_indices(datum)):
        gL = 2.0 * G @ L
        gL[np.diag_indices_from(gL)] *= np.diag(L)
        grads.append(gL[r, c])
    return F, np.concatenate(grads), tup, M


def _renormalize(datum, theta, M):
    # A -> r A with r = det(M)^{-1/d}: L -> sqrt(r) L
    half_log_r = -0.5 * logdet_pd(M) / datum.d
    out, k = theta.copy(), 0
    for dj, (r, c) in zip(datum.dims, _tril_indices(datum)):
        n = len(r)
        block = out[k:k + n]
        diag = r == c
        block[diag] += half_log_r
        block[~diag] *= math.exp(half_log_r)
        k += n
    return out


def gradient_ascent(datum: Datum, A0: Optional[GaussianTuple] = None, seed: int = 0,
                    max_iters: int = 5000, tol: float = 1e-10) -> OptimizerResult:
    """Maximize the log-value with Barzilai-Borwein steps and Armijo backtracking.

    Every accepted step increases the value and is followed by renormalization
    to ``det(M_A) = 1``.  Stops when the gradient norm drops below ``tol``.
    """
    if A0 is None:
        A0 = random_tuple(datum, np.random.default_rng(seed))
    theta = _pack(datum, normalize_det(datum, A0.centered()))
    F, g, tup, M = log_value_and_grad(datum, theta)
    trace = [(0, math.exp(F), eig_ratio(M))]
    monitor = _Divergence(math.exp(F))
    gnorm = float(np.linalg.norm(g))
    alpha = 1.0 / max(gnorm, 1.0)
    converged, diverged, it = gnorm < tol, False, 0
    while not converged and it < max_iters:
        it += 1
        step = alpha
        accepted = False
        for _ in range(60):
            trial = theta + step * g
            try:
                with np.errstate(over="raise", invalid="raise"):
                    Ft, gt, tt, Mt = log_value_and_grad(datum, trial)
            except (NotPositiveDefiniteError, np.linalg.LinAlgError, FloatingPointError):
                step *= 0.5
                continue
            if np.isfinite(Ft) and Ft >= F + 1e-4 * step * gnorm ** 2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # no ascent direction at working precision
            converged = gnorm < max(tol, 1e-7)
            diverged = not converged and trace[-1][2] < DIVERGENCE_RATIO
            break
        try:
            with np.errstate(over="raise", invalid="raise"):
                trial = _renormalize(datum, trial, Mt)
                Ft, gt, tt, Mt = log_value_and_grad(datum, trial)
        except (NotPositiveDefiniteError, np.linalg.LinAlgError, FloatingPointError):
            # M_A numerically singular: the eigenvalue ratio has collapsed
            diverged = True
            break
        s, y = trial - theta, gt - g
        sy = float(s @ y)
        alpha = float(s @ s) / abs(sy) if sy != 0 else 2 * step
        alpha = min(max(alpha, 1e-10), 1e10)
        theta, F, g, tup, M = trial, Ft, gt, tt, Mt
        gnorm = float(np.linalg.norm(g))
        trace.append((it, math.exp(F), eig_ratio(M)))
        if monitor.update(math.exp(F), trace[-1][2]):
            diverged = True
            break
        converged = gnorm < tol
    return OptimizerResult(
        value=math.exp(F),
        maximizer=tup,
        el_residual=el_residual(datum, tup, M),
        divergence_flag=diverged,
        iterations=it,
        trace=trace,
        converged=converged,
    )


def random_tuple(datum: Datum, rng, scale: float = 1.0) -> GaussianTuple:
    A = []
    for dj in datum.dims:
        Z = rng.standard_normal((dj, dj))
        A.append(expm_sym(scale * 0.5 * (Z + Z.T)))
    return normalize_det(datum, GaussianTuple(tuple(A)))


def tuple_distance(a: GaussianTuple, b: GaussianTuple) -> float:
    """Largest per-factor Frobenius distance."""
    return max(float(np.linalg.norm(x - y)) for x, y in zip(a.A, b.A))


def _single_restart(datum, seed, index, fp_iters, max_iters, tol):
    rng = np.random.default_rng([seed, index])
    A0 = random_tuple(datum, rng)
    warm = fixed_point_iterate(datum, A0, max_iters=fp_iters, tol=tol)
    start = warm.maximizer if not warm.divergence_flag else A0
    res = gradient_ascent(datum, start, max_iters=max_iters, tol=tol)
    offset = warm.trace[-1][0] + 1
    res.trace = warm.trace + [(offset + i, v, r) for i, v, r in res.trace]
    res.divergence_flag = res.divergence_flag or (warm.divergence_flag and not res.converged)
    res.monotone = warm.monotone
    res.iterations += warm.iterations
    return res


def bl_constant(datum: Datum, restarts: int = 8, seed: int = 0, fp_iters: int = 200,
                max_iters: int = 5000, tol: float = 1e-10,
                workers: Optional[int] = None) -> OptimizerResult:
    """Best value over seeded restarts (fixed-point warm start, then ascent).

    ``restarts_agree`` reports whether every converged normalized maximizer
    lies within ``1e-5`` of the best one, as expected for simple data.
    """
    workers = thread_cap() if workers is None else workers

    def run(i):
        return _single_restart(datum, seed, i, fp_iters, max_iters, tol)

    if workers > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(restarts)))
    else:
        results = [run(i) for i in range(restarts)]

    order = sorted(range(restarts),
                   key=lambda i: (-results[i].value, results[i].el_residual, i))
    best = results[order[0]]
    alive = [r for r in results if not r.divergence_flag]
    agree = bool(alive) and len(alive) == len(results) and all(
        tuple_distance(r.maximizer, best.maximizer) <= 1e-5 for r in alive)
    summary = [
        {"restart": i, "value": r.value, "el_residual": r.el_residual,
         "converged": r.converged, "divergence_flag": r.divergence_flag,
         "iterations": r.iterations}
        for i, r in enumerate(results)
    ]
    note = ""
    diverged = not alive
    if diverged:
        note = ("all restarts diverged: value grows while the eigenvalue ratio of M_A "
                "collapses (min ratio %.3e); constant likely infinite"
                % min(t[2] for r in results for t in r.trace))
    return OptimizerResult(
        value=best.value,
        maximizer=best.maximizer,
        el_residual=best.el_residual,
        restarts_agree=agree,
        divergence_flag=diverged,
        iterations=sum(r.iterations for r in results),
        trace=best.trace,
        converged=best.converged,
        monotone=all(r.monotone for r in results),
        restarts=summary,
        note=note,
    )


# ---------------------------------------------------------------------------
# reduction to geometric form

@dataclass
class GeometricReduction:
    datum: Datum
    E: list
    F: np.ndarray
    residuals: dict


def geometric_reduce(datum: Datum, A_star: GaussianTuple, tol: float = 1e-6,
                     check_tol: float = 1e-8) -> GeometricReduction:
    """Change variables so that a stationary tuple becomes the identity tuple.

    With ``M = M_{A*}`` the new maps are ``A*_j^{1/2} B_j M^{-1/2}``.
    """
    M = m_matrix(datum, A_star)
    res = el_residual(datum, A_star, M)
    if res >= tol:
        raise ValueError("tuple is not stationary (residual %.3e >= %.1e)" % (res, tol))
    F = inv_sqrtm_pd(M)
    E = [sqrtm_pd(a) for a in A_star.A]
    new = Datum(datum.d, tuple(Factor(e @ f.matrix @ F, f.p) for e, f in zip(E, datum.factors)))
    ok, residuals = is_geometric(new, check_tol)
    ident = GaussianTuple.identity(new)
    residuals["value_at_identity"] = gaussian_bl_value(new, ident, warn=False).value
    residuals["el_residual_at_identity"] = el_residual(new, ident)
    if not ok or residuals["el_residual_at_identity"] >= check_tol:
        raise ValueError("reduction failed its checks: %r" % residuals)
    return GeometricReduction(new, E, F, residuals)


# ---------------------------------------------------------------------------
# compactness of superlevel sets

@dataclass
class CompactnessReport:
    eta: float
    n_samples: int
    n_high: int
    a_eig_min: float
    a_eig_max: float
    lambda1_max: float
    ratio_threshold: float
    n_low_ratio: int
    low_ratio_max_value: float
    low_ratio_below_eta: bool

    def to_dict(self):
        return dict(self.__dict__)


def degenerate_tuple(datum: Datum, ratio: float, keep: int = 0) -> GaussianTuple:
    """Normalized tuple whose ``M_A`` has eigenvalue ratio ``ratio``.

    Every factor except ``keep`` is shrunk by a common factor found by root
    finding; requires ``d_keep < d`` so the ratio can approach zero.
    """
    if datum.dims[keep] >= datum.d:
        raise ValueError("kept factor must have d_j < d")

    def tup(log_eps):
        eps = math.exp(log_eps)
        return GaussianTuple(tuple(np.eye(dj) * (1.0 if j == keep else eps)
                                   for j, dj in enumerate(datum.dims)))

    def f(log_eps):
        try:
            return math.log(eig_ratio(m_matrix(datum, tup(log_eps)))) - math.log(ratio)
        except NotPositiveDefiniteError:
            # numerically singular: the ratio is certainly below the target
            return -1.0

    root = brentq(f, math.log(1e-300) / 2, 0.0, xtol=1e-14)
    return normalize_det(datum, tup(root))


def compactness_probe(datum: Datum, eta: float, n_samples: int = 2000, seed: int = 0,
                      ratio_threshold: float = 1e-6) -> CompactnessReport:
    """Empirical eigenvalue bands on ``{value >= eta}`` among normalized tuples.

    Samples ``A_j = exp(sigma Z_j)`` with ``sigma`` log-uniform on ``[1e-2, 8]``,
    plus explicitly degenerate tuples, and checks that every sample with
    eigenvalue ratio below ``ratio_threshold`` has value below ``eta``.
    """
    rng = np.random.default_rng(seed)
    a_min, a_max, lam1 = math.inf, 0.0, 0.0
    n_high, n_low, low_max = 0, 0, 0.0
    samples = []
    for _ in range(n_samples):
        sigma = math.exp(rng.uniform(math.log(1e-2), math.log(8.0)))
        samples.append(random_tuple(datum, rng, scale=sigma))
    for keep, dj in enumerate(datum.dims):
        if dj < datum.d:
            for r in (1e-7, 1e-9, 1e-12):
                samples.append(degenerate_tuple(datum, r, keep))
    for tup in samples:
        try:
            rep = gaussian_bl_value(datum, tup, warn=False)
        except NotPositiveDefiniteError:
            continue
        lam = np.linalg.eigvalsh(rep.M)
        ratio = lam[0] / lam[-1]
        if rep.value >= eta:
            n_high += 1
            lam1 = max(lam1, float(lam[-1]))
            for a in tup.A:
                ev = np.linalg.eigvalsh(a)
                a_min = min(a_min, float(ev[0]))
                a_max = max(a_max, float(ev[-1]))
        if ratio < ratio_threshold:
            n_low += 1
            low_max = max(low_max, rep.value)
    return CompactnessReport(eta, len(samples), n_high, a_min, a_max, lam1, ratio_threshold,
                             n_low, low_max, low_max < eta)
