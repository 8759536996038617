"""Numerical experiments on near-extremizers of Brascamp-Lieb functionals.

Every experiment is deterministic given its seed and returns plain dataclasses
with a ``rows()`` method producing the CSV records written by the CLI.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq
from scipy.stats import linregress, t as student_t

from ._linalg import expm_sym, sqrtm_pd, symmetrize
from .datum import (
    NOT_SIMPLE,
    Datum,
    classify_simplicity,
    frame_120,
    is_geometric,
    rank_one,
)
from .gaussian import ComplexGaussianSpec, centered
from .gaussian_bl import (
    GaussianTuple,
    complete_square,
    distance_to_consistent,
    gaussian_bl_value,
    modulated_blbp,
    normalize_det,
)
from .integrator import (
    COMPLEX,
    Bump,
    ClosedGaussian,
    GaussianPlusBump,
    ModulatedGaussian,
    QuadratureOpts,
    as_spec,
    blbp_parts,
    dist_to_gaussians,
    lp_norm_numeric,
)
from .optimizer import bl_constant, thread_cap

SHARPENED_FLOOR = 1e-3


def _map(fn, items, workers):
    workers = thread_cap() if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------------------
# fits

@dataclass
class ExponentFit:
    grid: list
    values: list
    slope: float
    half_width: float
    intercept: float
    label: str = ""

    def __post_init__(self):
        g = np.asarray(self.grid, float)
        if len(g) < 6:
            raise ValueError("an exponent fit needs at least 6 points")
        dg = np.diff(g)
        if not (np.all(dg > 0) or np.all(dg < 0)):
            raise ValueError("fit grid must be strictly monotone")

    def within(self, target: float, band: float) -> bool:
        return abs(self.slope - target) <= band

    def to_dict(self) -> dict:
        return {"label": self.label, "slope": self.slope, "half_width": self.half_width,
                "intercept": self.intercept, "n": len(self.grid)}


def fit_exponent(grid, values, label: str = "") -> ExponentFit:
    """Least-squares slope of ``log values`` against ``log grid`` with a 95% half-width."""
    x = np.log(np.abs(np.asarray(grid, float)))
    v = np.asarray(values, float)
    if not np.all(v > 0):
        raise ValueError("fit values must be positive")
    y = np.log(v)
    if not np.all(np.isfinite(y)):
        raise ValueError("fit values must be positive")
    reg = linregress(x, y)
    hw = float(student_t.ppf(0.975, len(x) - 2) * reg.stderr)
    return ExponentFit(list(map(float, grid)), list(map(float, values)), float(reg.slope), hw,
                       float(reg.intercept), label)


# ---------------------------------------------------------------------------
# deficits

@dataclass
class DeficitReport:
    blbp: float
    bl_const: float
    deficit: float
    D: list
    implied_c: Optional[float]
    holds_sharpened: bool
    c: list
    nonnegative: bool
    distance_class: str
    note: str = ""
    integral_error: float = 0.0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def implied_constant(ratio: float, D: Sequence[float]) -> Optional[float]:
    """Largest ``c`` with ``prod_j (1 - c D_j^2) >= ratio`` (``ratio = blbp / BL``)."""
    D2 = np.asarray(D, float) ** 2
    if not np.any(D2 > 0):
        return None
    if ratio >= 1.0:
        return 0.0
    if ratio <= 0.0:
        return float(1.0 / D2.max())
    c_max = 1.0 / D2.max()

    def h(c):
        return float(np.sum(np.log1p(-c * D2))) - math.log(ratio)

    hi = c_max * (1 - 1e-15)
    if h(hi) >= 0:
        return float(c_max)
    return float(brentq(h, 0.0, hi, xtol=1e-14, rtol=1e-12))


def _is_nonnegative(f) -> bool:
    f = as_spec(f)
    if isinstance(f, ClosedGaussian):
        return f.g.is_positive
    if isinstance(f, GaussianPlusBump):
        a = complex(f.amplitude)
        return f.gaussian.is_positive and a.imag == 0 and a.real >= 0
    if isinstance(f, Bump):
        a = complex(f.amplitude)
        return a.imag == 0 and a.real >= 0
    return False


def factor_distances(datum, fs, cls=COMPLEX, opts=None, starts=16, seed=0):
    return [dist_to_gaussians(f, fac.p, cls, opts, starts=starts, seed=seed).relative
            for f, fac in zip(fs, datum.factors)]


def deficit_report(datum: Datum, fs: Sequence, bl_const: float,
                   opts: Optional[QuadratureOpts] = None, c: Optional[Sequence[float]] = None,
                   cls: str = COMPLEX, starts: int = 16, seed: int = 0,
                   tol: float = 1e-9) -> DeficitReport:
    """Deficit ``1 - blbp / bl_const`` against the per-factor relative distances.

    ``holds_sharpened`` checks ``blbp <= bl_const prod_j (1 - c_j D_j^2)`` up to
    ``tol``; it is only meaningful when every exponent lies in ``(1, 2)``.
    """
    fs = [as_spec(f) for f in fs]
    parts = blbp_parts(datum, fs, opts)
    ratio = parts.ratio / bl_const
    D = factor_distances(datum, fs, cls, opts, starts, seed)
    c = [SHARPENED_FLOOR] * datum.m if c is None else list(c)
    bound = float(np.prod([1.0 - cj * Dj ** 2 for cj, Dj in zip(c, D)]))
    nonneg = all(_is_nonnegative(f) for f in fs)
    note = ""
    if nonneg:
        note = ("nonnegative tuple: distances to positive and complex Gaussians coincide, "
                "so either class may be used")
    in_range = all(1 < p < 2 for p in datum.p)
    if not in_range:
        note = (note + "; " if note else "") + "exponents outside (1, 2): sharpened check not applicable"
    return DeficitReport(
        blbp=parts.ratio,
        bl_const=bl_const,
        deficit=1.0 - ratio,
        D=D,
        implied_c=implied_constant(ratio, D),
        holds_sharpened=bool(ratio <= bound + tol),
        c=c,
        nonnegative=nonneg,
        distance_class=cls,
        note=note,
        integral_error=float(parts.integral.error_estimate),
    )


# ---------------------------------------------------------------------------
# extremizers of geometric data

def geometric_extremizers(datum: Datum) -> list:
    """``g_j(y) = exp(-pi |y|^2 / p_j)``, the extremizing tuple of a geometric datum."""
    return [ClosedGaussian(centered(np.eye(f.dim) * math.pi / f.p)) for f in datum.factors]


def extremizer_specs(datum: Datum, A_star: GaussianTuple) -> list:
    """Centered Gaussians ``exp(-<A_j y, y> / p_j)`` built from a weighted-form maximizer."""
    return [ClosedGaussian(centered(a / f.p)) for a, f in zip(A_star.A, datum.factors)]


def _perturb(g: ClosedGaussian, amplitude, center, radius=1.0) -> GaussianPlusBump:
    return GaussianPlusBump(g.g, amplitude, np.atleast_1d(center), radius)


# ---------------------------------------------------------------------------
# sharpened-inequality sweep

@dataclass
class SweepTrial:
    index: int
    kind: str
    blbp: float
    deficit: float
    D: list
    sum_D2: float
    violation: bool
    implied_c: Optional[float]


@dataclass
class SweepReport:
    trials: list
    violations: int
    fitted_c: Optional[float]
    floor: float
    bl_const: float

    def rows(self):
        m = len(self.trials[0].D) if self.trials else 0
        header = ["trial", "kind", "blbp", "deficit"] + ["D_%d" % j for j in range(m)] + [
            "sum_D2", "implied_c", "violation"]
        rows = [[t.index, t.kind, t.blbp, t.deficit] + list(t.D)
                + [t.sum_D2, "" if t.implied_c is None else t.implied_c, int(t.violation)]
                for t in self.trials]
        return header, rows

    def summary(self) -> dict:
        return {"trials": len(self.trials), "violations": self.violations,
                "fitted_c": self.fitted_c, "floor": self.floor, "bl_const": self.bl_const,
                "pass": self.violations == 0 and (self.fitted_c or 0) > 0}


def _random_trial(datum, g, rng, kind):
    fs = []
    for j, (gj, fac) in enumerate(zip(g, datum.factors)):
        if kind == "gaussian":
            A = gj.g.S.real * math.exp(rng.normal(0, 0.5))
            fs.append(ClosedGaussian(centered(A, math.exp(rng.normal(0, 0.3)))))
        elif kind == "offset":
            A = gj.g.S.real * math.exp(rng.normal(0, 0.3))
            v = rng.normal(0, 0.5, size=fac.dim)
            fs.append(ClosedGaussian(ComplexGaussianSpec(1.0, A, 2 * A @ v)))
        else:
            if rng.random() < 0.5:
                amp = rng.uniform(-0.6, 0.6)
                center = rng.normal(0, 0.8, size=fac.dim)
                fs.append(_perturb(gj, amp, center, rng.uniform(0.3, 1.2)))
            else:
                fs.append(gj)
    return fs


def sharpened_sweep(datum: Optional[Datum] = None, trials: int = 500, seed: int = 0,
                    floor: float = SHARPENED_FLOOR, tol: float = 1e-9,
                    opts: Optional[QuadratureOpts] = None, starts: int = 8,
                    bl_const: Optional[float] = None, workers: Optional[int] = None) -> SweepReport:
    """Random tuples (centered, offset and bump-perturbed Gaussians) tested against
    ``deficit >= floor * sum_j D_j^2``.
    """
    datum = datum or frame_120()
    if bl_const is None:
        bl_const = bl_constant(datum, seed=seed).value
    ok, _ = is_geometric(datum)
    g = geometric_extremizers(datum) if ok else extremizer_specs(
        datum, bl_constant(datum, seed=seed).maximizer)
    kinds = ("gaussian", "offset", "bump")

    def run(i):
        rng = np.random.default_rng([seed, i])
        kind = kinds[i % 3]
        fs = _random_trial(datum, g, rng, kind)
        parts = blbp_parts(datum, fs, opts)
        ratio = parts.ratio / bl_const
        D = factor_distances(datum, fs, COMPLEX, opts, starts, seed)
        s = float(np.sum(np.square(D)))
        deficit = 1.0 - ratio
        return SweepTrial(i, kind, parts.ratio, deficit, D, s,
                          bool(deficit < floor * s - tol), implied_constant(ratio, D))

    results = _map(run, range(trials), workers)
    positive = [t.deficit / t.sum_D2 for t in results if t.sum_D2 > 1e-12]
    fitted = float(min(positive)) if positive else None
    return SweepReport(results, sum(t.violation for t in results), fitted, floor, bl_const)


# ---------------------------------------------------------------------------
# perturbation families and exponent experiments

@dataclass
class CurveReport:
    """Rows of a one-parameter experiment plus the fitted exponents."""

    parameter: str
    grid: list
    blbp: list
    deficit: list
    D: list
    fits: dict
    extra: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def rows(self):
        m = len(self.D[0]) if self.D else 0
        header = [self.parameter, "blbp", "deficit"] + ["D_%d" % j for j in range(m)]
        keys = sorted(self.extra)
        header += keys
        rows = [[x, b, dfc] + list(D) + [self.extra[k][i] for k in keys]
                for i, (x, b, dfc, D) in enumerate(zip(self.grid, self.blbp, self.deficit, self.D))]
        return header, rows

    def summary(self) -> dict:
        return {"parameter": self.parameter,
                "fits": {k: v.to_dict() for k, v in self.fits.items()},
                "checks": self.checks,
                **self.info,
                "pass": all(bool(v) for v in self.checks.values())}


def bump_family(datum: Datum, g: Sequence, factor: int = 0, center=None,
                radius: float = 1.0) -> Callable:
    """``s -> (g_0, .., g_factor + s * bump, .., g_m)``."""
    n = datum.dims[factor]
    center = np.full(n, 0.3) if center is None else np.atleast_1d(np.asarray(center, float))

    def family(s):
        fs = list(g)
        fs[factor] = _perturb(g[factor], s, center, radius)
        return fs
    return family


def corollary_sweep(datum: Optional[Datum] = None, family: Optional[Callable] = None,
                    eps_grid: Optional[Sequence[float]] = None, bl_const: Optional[float] = None,
                    opts: Optional[QuadratureOpts] = None, s_max: float = 2.0,
                    starts: int = 8, seed: int = 0, signs=(1.0, -1.0)) -> CurveReport:
    """For each ``eps`` find family members with ``max_j D_j = eps`` and record the
    largest deficit among them; the log-log slope of deficit against ``eps``
    measures how near-extremality controls the distance.
    """
    datum = datum or frame_120()
    if bl_const is None:
        bl_const = bl_constant(datum, seed=seed).value
    if family is None:
        family = bump_family(datum, geometric_extremizers(datum))
    eps_grid = list(np.logspace(-3, -1, 8) if eps_grid is None else eps_grid)

    def max_D(s):
        return max(factor_distances(datum, family(s), COMPLEX, opts, starts, seed))

    if max(max_D(sg * s_max) for sg in signs) <= 0:
        raise ValueError("perturbation family is degenerate: all distances vanish")
    blbps, deficits, Ds, amps = [], [], [], []
    for eps in eps_grid:
        best = None
        for sg in signs:
            top = sg * s_max
            if max_D(top) < eps:
                continue
            s = brentq(lambda a: max_D(sg * a) - eps, 0.0, s_max, xtol=1e-12, rtol=1e-10)
            fs = family(sg * s)
            r = blbp_parts(datum, fs, opts).ratio
            D = factor_distances(datum, fs, COMPLEX, opts, starts, seed)
            cand = (1.0 - r / bl_const, r, D, sg * s)
            if best is None or cand[0] > best[0]:
                best = cand
        if best is None:
            raise ValueError("no family member reaches distance %g" % eps)
        deficits.append(best[0])
        blbps.append(best[1])
        Ds.append(best[2])
        amps.append(best[3])
    fit = fit_exponent(eps_grid, deficits, "deficit_vs_eps")
    # read back: max D <= C' sqrt(deficit) along the family
    cprime = max(max(D) / math.sqrt(max(dfc, 1e-300)) for D, dfc in zip(Ds, deficits))
    return CurveReport("eps", eps_grid, blbps, deficits, Ds, {"deficit": fit},
                       extra={"amplitude": amps},
                       checks={"slope_2_pm_0.2": fit.within(2.0, 0.2),
                               "deficit_positive": all(d > 0 for d in deficits)},
                       info={"c_prime": cprime})


def opt1_experiment(datum: Optional[Datum] = None, g: Optional[Sequence] = None,
                    h: Optional[Sequence] = None, t_grid: Optional[Sequence[float]] = None,
                    bl_const: Optional[float] = None, opts: Optional[QuadratureOpts] = None,
                    starts: int = 8, seed: int = 0) -> CurveReport:
    """Deficit of ``g_j + t h_j`` around a Gaussian extremizer; exponent 2 expected.

    The default ``h_j`` are unit bumps of radius 1 centred at ``0.3 e``.
    """
    datum = datum or frame_120()
    if g is None:
        ok, _ = is_geometric(datum)
        g = geometric_extremizers(datum) if ok else extremizer_specs(
            datum, bl_constant(datum, seed=seed).maximizer)
    if bl_const is None:
        bl_const = 1.0 if is_geometric(datum)[0] else bl_constant(datum, seed=seed).value
    if h is None:
        h = [Bump(np.full(fac.dim, 0.3 * (-1) ** j), 1.0) for j, fac in enumerate(datum.factors)]
    t_grid = [t for t in (np.logspace(-3, -1, 9) if t_grid is None else t_grid) if t != 0]
    blbps, deficits, Ds = [], [], []
    for t in t_grid:
        fs = [GaussianPlusBump(gj.g, t * hj.amplitude, hj.center, hj.radius, hj.power)
              for gj, hj in zip(g, h)]
        r = blbp_parts(datum, fs, opts).ratio
        blbps.append(r)
        deficits.append(1.0 - r / bl_const)
        Ds.append(factor_distances(datum, fs, COMPLEX, opts, starts, seed))
    fit = fit_exponent(t_grid, deficits, "deficit_vs_t")
    kappa = min(max(D) / abs(t) for D, t in zip(Ds, t_grid))
    checks = {"slope_2_pm_0.1": fit.within(2.0, 0.1),
              "below_constant": all(r <= bl_const * (1 + 1e-10) for r in blbps),
              "kappa_positive": kappa > 0}
    return CurveReport("t", list(t_grid), blbps, deficits, Ds, {"deficit": fit}, checks=checks,
                       info={"kappa": kappa})


def growth_shift(delta: float, K: float = 1.0) -> float:
    """``t(delta) = K log(1/delta)^{3/2}``, which outgrows ``log(1/delta)``."""
    return K * math.log(1.0 / delta) ** 1.5


def opt2_experiment(datum: Optional[Datum] = None, delta_grid: Optional[Sequence[float]] = None,
                    v=None, K: float = 1.0, radius: float = 1.0,
                    opts: Optional[QuadratureOpts] = None, starts: int = 8,
                    seed: int = 0) -> CurveReport:
    """Far-translated small bumps on the first factor of a geometric datum with ``p_1 > 2``.

    ``f_1 = g_1 + delta phi(. - t(delta) v)`` and ``f_j = g_j`` otherwise.  The
    deficit scales like ``delta^{p_1}`` while the distance scales like ``delta``,
    so a squared-distance lower bound fails for small ``delta``.
    """
    from .datum import holder_pair

    datum = datum or holder_pair((3.0, 1.5))
    ok, _ = is_geometric(datum)
    if not ok:
        raise ValueError("this construction needs a geometric datum")
    p1 = datum.factors[0].p
    if not p1 > 2:
        raise ValueError("the first exponent must exceed 2")
    n = datum.dims[0]
    v = np.eye(n)[0] if v is None else np.asarray(v, float) / np.linalg.norm(v)
    delta_grid = list(np.logspace(-1, -3, 9) if delta_grid is None else delta_grid)
    g = geometric_extremizers(datum)
    phi_norm = lp_norm_numeric(Bump(np.zeros(n), radius), p1, opts).value
    g1_norm = lp_norm_numeric(g[0], p1, opts).value
    blbps, deficits, Ds, shifts, norm_excess = [], [], [], [], []
    for delta in delta_grid:
        t = growth_shift(delta, K)
        f1 = GaussianPlusBump(g[0].g, delta, t * v, radius)
        fs = [f1] + list(g[1:])
        parts = blbp_parts(datum, fs, opts)
        blbps.append(parts.ratio)
        deficits.append(1.0 - parts.ratio)
        D1 = dist_to_gaussians(f1, p1, COMPLEX, opts, starts=starts, seed=seed,
                               extra_starts=[g[0].g]).relative
        Ds.append([D1] + [0.0] * (datum.m - 1))
        shifts.append(t)
        norm_excess.append(parts.norms[0].value ** p1 - g1_norm ** p1)
    fit_def = fit_exponent(delta_grid, deficits, "deficit_vs_delta")
    fit_D = fit_exponent(delta_grid, [D[0] for D in Ds], "distance_vs_delta")
    # ||f_1||^{p_1} - ||g_1||^{p_1} should be delta^{p_1} ||phi||^{p_1}
    excess_ratio = [e / (d ** p1 * phi_norm ** p1) for e, d in zip(norm_excess, delta_grid)]
    checks = {
        "deficit_slope_p1_pm_0.15": fit_def.within(p1, 0.15),
        "distance_slope_1_pm_0.1": fit_D.within(1.0, 0.1),
        "norm_excess_order_delta_p1": all(abs(r - 1) < 0.05 for r in excess_ratio),
        "squared_distance_bound_fails": deficits[-1] / Ds[-1][0] ** 2
        < deficits[0] / Ds[0][0] ** 2,
    }
    return CurveReport("delta", delta_grid, blbps, deficits, Ds,
                       {"deficit": fit_def, "distance": fit_D},
                       extra={"shift": shifts, "norm_excess_ratio": excess_ratio}, checks=checks)


# ---------------------------------------------------------------------------
# tuple stability for simple data

@dataclass
class TupleStabilityReport:
    bl_const: float
    maximizer: GaussianTuple
    restarts_agree: bool
    samples: list
    near_max_dist: float
    threshold: float
    envelope: list
    offsets_in_V_change: float
    quad_kappa: float

    def rows(self):
        header = ["sample", "scale", "value_ratio", "deficit", "orbit_dist", "offset_dist",
                  "minus_log_c"]
        return header, [list(s) for s in self.samples]

    def summary(self) -> dict:
        return {"bl_const": self.bl_const, "restarts_agree": self.restarts_agree,
                "near_max_dist": self.near_max_dist, "threshold": self.threshold,
                "offsets_in_V_change": self.offsets_in_V_change,
                "quad_kappa": self.quad_kappa, "envelope": self.envelope,
                "pass": bool(self.restarts_agree and self.near_max_dist <= 0.05
                             and self.offsets_in_V_change <= 1e-10 and self.quad_kappa > 0)}


def orbit_distance(A: GaussianTuple, A_star: GaussianTuple) -> float:
    """``min_r ||A - r A_*||_F / ||A_*||_F`` over the stacked tuple."""
    a = np.concatenate([x.ravel() for x in A.A])
    b = np.concatenate([x.ravel() for x in A_star.A])
    r = max(float(a @ b) / float(b @ b), 0.0)
    return float(np.linalg.norm(a - r * b) / np.linalg.norm(b))


def tuple_stability_experiment(datum: Optional[Datum] = None, n_samples: int = 400,
                               seed: int = 0, threshold: float = 1e-4,
                               restarts: int = 8) -> TupleStabilityReport:
    """Sample det-normalized tuples around the maximizer, with random offsets."""
    datum = datum or frame_120()
    verdict = classify_simplicity(datum, seed=seed)
    if verdict.tag == NOT_SIMPLE:
        raise ValueError("tuple stability needs a simple datum")
    res = bl_constant(datum, restarts=restarts, seed=seed)
    A_star = normalize_det(datum, res.maximizer)
    BL = res.value
    rng = np.random.default_rng(seed)
    root = [sqrtm_pd(a) for a in A_star.A]
    samples = []
    for i in range(n_samples):
        scale = 10 ** rng.uniform(-4, 0)
        A = []
        for R, dj in zip(root, datum.dims):
            Z = rng.standard_normal((dj, dj))
            A.append(R @ expm_sym(scale * symmetrize(Z)) @ R)
        tup = normalize_det(datum, GaussianTuple(tuple(A)))
        ratio = gaussian_bl_value(datum, tup, warn=False).value / BL
        v = tuple(rng.normal(0, scale, size=dj) for dj in datum.dims)
        cs = complete_square(datum, tup.with_offsets(v))
        samples.append((i, scale, ratio, 1 - ratio, orbit_distance(tup, A_star),
                        distance_to_consistent(datum, v), -math.log(cs.c)))
    near = [s[4] for s in samples if s[2] >= 1 - threshold]
    near_max = max(near) if near else 0.0
    # monotone envelope eps(delta): worst orbit distance among tuples with deficit <= delta
    env = []
    for delta in np.logspace(-8, 0, 9):
        ds = [s[4] for s in samples if s[3] <= delta]
        env.append([float(delta), max(ds) if ds else 0.0])
    x0 = rng.standard_normal(datum.d)
    base = GaussianTuple(A_star.A)
    change = abs(complete_square(datum, base.with_offsets(
        tuple(B @ x0 for B in datum.maps))).c - 1.0)
    kappas = [s[6] / s[5] ** 2 for s in samples if s[5] > 1e-8]
    return TupleStabilityReport(BL, A_star, res.restarts_agree, samples, near_max, threshold,
                                env, change, float(min(kappas)) if kappas else 0.0)


# ---------------------------------------------------------------------------
# Hölder equality tuples

@dataclass
class HolderReport:
    p: list
    profile: str
    r: float
    blbp: float
    D: list
    flagged: bool
    proportionality_error: float

    def rows(self):
        header = ["factor", "p", "D"]
        return header, [[j, p, D] for j, (p, D) in enumerate(zip(self.p, self.D))]

    def summary(self) -> dict:
        out = dict(self.__dict__)
        out["pass"] = bool(abs(self.blbp - 1) <= 1e-8 and (
            self.flagged if self.profile == "bump" else max(self.D) < 1e-6))
        return out


def holder_equality_family(p: Sequence[float] = (2.0, 2.0), profile: str = "bump",
                           r: float = 1.0, opts: Optional[QuadratureOpts] = None,
                           starts: int = 16, seed: int = 0) -> HolderReport:
    """``f_j = psi^{r/p_j}`` so that every ``|f_j|^{p_j} = psi^r``; Hölder is then an equality.

    With the compact bump ``psi`` each ``f_j`` stays a fixed distance from the
    Gaussians although the functional equals its maximum 1.
    """
    p = [float(x) for x in p]
    if abs(sum(1 / x for x in p) - 1) > 1e-12:
        raise ValueError("exponents must satisfy sum 1/p_j = 1")
    datum = Datum.from_maps([[[1.0]]] * len(p), p)
    if profile == "bump":
        fs = [Bump([0.0], 1.0, 1.0, r / pj) for pj in p]
    elif profile == "gaussian":
        fs = [ClosedGaussian(centered([[math.pi * r / pj]])) for pj in p]
    else:
        raise ValueError("profile must be 'bump' or 'gaussian'")
    y = np.linspace(-0.99, 0.99, 101)
    powers = [np.abs(f(y)) ** pj for f, pj in zip(fs, p)]
    prop = max(float(np.max(np.abs(pw - powers[0]))) for pw in powers)
    if prop > 1e-12:
        raise RuntimeError("|f_j|^{p_j} are not proportional (error %.3g)" % prop)
    ratio = blbp_parts(datum, fs, opts).ratio
    D = [dist_to_gaussians(f, pj, COMPLEX, opts, starts=starts, seed=seed).relative
         for f, pj in zip(fs, p)]
    flagged = bool(abs(ratio - 1) <= 1e-8 and min(D) >= 0.1)
    return HolderReport(p, profile, r, ratio, D, flagged, prop)


# ---------------------------------------------------------------------------
# quadratic-phase extremizers

@dataclass
class ComplexExtremizerReport:
    a: Optional[np.ndarray]
    residual: float
    blbp: Optional[float]
    bl_const: float
    D: list
    note: str
    datum: Datum

    def rows(self):
        header = ["factor", "a", "D"]
        if self.a is None:
            return header, []
        return header, [[j, float(a), D] for j, (a, D) in enumerate(zip(self.a, self.D))]

    def summary(self) -> dict:
        ok = self.a is not None
        return {
            "a": None if not ok else self.a.tolist(), "residual": self.residual,
            "abs_blbp": self.blbp, "bl_const": self.bl_const, "D": self.D, "note": self.note,
            "pass": bool(ok and self.residual <= 1e-12
                         and abs(self.blbp - self.bl_const) <= 1e-6
                         and all(D >= 1e-2 for D, a in zip(self.D, self.a) if a != 0)),
        }


def quadratic_coordinates(v) -> np.ndarray:
    """Coordinates of ``x -> <x, v>^2``: ``v_i^2`` then ``sqrt(2) v_i v_k`` for ``i < k``."""
    v = np.asarray(v, float)
    d = len(v)
    off = [math.sqrt(2) * v[i] * v[k] for i in range(d) for k in range(i + 1, d)]
    return np.concatenate([v ** 2, off])


def complex_extremizer_build(vectors, p: Optional[float] = None, restarts: int = 8,
                             seed: int = 0, opts: Optional[QuadratureOpts] = None,
                             starts: int = 16) -> ComplexExtremizerReport:
    """Quadratic phases ``a_j <x, v_j>^2`` summing to zero turn the Gaussian
    extremizer into a non-Gaussian one with the same modulus of the functional.
    """
    V = np.asarray(vectors, float)
    m, d = V.shape
    datum = rank_one(V, p)
    Q = np.column_stack([quadratic_coordinates(v) for v in V])
    N = null_space(Q)
    res = bl_constant(datum, restarts=restarts, seed=seed)
    if N.shape[1] == 0:
        return ComplexExtremizerReport(None, 0.0, None, res.value, [],
                                       "no phase extremizer from this construction", datum)
    a = N[:, 0]
    a = a / np.linalg.norm(a)
    first = a[np.flatnonzero(np.abs(a) > 1e-12)[0]]
    a = a if first > 0 else -a
    a[np.abs(a) < 1e-15] = 0.0
    residual = float(np.linalg.norm(sum(aj * np.outer(v, v) for aj, v in zip(a, V))))
    C = GaussianTuple(tuple(x / f.p for x, f in zip(res.maximizer.A, datum.factors)))
    phases = [np.array([[aj]]) for aj in a]
    blbp = abs(modulated_blbp(datum, C, phases))
    D = []
    for c, aj, f in zip(C.A, a, datum.factors):
        spec = ModulatedGaussian(centered(c), np.array([[aj]]))
        D.append(dist_to_gaussians(spec, f.p, COMPLEX, opts, starts=starts, seed=seed).relative
                 if aj != 0 else 0.0)
    note = "vectors assumed in general position (every d of them independent)"
    if N.shape[1] > 1:
        note += "; nullspace has dimension %d, first basis vector used" % N.shape[1]
    return ComplexExtremizerReport(a, residual, blbp, res.value, D, note, datum)
