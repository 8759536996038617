"""Numerical evaluation of multilinear forms, L^p norms, Fourier transforms and
distances to Gaussian classes for general inputs.

Tensor grids are uniform with an odd number of points per axis, so the
every-other-point subgrid gives a Richardson-style error estimate from the same
function evaluations.  Integration boxes are derived from per-function
"envelope pieces": ellipsoids ``(y - mu)^T R (y - mu) <= L`` outside of which
the function is below ``truncation`` times its peak.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import minimize

from ._linalg import as_matrix, symmetrize
from .datum import Datum
from .gaussian import ComplexGaussianSpec, lp_norm


class QuadratureError(RuntimeError):
    """Quadrature could not be set up or failed its self-checks."""


DEFAULT_POINTS = {1: 4097, 2: 513, 3: 129, 4: 33}


@dataclass(frozen=True)
class QuadratureOpts:
    points_per_axis: Optional[int] = None
    truncation: float = 1e-14
    radius_multiplier: float = 1.0
    method: str = "tensor-grid"
    mc_samples: int = 100_000
    seed: Optional[int] = None
    target_rel_error: float = 1e-6
    box: Optional[tuple] = None
    chunk_points: int = 2_000_000

    def __post_init__(self):
        if self.method not in ("tensor-grid", "monte-carlo"):
            raise ValueError("unknown quadrature method %r" % self.method)
        if self.points_per_axis is not None and self.points_per_axis < 16:
            raise ValueError("tensor grids need at least 16 points per axis")
        if self.method == "monte-carlo" and self.seed is None:
            raise ValueError("monte-carlo quadrature requires a seed")
        if not 0 < self.truncation < 1:
            raise ValueError("truncation level must lie in (0, 1)")

    @property
    def level(self) -> float:
        return math.log(1.0 / self.truncation)

    def points(self, dim: int) -> int:
        n = self.points_per_axis or DEFAULT_POINTS.get(dim, 17)
        return n if n % 2 == 1 else n + 1

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        if self.box is not None:
            out["box"] = [list(map(float, b)) for b in self.box]
        return out


@dataclass
class QuadResult:
    value: complex
    error_estimate: float
    flagged: bool = False
    n_points: int = 0

    def __float__(self):
        return float(np.real(self.value))


@dataclass(frozen=True)
class Piece:
    """Significant region ``(y - center)^T precision (y - center) <= level``."""

    center: np.ndarray
    precision: np.ndarray
    compact: bool = False


# ---------------------------------------------------------------------------
# function specs

def bump_profile(z, power=1.0):
    """``exp(-power / (1 - |z|^2))`` on the open unit ball, zero outside."""
    z = np.asarray(z, dtype=float)
    r2 = np.sum(z * z, axis=-1)
    out = np.zeros(r2.shape)
    inside = r2 < 1.0
    out[inside] = np.exp(-power / (1.0 - r2[inside]))
    return out


def _gaussian_piece(g: ComplexGaussianSpec):
    mu, _ = g.modulus_peak()
    return Piece(mu, g.S.real)


def _ball_piece(center, radius, level):
    n = len(center)
    return Piece(np.asarray(center, float), np.eye(n) * level / radius ** 2, compact=True)


def _points(y, n):
    y = np.asarray(y, dtype=float)
    if n == 1 and (y.ndim == 0 or y.shape[-1] != 1):
        y = y[..., None]
    return y


class FunctionSpec:
    """Base class for the input variants; instances are callables on ``(..., n)`` arrays."""

    variant = ""
    dim: int

    def __call__(self, y):
        raise NotImplementedError

    def pieces(self, level: float) -> list:
        raise NotImplementedError

    def gaussian_part(self) -> Optional[ComplexGaussianSpec]:
        return None

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(obj: dict) -> "FunctionSpec":
        kind = obj.get("variant")
        cls = _VARIANTS.get(kind)
        if cls is None:
            raise ValueError("unknown function variant %r" % (kind,))
        extra = set(obj) - _FIELDS[kind] - {"variant"}
        if extra:
            raise ValueError("%s: unknown field(s) %s" % (kind, ", ".join(sorted(extra))))
        return cls._from_dict(obj)


@dataclass(frozen=True)
class ClosedGaussian(FunctionSpec):
    g: ComplexGaussianSpec
    variant = "ClosedGaussian"

    @property
    def dim(self):
        return self.g.dim

    def __call__(self, y):
        return self.g(_points(y, self.dim))

    def pieces(self, level):
        return [_gaussian_piece(self.g)]

    def gaussian_part(self):
        return self.g

    def to_dict(self):
        return {"variant": self.variant, "gaussian": self.g.to_dict()}

    @classmethod
    def _from_dict(cls, obj):
        return cls(ComplexGaussianSpec.from_dict(obj["gaussian"]))


@dataclass(frozen=True)
class SumOfGaussians(FunctionSpec):
    terms: tuple
    n: int = 1
    variant = "SumOfGaussians"

    @property
    def dim(self):
        return self.terms[0].dim if self.terms else self.n

    def __call__(self, y):
        y = _points(y, self.dim)
        out = np.zeros(y.shape[:-1], dtype=complex)
        for g in self.terms:
            out = out + g(y)
        return out

    def pieces(self, level):
        return [_gaussian_piece(g) for g in self.terms]

    def gaussian_part(self):
        return self.terms[0] if self.terms else None

    def to_dict(self):
        return {"variant": self.variant, "dim": self.dim,
                "terms": [g.to_dict() for g in self.terms]}

    @classmethod
    def _from_dict(cls, obj):
        return cls(tuple(ComplexGaussianSpec.from_dict(t) for t in obj.get("terms", [])),
                   int(obj.get("dim", 1)))


@dataclass(frozen=True)
class Bump(FunctionSpec):
    """``amplitude * bump_profile((y - center) / radius, power)``."""

    center: np.ndarray
    radius: float = 1.0
    amplitude: complex = 1.0
    power: float = 1.0
    variant = "Bump"

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
        if not self.radius > 0:
            raise ValueError("bump radius must be positive")

    @property
    def dim(self):
        return self.center.shape[0]

    def __call__(self, y):
        y = _points(y, self.dim)
        return self.amplitude * bump_profile((y - self.center) / self.radius, self.power)

    def pieces(self, level):
        return [_ball_piece(self.center, self.radius, level)] if self.amplitude != 0 else []

    def to_dict(self):
        a = complex(self.amplitude)
        return {"variant": self.variant, "center": self.center.tolist(), "radius": self.radius,
                "amplitude_re": a.real, "amplitude_im": a.imag, "power": self.power}

    @classmethod
    def _from_dict(cls, obj):
        return cls(np.asarray(obj["center"], float), float(obj.get("radius", 1.0)),
                   complex(obj.get("amplitude_re", 1.0), obj.get("amplitude_im", 0.0)),
                   float(obj.get("power", 1.0)))


@dataclass(frozen=True)
class GaussianPlusBump(FunctionSpec):
    """``gaussian + amplitude * bump_profile((y - center) / radius)``."""

    gaussian: ComplexGaussianSpec
    amplitude: complex
    center: np.ndarray
    radius: float = 1.0
    power: float = 1.0
    variant = "GaussianPlusBump"

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        if c.shape != (self.gaussian.dim,):
            raise ValueError("bump centre has the wrong dimension")
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise ValueError("bump radius must be positive")

    @property
    def dim(self):
        return self.gaussian.dim

    @property
    def bump(self) -> Bump:
        return Bump(self.center, self.radius, self.amplitude, self.power)

    def __call__(self, y):
        y = _points(y, self.dim)
        return self.gaussian(y) + self.bump(y)

    def pieces(self, level):
        return [_gaussian_piece(self.gaussian)] + self.bump.pieces(level)

    def gaussian_part(self):
        return self.gaussian

    def to_dict(self):
        a = complex(self.amplitude)
        return {"variant": self.variant, "gaussian": self.gaussian.to_dict(),
                "amplitude_re": a.real, "amplitude_im": a.imag,
                "center": self.center.tolist(), "radius": self.radius, "power": self.power}

    @classmethod
    def _from_dict(cls, obj):
        return cls(ComplexGaussianSpec.from_dict(obj["gaussian"]),
                   complex(obj.get("amplitude_re", 0.0), obj.get("amplitude_im", 0.0)),
                   np.asarray(obj["center"], float), float(obj.get("radius", 1.0)),
                   float(obj.get("power", 1.0)))


@dataclass(frozen=True)
class ModulatedGaussian(FunctionSpec):
    """``base(y) * exp(i <P y, y>)`` for a real symmetric ``P``."""

    base: ComplexGaussianSpec
    phase: np.ndarray
    variant = "ModulatedGaussian"

    def __post_init__(self):
        P = as_matrix(np.asarray(self.phase, dtype=float), self.base.dim)
        object.__setattr__(self, "phase", symmetrize(P))

    @property
    def dim(self):
        return self.base.dim

    def as_gaussian(self) -> ComplexGaussianSpec:
        return ComplexGaussianSpec(self.base.c, self.base.S - 1j * self.phase, self.base.w)

    def __call__(self, y):
        return self.as_gaussian()(_points(y, self.dim))

    def pieces(self, level):
        return [_gaussian_piece(self.base)]

    def gaussian_part(self):
        return self.base

    def to_dict(self):
        return {"variant": self.variant, "base": self.base.to_dict(),
                "phase": self.phase.tolist()}

    @classmethod
    def _from_dict(cls, obj):
        return cls(ComplexGaussianSpec.from_dict(obj["base"]), np.asarray(obj["phase"], float))


@dataclass(frozen=True)
class GridFunction(FunctionSpec):
    """Samples on the uniform grid ``lower + k * spacing``; linear interpolation, zero outside."""

    lower: np.ndarray
    spacing: np.ndarray
    values: np.ndarray
    variant = "GridFunction"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        n = values.ndim
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        spacing = np.atleast_1d(np.asarray(self.spacing, dtype=float))
        if lower.shape != (n,) or spacing.shape != (n,):
            raise ValueError("grid geometry does not match the sample array")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "spacing", spacing)

    @property
    def dim(self):
        return self.values.ndim

    @property
    def axes(self):
        return [lo + h * np.arange(k) for lo, h, k in zip(self.lower, self.spacing, self.values.shape)]

    @property
    def upper(self):
        return self.lower + self.spacing * (np.array(self.values.shape) - 1)

    def __call__(self, y):
        y = _points(y, self.dim)
        interp = RegularGridInterpolator(self.axes, self.values, bounds_error=False, fill_value=0.0)
        flat = y.reshape(-1, self.dim)
        return interp(flat).reshape(y.shape[:-1])

    def pieces(self, level):
        half = 0.5 * (self.upper - self.lower)
        center = 0.5 * (self.upper + self.lower)
        prec = np.diag(level / (self.dim * np.maximum(half, 1e-300) ** 2))
        return [Piece(center, prec, compact=True)]

    def to_dict(self):
        return {"variant": self.variant, "lower": self.lower.tolist(),
                "spacing": self.spacing.tolist(),
                "values_re": self.values.real.tolist(), "values_im": self.values.imag.tolist()}

    @classmethod
    def _from_dict(cls, obj):
        vals = np.asarray(obj["values_re"], float) + 1j * np.asarray(obj.get("values_im", 0.0))
        return cls(np.asarray(obj["lower"], float), np.asarray(obj["spacing"], float), vals)


_VARIANTS = {c.variant: c for c in (ClosedGaussian, SumOfGaussians, Bump, GaussianPlusBump,
                                    ModulatedGaussian, GridFunction)}
_FIELDS = {
    "ClosedGaussian": {"gaussian"},
    "SumOfGaussians": {"dim", "terms"},
    "Bump": {"center", "radius", "amplitude_re", "amplitude_im", "power"},
    "GaussianPlusBump": {"gaussian", "amplitude_re", "amplitude_im", "center", "radius", "power"},
    "ModulatedGaussian": {"base", "phase"},
    "GridFunction": {"lower", "spacing", "values_re", "values_im"},
}


def as_spec(f) -> FunctionSpec:
    if isinstance(f, FunctionSpec):
        return f
    if isinstance(f, ComplexGaussianSpec):
        return ClosedGaussian(f)
    raise TypeError("cannot interpret %r as a function spec" % (f,))


def zero_function(dim: int = 1) -> SumOfGaussians:
    return SumOfGaussians((), dim)


def sample_on_grid(f: FunctionSpec, lower, upper, n: int) -> GridFunction:
    lower = np.atleast_1d(np.asarray(lower, float))
    upper = np.atleast_1d(np.asarray(upper, float))
    axes = [np.linspace(lo, hi, n) for lo, hi in zip(lower, upper)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return GridFunction(lower, (upper - lower) / (n - 1), f(mesh))


# ---------------------------------------------------------------------------
# boxes and tensor grids

def _ellipsoid_box(center, precision, level):
    cov = np.linalg.inv(precision)
    half = np.sqrt(np.maximum(level, 0.0) * np.diag(cov))
    return center - half, center + half


def _union(boxes):
    lo = np.min([b[0] for b in boxes], axis=0)
    hi = np.max([b[1] for b in boxes], axis=0)
    return lo, hi


def _expand(box, mult):
    lo, hi = box
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo) * mult
    return mid - half, mid + half


def function_box(f: FunctionSpec, opts: QuadratureOpts):
    if isinstance(f, GridFunction):
        return f.lower.copy(), f.upper.copy()
    pieces = f.pieces(opts.level)
    if not pieces:
        return None
    box = _union([_ellipsoid_box(p.center, p.precision, opts.level) for p in pieces])
    return _expand(box, opts.radius_multiplier)


def bl_box(datum: Datum, fs: Sequence[FunctionSpec], opts: QuadratureOpts):
    """Bounding box of the region where ``prod_j f_j(B_j x)`` is significant."""
    if opts.box is not None:
        lo, hi = (np.asarray(b, float) for b in opts.box)
        return lo, hi
    L = opts.level
    per_factor = [f.pieces(L) for f in fs]
    if any(not p for p in per_factor):
        return None
    boxes = []
    for combo in itertools.product(*per_factor):
        P = np.zeros((datum.d, datum.d))
        b = np.zeros(datum.d)
        const = 0.0
        PG = np.zeros((datum.d, datum.d))
        bG = np.zeros(datum.d)
        constG = 0.0
        n_compact = 0
        for piece, B in zip(combo, datum.maps):
            Rb = B.T @ piece.precision
            P += Rb @ B
            b += Rb @ piece.center
            const += piece.center @ piece.precision @ piece.center
            if piece.compact:
                n_compact += 1
            else:
                PG += Rb @ B
                bG += Rb @ piece.center
                constG += piece.center @ piece.precision @ piece.center
        if np.linalg.eigvalsh(symmetrize(P))[0] <= 1e-12 * max(1.0, np.abs(P).max()):
            raise QuadratureError("no decaying envelope in some direction; pass an explicit box")
        x0 = np.linalg.solve(P, b)
        m0 = const - x0 @ P @ x0
        if n_compact < len(combo):
            xg, *_ = np.linalg.lstsq(PG, bG, rcond=None)
            m0G = constG - xg @ PG @ xg
        else:
            m0G = 0.0
        level = L * (1 + n_compact) + max(m0G, 0.0)
        if level - m0 <= 0:
            continue
        boxes.append(_ellipsoid_box(x0, P, level - m0))
    if not boxes:
        return None
    return _expand(_union(boxes), opts.radius_multiplier)


def _grid_axes(box, n):
    lo, hi = box
    axes = [np.linspace(a, b, n) for a, b in zip(lo, hi)]
    h = (np.asarray(hi) - np.asarray(lo)) / (n - 1)
    return axes, h


def _tensor_integrate(integrand, box, n, chunk_points=2_000_000, power_abs=None):
    """Sum ``integrand`` over an ``n^d`` grid and its every-other-point subgrid.

    Returns ``(fine, coarse, abs_sum)`` where the sums are already multiplied by
    the cell volume.  Partial sums are accumulated with ``math.fsum``.
    """
    axes, h = _grid_axes(box, n)
    d = len(axes)
    vol = float(np.prod(h))
    rest = n ** (d - 1)
    rows = max(1, chunk_points // max(rest, 1))
    fine_re, fine_im, coarse_re, coarse_im, abs_parts = [], [], [], [], []
    for start in range(0, n, rows):
        idx0 = np.arange(start, min(start + rows, n))
        sub_axes = [axes[0][idx0]] + axes[1:]
        mesh = np.stack(np.meshgrid(*sub_axes, indexing="ij"), axis=-1)
        vals = np.asarray(integrand(mesh))
        fine_re.append(float(np.sum(vals.real)))
        fine_im.append(float(np.sum(vals.imag)) if np.iscomplexobj(vals) else 0.0)
        abs_parts.append(float(np.sum(np.abs(vals))))
        sel = vals[(idx0 % 2 == 0)]
        for k in range(1, d):
            sel = np.take(sel, np.arange(0, n, 2), axis=k)
        coarse_re.append(float(np.sum(sel.real)))
        coarse_im.append(float(np.sum(sel.imag)) if np.iscomplexobj(sel) else 0.0)
    fine = complex(math.fsum(fine_re), math.fsum(fine_im)) * vol
    coarse = complex(math.fsum(coarse_re), math.fsum(coarse_im)) * vol * 2 ** d
    return fine, coarse, math.fsum(abs_parts) * vol


def _richardson(fine, coarse, abs_sum):
    return abs(fine - coarse) + 64 * np.finfo(float).eps * abs_sum


# ---------------------------------------------------------------------------
# L^p norms

def lp_norm_numeric(f, p: float, opts: Optional[QuadratureOpts] = None) -> QuadResult:
    """``||f||_p`` with an error estimate; closed form for Gaussian variants."""
    opts = opts or QuadratureOpts()
    f = as_spec(f)
    if p < 1:
        raise ValueError("L^p norm needs p >= 1, got %r" % p)
    if isinstance(f, ClosedGaussian):
        return QuadResult(lp_norm(f.g, p), 0.0)
    if isinstance(f, ModulatedGaussian):
        return QuadResult(lp_norm(f.base, p), 0.0)
    if isinstance(f, GridFunction):
        return _grid_lp(f, p, opts)
    box = function_box(f, opts)
    if box is None:
        return QuadResult(0.0, 0.0)
    n = opts.points(f.dim)
    if math.isinf(p):
        axes, _ = _grid_axes(box, n)
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return QuadResult(float(np.abs(f(mesh)).max()), 0.0, n_points=n ** f.dim)
    fine, coarse, abs_sum = _tensor_integrate(lambda y: np.abs(f(y)) ** p, box, n,
                                              opts.chunk_points)
    return _norm_from_integral(fine.real, _richardson(fine, coarse, abs_sum), p, opts,
                               n ** f.dim)


def _norm_from_integral(I, err_I, p, opts, npts):
    if I <= 0:
        return QuadResult(0.0, err_I, n_points=npts)
    value = I ** (1.0 / p)
    err = value * err_I / (p * I)
    return QuadResult(value, err, flagged=err > opts.target_rel_error * value, n_points=npts)


def _grid_lp(f: GridFunction, p, opts):
    a = np.abs(f.values)
    if math.isinf(p):
        return QuadResult(float(a.max()), 0.0, n_points=a.size)
    vol = float(np.prod(f.spacing))
    fine = float(np.sum(a ** p)) * vol
    sel = a ** p
    for k in range(f.dim):
        sel = np.take(sel, np.arange(0, a.shape[k], 2), axis=k)
    coarse = float(np.sum(sel)) * vol * 2 ** f.dim
    err = abs(fine - coarse) + 64 * np.finfo(float).eps * fine
    return _norm_from_integral(fine, err, p, opts, a.size)


# ---------------------------------------------------------------------------
# the multilinear form

def _product(datum, fs):
    def integrand(x):
        out = None
        for f, B in zip(fs, datum.maps):
            val = f(x @ B.T)
            out = val if out is None else out * val
        return out
    return integrand


def _mc_sampler(datum, fs, opts):
    L = opts.level
    P = np.zeros((datum.d, datum.d))
    b = np.zeros(datum.d)
    for f, B in zip(fs, datum.maps):
        for piece in f.pieces(L):
            if not piece.compact:
                P += B.T @ piece.precision @ B
                b += B.T @ piece.precision @ piece.center
                break
    if np.linalg.eigvalsh(symmetrize(P))[0] <= 1e-12:
        raise QuadratureError("monte-carlo needs a decaying Gaussian envelope")
    # widen the envelope so the weights stay bounded
    return np.linalg.solve(P, b), 0.5 * P


def bl_integral_numeric(datum: Datum, fs: Sequence, opts: Optional[QuadratureOpts] = None,
                        sampler: Optional[tuple] = None) -> QuadResult:
    """``int_{R^d} prod_j f_j(B_j x) dx``.

    ``sampler`` is an optional ``(center, precision)`` for the importance
    density ``exp(-(x - c)^T P (x - c))`` used by the monte-carlo method.
    """
    opts = opts or QuadratureOpts()
    fs = [as_spec(f) for f in fs]
    if len(fs) != datum.m:
        raise ValueError("need one function per factor")
    for f, dj in zip(fs, datum.dims):
        if f.dim != dj:
            raise ValueError("function of dimension %d paired with a map onto R^%d" % (f.dim, dj))
    integrand = _product(datum, fs)
    if opts.method == "monte-carlo":
        if any(not f.pieces(opts.level) for f in fs):
            return QuadResult(0.0, 0.0)
        center, prec = sampler if sampler is not None else _mc_sampler(datum, fs, opts)
        return _monte_carlo(integrand, np.asarray(center, float), np.asarray(prec, float), opts)
    box = bl_box(datum, fs, opts)
    if box is None:
        return QuadResult(0.0, 0.0)
    n = opts.points(datum.d)
    fine, coarse, abs_sum = _tensor_integrate(integrand, box, n, opts.chunk_points)
    err = _richardson(fine, coarse, abs_sum)
    return QuadResult(fine, err, flagged=err > opts.target_rel_error * max(abs(fine), 1e-300),
                      n_points=n ** datum.d)


def _monte_carlo(integrand, center, prec, opts):
    d = len(center)
    rng = np.random.default_rng(opts.seed)
    cov = 0.5 * np.linalg.inv(prec)
    chol = np.linalg.cholesky(cov)
    norm = math.pi ** (d / 2) / math.sqrt(np.linalg.det(prec))
    n = int(opts.mc_samples)
    batch = 100_000
    sums, sq = [], []
    done = 0
    while done < n:
        k = min(batch, n - done)
        z = rng.standard_normal((k, d))
        x = center + z @ chol.T
        dens = np.exp(-0.5 * np.sum(z * z, axis=1)) / norm
        w = integrand(x) / dens
        sums.append(complex(np.sum(w)))
        sq.append(float(np.sum(np.abs(w) ** 2)))
        done += k
    mean = complex(math.fsum(s.real for s in sums), math.fsum(s.imag for s in sums)) / n
    var = max(math.fsum(sq) / n - abs(mean) ** 2, 0.0)
    err = math.sqrt(var / n)
    return QuadResult(mean, err, flagged=err > opts.target_rel_error * max(abs(mean), 1e-300),
                      n_points=n)


@dataclass
class RatioParts:
    ratio: float
    integral: QuadResult
    norms: list


def blbp_parts(datum: Datum, fs: Sequence, opts: Optional[QuadratureOpts] = None) -> RatioParts:
    opts = opts or QuadratureOpts()
    fs = [as_spec(f) for f in fs]
    norms = []
    for j, (f, fac) in enumerate(zip(fs, datum.factors)):
        nr = lp_norm_numeric(f, fac.p, opts)
        if not nr.value > 0:
            raise ValueError("factor %d has zero L^%g norm" % (j, fac.p))
        norms.append(nr)
    integral = bl_integral_numeric(datum, fs, opts)
    ratio = abs(integral.value) / float(np.prod([nr.value for nr in norms]))
    return RatioParts(ratio, integral, norms)


def blbp_ratio(datum: Datum, fs: Sequence, opts: Optional[QuadratureOpts] = None) -> float:
    """``|int prod f_j(B_j x) dx| / prod ||f_j||_{p_j}``."""
    return blbp_parts(datum, fs, opts).ratio


# ---------------------------------------------------------------------------
# Fourier transforms on grids

def fourier_numeric(f, opts: Optional[QuadratureOpts] = None,
                    box: Optional[tuple] = None, boundary_tol: float = 1e-8,
                    pad: float = 6.0) -> GridFunction:
    """Grid approximation of ``fhat(xi) = int f(x) exp(-2 pi i <x, xi>) dx`` by FFT.

    An ``N``-point grid of spacing ``h`` starting at ``x0`` maps to the centred
    frequency grid ``k / (N h)``; the phase ``exp(-2 pi i x0 xi)`` restores the
    offset.  The default box is the significant region of ``f`` enlarged by
    ``pad`` so that the frequency spacing ``1 / (N h)`` resolves ``fhat``.
    Raises :class:`QuadratureError` when either grid carries more than
    ``boundary_tol`` of the energy on its boundary layer.
    """
    opts = opts or QuadratureOpts()
    f = as_spec(f)
    if isinstance(f, GridFunction):
        grid = f
    else:
        if box is None:
            box = function_box(f, opts)
            if box is None:
                raise QuadratureError("zero function has no transform box")
            box = _expand(box, pad)
        n = opts.points(f.dim) - 1
        lo, hi = (np.asarray(b, float) for b in box)
        h = (hi - lo) / n
        axes = [a + hh * np.arange(n) for a, hh in zip(lo, h)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        grid = GridFunction(lo, h, f(mesh))
    _check_boundary(grid.values, boundary_tol, "input")
    vals = grid.values
    shape = np.array(vals.shape)
    freqs = [np.fft.fftshift(np.fft.fftfreq(k, hh)) for k, hh in zip(shape, grid.spacing)]
    F = np.fft.fftshift(np.fft.fftn(vals)) * float(np.prod(grid.spacing))
    mesh = np.meshgrid(*freqs, indexing="ij")
    phase = sum(x0 * xi for x0, xi in zip(grid.lower, mesh))
    F = F * np.exp(-2j * math.pi * phase)
    _check_boundary(F, boundary_tol, "output")
    lower = np.array([fr[0] for fr in freqs])
    spacing = 1.0 / (shape * grid.spacing)
    return GridFunction(lower, spacing, F)


def _check_boundary(values, tol, which):
    e = np.abs(values) ** 2
    total = float(e.sum())
    if total == 0:
        return
    mask = np.zeros(values.shape, dtype=bool)
    for k in range(values.ndim):
        idx = [slice(None)] * values.ndim
        idx[k] = [0, -1]
        mask[tuple(idx)] = True
    if float(e[mask].sum()) > tol * total:
        raise QuadratureError("%s grid has significant energy on its boundary; enlarge the box"
                              % which)


# ---------------------------------------------------------------------------
# distance to Gaussian classes

REAL_POSITIVE = "RealPositive"
COMPLEX = "Complex"


@dataclass
class DistanceResult:
    dist: float
    norm: float
    argmin: Optional[ComplexGaussianSpec]
    converged: bool = True
    starts: int = 0
    history: list = field(default_factory=list)

    @property
    def relative(self) -> float:
        return self.dist / self.norm if self.norm > 0 else math.inf


def _in_class(g: ComplexGaussianSpec, cls):
    return g.is_positive if cls == REAL_POSITIVE else g.in_complex_class


class _GaussParam:
    """``|c| e^{i theta} exp(-(y - mu)^T A (y - mu) + i b.y)`` with ``A = L L^T``."""

    def __init__(self, n, cls):
        self.n, self.cls = n, cls
        self.tril = np.tril_indices(n)
        self.nl = len(self.tril[0])

    @property
    def size(self):
        return self.nl + self.n + 1 + (1 + self.n if self.cls == COMPLEX else 0)

    def unpack(self, x):
        n = self.n
        L = np.zeros((n, n))
        L[self.tril] = x[:self.nl]
        L[np.diag_indices(n)] = np.exp(np.clip(np.diag(L), -30, 30))
        A = L @ L.T
        k = self.nl
        mu = x[k:k + n]
        log_c = x[k + n]
        if self.cls == COMPLEX:
            theta = x[k + n + 1]
            b = x[k + n + 2:k + 2 * n + 2]
        else:
            theta, b = 0.0, np.zeros(n)
        return A, mu, log_c, theta, b

    def evaluate(self, x, Y):
        A, mu, log_c, theta, b = self.unpack(x)
        z = Y - mu
        expo = -np.einsum("ki,ij,kj->k", z, A, z) + log_c
        if self.cls == COMPLEX:
            return np.exp(expo + 1j * (theta + Y @ b))
        return np.exp(expo)

    def to_spec(self, x) -> ComplexGaussianSpec:
        A, mu, log_c, theta, b = self.unpack(x)
        c = np.exp(log_c - mu @ A @ mu + 1j * theta)
        return ComplexGaussianSpec(c, A.astype(complex), 2 * A @ mu + 1j * b)

    def pack(self, A, mu, c, b=None):
        L = np.linalg.cholesky(symmetrize(A))
        L[np.diag_indices_from(L)] = np.log(np.diag(L))
        parts = [L[self.tril], np.asarray(mu, float), [math.log(max(abs(c), 1e-300))]]
        if self.cls == COMPLEX:
            parts += [[float(np.angle(c))], np.zeros(self.n) if b is None else np.asarray(b, float)]
        return np.concatenate(parts)

    def from_spec(self, g: ComplexGaussianSpec):
        A = g.S.real
        mu = 0.5 * np.linalg.solve(A, g.w.real)
        c = g.c * np.exp(mu @ A @ mu)
        return self.pack(A, mu, c, g.w.imag)


def _moment_start(Y, vals, p, vol):
    w = np.abs(vals) ** p
    mass = float(w.sum())
    if mass <= 0:
        raise ValueError("cannot moment-match a zero function")
    mean = (w @ Y) / mass
    Z = Y - mean
    cov = (Z * w[:, None]).T @ Z / mass
    cov = symmetrize(cov) + 1e-12 * np.eye(Y.shape[1])
    A = np.linalg.inv(cov) / (2 * p)
    return A, mean


def dist_to_gaussians(f, p: float, cls: str = COMPLEX, opts: Optional[QuadratureOpts] = None,
                      starts: int = 16, seed: int = 0, maxiter: int = 400,
                      extra_starts: Sequence[ComplexGaussianSpec] = ()) -> DistanceResult:
    """Best-found ``inf_g ||f - g||_p`` over positive or complex Gaussians.

    The returned distance is evaluated on a box covering both ``f`` and the
    returned Gaussian, so it is an upper bound for the infimum up to quadrature
    error.
    """
    if cls not in (REAL_POSITIVE, COMPLEX):
        raise ValueError("unknown Gaussian class %r" % cls)
    opts = opts or QuadratureOpts()
    f = as_spec(f)
    fnorm = lp_norm_numeric(f, p, opts).value
    if not fnorm > 0:
        raise ValueError("distance needs a function with positive norm")
    g0 = None
    if isinstance(f, ClosedGaussian):
        g0 = f.g
    elif isinstance(f, ModulatedGaussian) and not np.any(f.phase):
        g0 = f.base
    elif isinstance(f, SumOfGaussians) and len(f.terms) == 1:
        g0 = f.terms[0]
    if g0 is not None and _in_class(g0, cls):
        return DistanceResult(0.0, fnorm, g0, True, 0)

    n = f.dim
    box = function_box(f, opts) if not isinstance(f, GridFunction) else (f.lower, f.upper)
    box = _expand(box, 1.5)
    npts = {1: 1025, 2: 129, 3: 33}.get(n, 17)
    axes, h = _grid_axes(box, npts)
    Y = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    vol = float(np.prod(h))
    fY = np.asarray(f(Y), dtype=complex)
    param = _GaussParam(n, cls)

    def objective(x):
        with np.errstate(over="ignore", invalid="ignore"):
            val = float(np.sum(np.abs(fY - param.evaluate(x, Y)) ** p)) * vol
        return val if np.isfinite(val) else 1e300

    rng = np.random.default_rng(seed)
    A_m, mu_m = _moment_start(Y, fY, p, vol)
    candidates = []
    for g in list(extra_starts) + ([f.gaussian_part()] if f.gaussian_part() is not None else []):
        if g is not None and g.dim == n:
            candidates.append(("gauss", g))
    bases = [(A_m, mu_m)]
    for kind, g in candidates:
        R = g.S.real
        bases.append((R, 0.5 * np.linalg.solve(R, g.w.real)))
    spread = np.sqrt(np.diag(np.linalg.inv(A_m)))
    x_starts = []
    for kind, g in candidates:
        gg = g if (cls == COMPLEX or g.is_positive) else ComplexGaussianSpec(
            abs(g.c), g.S.real.astype(complex), g.w.real.astype(complex))
        if cls == COMPLEX:
            gg = ComplexGaussianSpec(gg.c, gg.S.real.astype(complex), gg.w)
        x_starts.append(param.from_spec(gg))
    i = 0
    while len(x_starts) < max(starts, 1):
        A, mu = bases[i % len(bases)]
        if i >= len(bases):
            A = A * math.exp(rng.normal(0, 0.5))
            mu = mu + rng.normal(0, 0.5, size=n) * spread
        g = np.exp(-np.einsum("ki,ij,kj->k", Y - mu, A, Y - mu))
        gg = float(np.sum(g * g))
        inner = complex(np.sum(fY * g))
        c = inner / gg if gg > 0 else 1.0
        if cls == REAL_POSITIVE:
            c = max(c.real, 1e-8 * float(np.abs(fY).max()))
        x_starts.append(param.pack(A, mu, c))
        i += 1
    x_starts = x_starts[:max(starts, 1)]

    best_x, best_val, converged, history = None, math.inf, True, []
    for x0 in x_starts:
        res = minimize(objective, x0, method="L-BFGS-B",
                       options={"maxiter": maxiter, "ftol": 1e-15, "gtol": 1e-12})
        history.append(float(res.fun))
        if res.fun < best_val:
            best_val, best_x, converged = float(res.fun), res.x, bool(res.success)
    g_best = param.to_spec(best_x)
    dist = _distance_on_union(f, g_best, p, opts)
    return DistanceResult(dist, fnorm, g_best, converged, len(x_starts), history)


def _distance_on_union(f, g, p, opts):
    boxes = [function_box(ClosedGaussian(g), opts)]
    fb = function_box(f, opts) if not isinstance(f, GridFunction) else (f.lower, f.upper)
    if fb is not None:
        boxes.append(fb)
    box = _union(boxes)
    n = opts.points(f.dim)
    fine, coarse, abs_sum = _tensor_integrate(lambda y: np.abs(f(y) - g(y)) ** p, box, n,
                                              opts.chunk_points)
    return max(fine.real, 0.0) ** (1.0 / p)


def lp_distance(f, g, p: float, opts: Optional[QuadratureOpts] = None) -> float:
    """``||f - g||_p`` for a spec ``f`` and a complex Gaussian ``g``."""
    return _distance_on_union(as_spec(f), g, p, opts or QuadratureOpts())
