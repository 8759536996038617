"""Brascamp-Lieb data and their structural checks.

A datum is a list of linear surjections ``B_j : R^d -> R^{d_j}`` with Lebesgue
exponents ``p_j``.  Exponents are stored as floats with ``math.inf`` for the
infinite exponent; the derived weights ``q_j = 1/p_j`` live in ``[0, 1]``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from ._linalg import null_space_rows, numerical_rank, orthonormal_rows


class DatumError(ValueError):
    """Malformed datum (shape, rank or exponent violation)."""


@dataclass(frozen=True)
class Factor:
    matrix: np.ndarray
    p: float

    @property
    def q(self) -> float:
        return 0.0 if math.isinf(self.p) else 1.0 / self.p

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Datum:
    d: int
    factors: tuple

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DatumError("ambient dimension must be a positive integer, got %r" % (self.d,))
        if len(self.factors) < 1:
            raise DatumError("a datum needs at least one factor")
        fixed = []
        for j, fac in enumerate(self.factors):
            if not isinstance(fac, Factor):
                fac = Factor(*fac)
            mat = np.atleast_2d(np.asarray(fac.matrix, dtype=float))
            if mat.ndim != 2 or mat.shape[1] != self.d:
                raise DatumError("factor %d: matrix must have %d columns, got shape %r"
                                 % (j, self.d, mat.shape))
            dj = mat.shape[0]
            if not 1 <= dj <= self.d:
                raise DatumError("factor %d: need 1 <= d_j <= d, got d_j=%d" % (j, dj))
            if numerical_rank(mat) != dj:
                raise DatumError("factor %d: matrix is not surjective (rank < %d)" % (j, dj))
            p = float(fac.p)
            if math.isnan(p) or p < 1.0:
                raise DatumError("factor %d: exponent p=%r outside [1, inf]" % (j, fac.p))
            mat.setflags(write=False)
            fixed.append(Factor(mat, p))
        object.__setattr__(self, "factors", tuple(fixed))

    @classmethod
    def from_maps(cls, maps: Sequence, p: Sequence[float]) -> "Datum":
        maps = [np.atleast_2d(np.asarray(b, dtype=float)) for b in maps]
        if len(maps) != len(p):
            raise DatumError("got %d maps but %d exponents" % (len(maps), len(p)))
        return cls(maps[0].shape[1], tuple(Factor(b, pj) for b, pj in zip(maps, p)))

    @property
    def m(self) -> int:
        return len(self.factors)

    @property
    def maps(self) -> list:
        return [f.matrix for f in self.factors]

    @property
    def p(self) -> np.ndarray:
        return np.array([f.p for f in self.factors])

    @property
    def q(self) -> np.ndarray:
        return np.array([f.q for f in self.factors])

    @property
    def dims(self) -> list:
        return [f.dim for f in self.factors]

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "factors": [
                {"matrix": f.matrix.tolist(), "p": "inf" if math.isinf(f.p) else f.p}
                for f in self.factors
            ],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Datum":
        unknown = set(obj) - {"d", "factors"}
        if unknown:
            raise DatumError("unknown datum fields: %s" % ", ".join(sorted(unknown)))
        try:
            d = obj["d"]
            raw = obj["factors"]
        except KeyError as exc:
            raise DatumError("datum is missing field %s" % exc) from None
        factors = []
        for j, fac in enumerate(raw):
            extra = set(fac) - {"matrix", "p", "d_j"}
            if extra:
                raise DatumError("factor %d: unknown fields %s" % (j, ", ".join(sorted(extra))))
            rows = np.atleast_2d(np.asarray(fac.get("matrix", []), dtype=float)).shape[0]
            if "d_j" in fac and fac["d_j"] != rows:
                raise DatumError("factor %d: matrix has %d rows but d_j=%r is declared"
                                 % (j, rows, fac["d_j"]))
            p = fac.get("p")
            if isinstance(p, str):
                if p.lower() not in ("inf", "infinity"):
                    raise DatumError("factor %d: exponent %r not understood" % (j, p))
                p = math.inf
            if p is None:
                raise DatumError("factor %d: missing exponent p" % j)
            factors.append(Factor(np.asarray(fac["matrix"], dtype=float), p))
        return cls(d, tuple(factors))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def load(cls, path) -> "Datum":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def from_q_convention(maps: Sequence, q: Sequence[float]) -> Datum:
    """Build a datum from weights ``q_j`` of the ``prod f_j(B_j x)^{q_j}`` form.

    The two formulations share their optimal constant once a nonnegative input
    ``f_j`` of the weighted form is replaced by ``f_j ** p_j`` with ``p_j = 1/q_j``
    (``q_j = 0`` maps to ``p_j = inf``).
    """
    p = []
    for j, qj in enumerate(q):
        qj = float(qj)
        if not 0.0 <= qj <= 1.0:
            raise DatumError("factor %d: weight q=%r outside [0, 1]" % (j, qj))
        p.append(math.inf if qj == 0.0 else 1.0 / qj)
    return Datum.from_maps(maps, p)


# ---------------------------------------------------------------------------
# scaling and subcriticality

def scaling_defect(datum: Datum) -> float:
    """``d - sum_j q_j d_j``; must vanish for a finite constant."""
    return float(datum.d - sum(f.q * f.dim for f in datum.factors))


def subspace_basis(vectors, d: Optional[int] = None) -> np.ndarray:
    """Orthonormal-row basis of the span of ``vectors`` (rows)."""
    vecs = np.asarray(vectors, dtype=float)
    if vecs.size == 0:
        if d is None:
            raise ValueError("need d for an empty spanning set")
        return np.zeros((0, d))
    return orthonormal_rows(np.atleast_2d(vecs))


def subcriticality_defect(datum: Datum, V: np.ndarray) -> float:
    """``sum_j q_j dim(B_j V) - dim V`` for the subspace spanned by the rows of ``V``."""
    V = np.atleast_2d(np.asarray(V, dtype=float)).reshape(-1, datum.d)
    k = V.shape[0]
    if k == 0:
        return 0.0
    total = 0.0
    for f in datum.factors:
        if f.q:
            total += f.q * numerical_rank(f.matrix @ V.T)
    return float(total - k)


def _projector(V):
    return V.T @ V


def candidate_subspaces(datum: Datum, max_dim: Optional[int] = None, n_random: int = 200,
                        seed: int = 0) -> Iterator[np.ndarray]:
    """Yield candidate subspaces (orthonormal row bases), deduplicated by projector.

    Candidates are the zero space, spans of subsets of the pooled rows of the
    ``B_j``, intersections of kernels of subfamilies, and ``n_random`` seeded
    random subspaces per intermediate dimension.
    """
    d = datum.d
    max_dim = d if max_dim is None else int(max_dim)
    if max_dim > d:
        raise ValueError("max_dim=%d exceeds the ambient dimension %d" % (max_dim, d))
    seen = []

    def fresh(V):
        P = _projector(V)
        for Q in seen:
            if Q.shape == P.shape and np.linalg.norm(P - Q) < 1e-8:
                return False
        seen.append(P)
        return True

    def emit(V):
        if V.shape[0] <= max_dim and fresh(V):
            return True
        return False

    zero = np.zeros((0, d))
    if emit(zero):
        yield zero

    rows = np.vstack(datum.maps)
    for size in range(1, min(d, rows.shape[0]) + 1):
        for idx in itertools.combinations(range(rows.shape[0]), size):
            V = orthonormal_rows(rows[list(idx)])
            if emit(V):
                yield V

    for size in range(0, datum.m + 1):
        for idx in itertools.combinations(range(datum.m), size):
            if size == 0:
                V = np.eye(d)
            else:
                V = null_space_rows(np.vstack([datum.factors[i].matrix for i in idx]))
            if emit(V):
                yield V

    rng = np.random.default_rng(seed)
    for k in range(1, min(d - 1, max_dim) + 1):
        for _ in range(n_random):
            q, _ = np.linalg.qr(rng.standard_normal((d, k)))
            V = q.T
            if emit(V):
                yield V


# ---------------------------------------------------------------------------
# verdicts

INFINITE = "InfiniteWithWitness"
FEASIBLE_ON_CANDIDATES = "FeasibleOnCandidates"
CERTIFIED_FINITE = "CertifiedFinite"

SIMPLE = "Simple"
NOT_SIMPLE = "NotSimpleWithWitness"
SIMPLE_ON_CANDIDATES = "SimpleOnCandidates"


@dataclass
class FeasibilityVerdict:
    tag: str
    scaling_defect: float
    worst_defect: float
    witness: Optional[np.ndarray] = None
    n_candidates: int = 0
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "scaling_defect": self.scaling_defect,
            "worst_defect": self.worst_defect,
            "witness": None if self.witness is None else self.witness.tolist(),
            "n_candidates": self.n_candidates,
            "note": self.note,
        }


@dataclass
class SimplicityVerdict:
    tag: str
    worst_defect: float
    witness: Optional[np.ndarray] = None
    n_candidates: int = 0

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "worst_defect": self.worst_defect,
            "witness": None if self.witness is None else self.witness.tolist(),
            "n_candidates": self.n_candidates,
        }


def _rank_one(datum):
    return all(f.dim == 1 for f in datum.factors)


def classify_finiteness(datum: Datum, n_random: int = 200, seed: int = 0,
                        tol: float = 1e-9) -> FeasibilityVerdict:
    """Decide finiteness of the constant as far as the candidate family allows.

    Rejections always carry a witness.  Acceptance is certified only for
    rank-one data, where critical subspaces are kernel intersections and the
    candidate family is therefore exhaustive.
    """
    sd = scaling_defect(datum)
    if abs(sd) > tol:
        return FeasibilityVerdict(INFINITE, sd, -abs(sd), np.eye(datum.d), 0,
                                  "scaling condition fails")
    worst, witness, count = math.inf, None, 0
    for V in candidate_subspaces(datum, n_random=n_random, seed=seed):
        count += 1
        if V.shape[0] == 0:
            continue
        defect = subcriticality_defect(datum, V)
        if defect < worst:
            worst, witness = defect, V
    if worst < -tol:
        return FeasibilityVerdict(INFINITE, sd, worst, witness, count,
                                  "supercritical subspace found")
    if _rank_one(datum):
        return FeasibilityVerdict(CERTIFIED_FINITE, sd, worst, None, count,
                                  "candidate family complete for rank-one data")
    return FeasibilityVerdict(FEASIBLE_ON_CANDIDATES, sd, worst, None, count,
                              "no supercritical candidate; family not proven complete")


def classify_simplicity(datum: Datum, n_random: int = 200, seed: int = 0,
                        tol: float = 1e-9) -> SimplicityVerdict:
    """Strict subcriticality of every nonzero proper candidate subspace."""
    if abs(scaling_defect(datum)) > tol:
        raise ValueError("simplicity requires the scaling condition")
    worst, witness, count = math.inf, None, 0
    for V in candidate_subspaces(datum, n_random=n_random, seed=seed):
        if not 0 < V.shape[0] < datum.d:
            continue
        count += 1
        defect = subcriticality_defect(datum, V)
        if defect < worst:
            worst, witness = defect, V
    if worst <= tol:
        return SimplicityVerdict(NOT_SIMPLE, worst, witness, count)
    tag = SIMPLE if _rank_one(datum) else SIMPLE_ON_CANDIDATES
    return SimplicityVerdict(tag, worst, None, count)


def is_geometric(datum: Datum, tol: float = 1e-9):
    """Check ``B_j B_j^T = I`` and the frame condition ``sum q_j B_j^T B_j = I``.

    Returns ``(flag, residuals)`` with spectral-norm residuals under the keys
    ``"isometry"`` (max over factors) and ``"frame"``.
    """
    iso = 0.0
    frame = np.zeros((datum.d, datum.d))
    for f in datum.factors:
        B = f.matrix
        iso = max(iso, float(np.linalg.norm(B @ B.T - np.eye(f.dim), 2)))
        frame += f.q * (B.T @ B)
    fr = float(np.linalg.norm(frame - np.eye(datum.d), 2))
    return (iso <= tol and fr <= tol), {"isometry": iso, "frame": fr}


# ---------------------------------------------------------------------------
# standard data used throughout tests and experiments

def loomis_whitney_2d(p=(1.0, 1.0)) -> Datum:
    return Datum.from_maps([[[0.0, 1.0]], [[1.0, 0.0]]], p)


def holder_pair(p=(2.0, 2.0)) -> Datum:
    return Datum.from_maps([[[1.0]], [[1.0]]], p)


def frame_120(p: float = 1.5) -> Datum:
    """Three unit vectors at 120 degrees in the plane."""
    angles = np.pi / 2 + 2 * np.pi * np.arange(3) / 3
    maps = [[[np.cos(a), np.sin(a)]] for a in angles]
    return Datum.from_maps(maps, [p] * 3)


def young_trilinear(p: float = 1.5) -> Datum:
    """Maps ``x``, ``y``, ``x - y`` on the plane."""
    return Datum.from_maps([[[1.0, 0.0]], [[0.0, 1.0]], [[1.0, -1.0]]], [p] * 3)


def rank_one(vectors, p: Optional[float] = None) -> Datum:
    """Rank-one datum ``B_j x = <x, v_j>`` with common exponent ``m/d`` by default."""
    vecs = np.atleast_2d(np.asarray(vectors, dtype=float))
    m, d = vecs.shape
    p = m / d if p is None else p
    return Datum.from_maps([v[None, :] for v in vecs], [p] * m)


def random_rank_one(d: int, m: int, seed: int = 0) -> Datum:
    rng = np.random.default_rng(seed)
    return rank_one(rng.standard_normal((m, d)))
