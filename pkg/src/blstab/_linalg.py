"""Small dense linear-algebra helpers shared across modules."""

import numpy as np

#: singular values below ``RANK_RTOL * s_max`` count as zero
RANK_RTOL = 1e-9


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a matrix that must be positive definite is not."""


def as_matrix(a, n=None):
    """Coerce scalars / 1x1 inputs to 2-d float arrays."""
    arr = np.atleast_2d(np.asarray(a))
    if arr.ndim != 2:
        raise ValueError("expected a matrix, got shape %r" % (arr.shape,))
    if n is not None and arr.shape != (n, n):
        raise ValueError("expected a %dx%d matrix, got %r" % (n, n, arr.shape))
    return arr


def symmetrize(a):
    return 0.5 * (a + a.T)


def numerical_rank(a, rtol=RANK_RTOL):
    a = np.atleast_2d(a)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def check_pd(a, name="matrix"):
    """Return the smallest eigenvalue of symmetric ``a``; raise if it is not PD."""
    a = np.asarray(a)
    if not np.allclose(a, a.T, rtol=0, atol=1e-10 * max(1.0, np.abs(a).max())):
        raise NotPositiveDefiniteError("%s is not symmetric" % name)
    lam = np.linalg.eigvalsh(symmetrize(a))
    if lam[0] <= 0 or lam[0] <= 1e-14 * abs(lam[-1]):
        raise NotPositiveDefiniteError(
            "%s is not positive definite (smallest eigenvalue %.3e)" % (name, lam[0]))
    return float(lam[0])


def sym_func(a, fn):
    """Apply ``fn`` to the eigenvalues of symmetric ``a``."""
    lam, vec = np.linalg.eigh(symmetrize(a))
    return (vec * fn(lam)) @ vec.T


def sqrtm_pd(a):
    return sym_func(a, np.sqrt)


def inv_sqrtm_pd(a):
    return sym_func(a, lambda x: 1.0 / np.sqrt(x))


def expm_sym(a):
    return sym_func(a, np.exp)


def logdet_pd(a):
    sign, ld = np.linalg.slogdet(a)
    if sign <= 0:
        raise NotPositiveDefiniteError("determinant is not positive")
    return float(ld)


def orthonormal_rows(a, rtol=RANK_RTOL):
    """Orthonormal basis (as rows) of the row space of ``a``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return np.zeros((0, a.shape[1] if a.ndim == 2 else 0))
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((0, a.shape[1]))
    k = int(np.sum(s > rtol * s[0]))
    return vt[:k]


def null_space_rows(a, rtol=RANK_RTOL):
    """Orthonormal basis (as rows) of the kernel of ``a``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    n = a.shape[1]
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(n)
    k = int(np.sum(s > rtol * s[0]))
    return vt[k:]
