"""Dense symmetric linear algebra shared by the feature extractors.

Matrices are plain 2-D float64 numpy arrays.  Eigensolves are delegated to
LAPACK (``numpy.linalg.eigh``); the generalized problem is reduced to a
symmetric one by Cholesky whitening of the regularized right-hand matrix,
which avoids forming an explicit inverse.  All functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DegenerateInputError, ParameterError, ShapeError, SingularMatrixError

__all__ = ["EigenResult", "covariance", "symmetric_eigen", "generalized_eigen"]

# condition-number ceiling beyond which a regularized system counts as singular
_COND_LIMIT = 1e14


@dataclass(frozen=True)
class EigenResult:
    """Eigenvalues sorted descending, eigenvectors as matching unit-norm columns."""

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        if self.values.shape[0] != self.vectors.shape[1]:
            raise ShapeError("one eigenvector column required per eigenvalue")


def _as_matrix(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got {a.ndim}-D")
    return a


def _check_symmetric(a, name, rel_tol=1e-10):
    a = _as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {a.shape}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale > 0.0 and float(np.max(np.abs(a - a.T))) > rel_tol * scale:
        raise ShapeError(f"{name} is not symmetric to {rel_tol} relative tolerance")
    return 0.5 * (a + a.T)


def _fix_signs(vectors):
    """Flip columns so each one's largest-magnitude entry is positive."""
    v = np.array(vectors)
    if v.shape[1] == 0:
        return v
    lead = np.argmax(np.abs(v), axis=0)
    flip = v[lead, np.arange(v.shape[1])] < 0
    v[:, flip] *= -1.0
    return v


def covariance(x, center=True):
    """Sample covariance of the rows of ``x`` (n-1 divisor).

    With ``center=False`` the raw second-moment matrix x.T @ x / (n-1) is
    returned instead.
    """
    x = _as_matrix(x, "x")
    n = x.shape[0]
    if n < 2:
        raise DegenerateInputError(f"covariance needs at least 2 rows, got {n}")
    if center:
        x = x - x.mean(axis=0)
    c = x.T @ x / (n - 1)
    return 0.5 * (c + c.T)


def symmetric_eigen(a):
    """Full eigendecomposition of a symmetric matrix, eigenvalues descending.

    Eigenvector signs are fixed so the largest-magnitude entry of each
    column is positive, making results reproducible across runs.
    """
    a = _check_symmetric(a, "matrix")
    values, vectors = np.linalg.eigh(a)
    return EigenResult(values[::-1].copy(), _fix_signs(vectors[:, ::-1]))


def generalized_eigen(a, b, ridge=1e-6):
    """Solve ``a v = lam * (b + ridge * tbar * I) v`` for symmetric PSD a, b.

    ``tbar`` is the mean of b's diagonal, so the ridge is scale-free.  The
    regularized b is Cholesky-factored (b = L L^T) and the problem reduced
    to a symmetric eigensolve of L^-1 a L^-T.  Eigenvalues come back
    descending; eigenvectors are normalized to unit Euclidean norm.
    """
    a = _check_symmetric(a, "a")
    b = _check_symmetric(b, "b")
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    if ridge < 0:
        raise ParameterError(f"ridge must be >= 0, got {ridge}")

    tbar = float(np.mean(np.diag(b)))
    m = b + ridge * tbar * np.eye(b.shape[0])
    singular = np.linalg.svd(m, compute_uv=False)
    if singular[-1] <= 0.0 or singular[0] / singular[-1] > _COND_LIMIT:
        raise SingularMatrixError(
            "regularized right-hand matrix is numerically singular "
            f"(condition estimate above {_COND_LIMIT:g})"
        )
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"Cholesky factorization failed: {exc}") from exc

    # whiten: C = L^-1 a L^-T, then an ordinary symmetric solve
    half = solve_triangular(chol, a, lower=True)
    c = solve_triangular(chol, half.T, lower=True).T
    c = 0.5 * (c + c.T)
    values, q = np.linalg.eigh(c)
    vectors = solve_triangular(chol.T, q[:, ::-1], lower=False)
    vectors /= np.linalg.norm(vectors, axis=0)
    return EigenResult(values[::-1].copy(), _fix_signs(vectors))
