"""Built-in oracle checks, runnable offline via ``hslearn selftest``.

Each check recomputes an expected result through an independent route
(brute force, finite differences, hand math) and compares.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from .classifiers import KNearestNeighbors
from .dataset import Dataset
from .feature_extraction import rica_loss_and_grad
from .numerics import covariance, generalized_eigen, symmetric_eigen
from .sampling import Hypersphere, points_in_sphere

__all__ = ["run_selftest"]


def _check_symmetric_eigen():
    rng = np.random.default_rng(7)
    for _ in range(20):
        d = int(rng.integers(2, 12))
        a = rng.standard_normal((d, d))
        a = 0.5 * (a + a.T)
        eig = symmetric_eigen(a)
        scale = max(np.abs(a).max(), 1e-12)
        residual = np.abs(a @ eig.vectors - eig.vectors * eig.values).max()
        if residual > 1e-8 * scale:
            return f"eigen residual {residual:.3g} exceeds 1e-8 * scale"
        if abs(eig.values.sum() - np.trace(a)) > 1e-8 * max(abs(np.trace(a)), 1.0):
            return "eigenvalue sum does not match the trace"
    return None


def _check_generalized_eigen():
    rng = np.random.default_rng(8)
    for _ in range(20):
        d = int(rng.integers(2, 8))
        fa = rng.standard_normal((d, d + 2))
        fb = rng.standard_normal((d, d + 2))
        a = fa @ fa.T
        b = fb @ fb.T
        eig = generalized_eigen(a, b, ridge=1e-6)
        m = b + 1e-6 * float(np.mean(np.diag(b))) * np.eye(d)
        residual = np.abs(a @ eig.vectors - (m @ eig.vectors) * eig.values).max()
        if residual > 1e-7 * max(np.abs(a).max(), 1.0):
            return f"generalized residual {residual:.3g} too large"
    return None


def _check_covariance():
    rng = np.random.default_rng(9)
    x = rng.standard_normal((12, 4))
    got = covariance(x)
    mean = x.mean(axis=0)
    expected = np.zeros((4, 4))
    for row in x:
        diff = row - mean
        expected += np.outer(diff, diff)
    expected /= x.shape[0] - 1
    if np.abs(got - expected).max() > 1e-12:
        return "covariance disagrees with the two-pass oracle"
    return None


def _check_knn():
    rng = np.random.default_rng(10)
    X = rng.standard_normal((60, 3))
    y = rng.integers(0, 3, size=60)
    queries = rng.standard_normal((15, 3))
    clf = KNearestNeighbors(k=5).fit(X, y)
    got = clf.predict(queries)
    for qi, q in enumerate(queries):
        ranked = sorted(range(60), key=lambda i: (float(np.linalg.norm(X[i] - q)), i))
        votes = Counter(int(y[i]) for i in ranked[:5])
        top = max(votes.values())
        expected = min(label for label, count in votes.items() if count == top)
        if got[qi] != expected:
            return f"kNN disagrees with the exhaustive oracle on query {qi}"
    return None


def _check_sphere():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((40, 2))
    sphere = Hypersphere(rng.standard_normal(2), 1.1)
    got = set(points_in_sphere(X, sphere).tolist())
    expected = {
        i for i in range(40) if float(np.linalg.norm(X[i] - sphere.center)) <= sphere.radius
    }
    if got != expected:
        return "sphere membership disagrees with the brute-force scan"
    return None


def _check_rica_gradient():
    rng = np.random.default_rng(12)
    W = rng.standard_normal((3, 5))
    X = rng.standard_normal((8, 5))
    _, grad = rica_loss_and_grad(W, X, sparsity=0.3)
    h = 1e-5
    for _ in range(10):
        i = int(rng.integers(0, W.shape[0]))
        j = int(rng.integers(0, W.shape[1]))
        probe = W.copy()
        probe[i, j] += h
        up, _ = rica_loss_and_grad(probe, X, sparsity=0.3)
        probe[i, j] -= 2 * h
        down, _ = rica_loss_and_grad(probe, X, sparsity=0.3)
        fd = (up - down) / (2 * h)
        if abs(fd - grad[i, j]) > 1e-4 * max(abs(fd), 1e-6):
            return f"gradient mismatch at ({i},{j}): analytic {grad[i, j]:.6g} vs fd {fd:.6g}"
    return None


def _check_standardize_roundtrip():
    from .dataset import standardize, avg_feature_std

    rng = np.random.default_rng(13)
    data = Dataset(rng.standard_normal((30, 4)) * 3 + 1, rng.integers(0, 2, 30), list("abcd"), 2)
    standardized, _ = standardize(data)
    if abs(avg_feature_std(standardized) - 1.0) > 1e-9:
        return "standardized data does not have unit average feature std"
    return None


_CHECKS = [
    ("symmetric-eigen-residual", _check_symmetric_eigen),
    ("generalized-eigen-residual", _check_generalized_eigen),
    ("covariance-two-pass", _check_covariance),
    ("knn-exhaustive", _check_knn),
    ("sphere-brute-force", _check_sphere),
    ("rica-gradient-fd", _check_rica_gradient),
    ("standardize-unit-std", _check_standardize_roundtrip),
]


def run_selftest():
    """Run every check; returns (all_passed, report lines)."""
    lines = []
    ok = True
    for name, check in _CHECKS:
        problem = check()
        if problem is None:
            lines.append(f"ok   {name}")
        else:
            ok = False
            lines.append(f"FAIL {name}: {problem}")
    return ok, lines
