"""Evaluation classifiers: kNN, Gaussian LDA/QDA, and a random forest.

All four follow the same minimal protocol: ``fit(X, y) -> self`` and
``predict(X) -> labels``.  Tie-breaking is fully specified so predictions
are reproducible: kNN breaks distance ties by lower training index and
vote ties by smaller class label; the forest breaks split-score ties by
lower feature index then lower threshold, and vote ties by smaller label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DegenerateInputError, ParameterError, ShapeError, SingularMatrixError

__all__ = [
    "KNearestNeighbors",
    "LdaClassifier",
    "QdaClassifier",
    "RandomForest",
    "TreeNode",
    "accuracy",
]


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ShapeError("X must be 2-D with one label per row")
    return X, y


def _check_query(X, d):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != d:
        raise ShapeError(f"query must be 2-D with {d} columns")
    return X


def accuracy(pred, truth):
    """Fraction of exact label matches."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.size == 0:
        raise ShapeError("prediction and truth must be equal-length, non-empty")
    return float(np.mean(pred == truth))


class KNearestNeighbors:
    """Unweighted majority vote over the k nearest training points (Euclidean)."""

    def __init__(self, k=5):
        if k < 1:
            raise ParameterError(f"k must be >= 1, got {k}")
        self.k = int(k)
        self.X = None
        self.y = None

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        if self.k > X.shape[0]:
            raise ParameterError(f"k={self.k} exceeds the {X.shape[0]} training points")
        self.X = X
        self.y = y
        return self

    def predict(self, X):
        X = _check_query(X, self.X.shape[1])
        n_classes = int(self.y.max()) + 1
        out = np.empty(X.shape[0], dtype=int)
        for i, q in enumerate(X):
            dist = np.linalg.norm(self.X - q, axis=1)
            # stable sort: equal distances keep training-index order
            nearest = np.argsort(dist, kind="stable")[: self.k]
            votes = np.bincount(self.y[nearest], minlength=n_classes)
            out[i] = int(votes.argmax())  # argmax returns the smallest label on ties
        return out


class _GaussianScorer:
    """Shared log-domain machinery for the Gaussian discriminant classifiers."""

    def _log_joint(self, X):
        raise NotImplementedError

    def predict(self, X):
        scores = self._log_joint(X)
        return scores.argmax(axis=1)

    def predict_proba(self, X):
        scores = self._log_joint(X)
        scores -= scores.max(axis=1, keepdims=True)
        p = np.exp(scores)
        return p / p.sum(axis=1, keepdims=True)


def _class_blocks(X, y):
    classes = np.unique(y)
    if classes.size < 2:
        raise DegenerateInputError("classification needs at least 2 classes")
    blocks = []
    for c in classes:
        block = X[y == c]
        if block.shape[0] < 2:
            raise DegenerateInputError(f"class {c} has fewer than 2 points")
        blocks.append((int(c), block))
    return blocks


def _cholesky_or_raise(matrix, what):
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"{what} is singular after regularization") from exc


class LdaClassifier(_GaussianScorer):
    """Gaussian classifier with a shared (pooled, regularized) covariance."""

    def __init__(self, reg=1e-6):
        if reg < 0:
            raise ParameterError(f"reg must be >= 0, got {reg}")
        self.reg = float(reg)

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        blocks = _class_blocks(X, y)
        n, d = X.shape
        pooled = np.zeros((d, d))
        self.classes_ = np.array([c for c, _ in blocks])
        self.means_ = np.vstack([b.mean(axis=0) for _, b in blocks])
        self.log_priors_ = np.log(np.array([b.shape[0] / n for _, b in blocks]))
        for (_, block), mu in zip(blocks, self.means_):
            centered = block - mu
            pooled += centered.T @ centered
        pooled /= n - len(blocks)
        pooled += self.reg * float(np.mean(np.diag(pooled))) * np.eye(d)
        self.chol_ = _cholesky_or_raise(pooled, "pooled covariance")
        self.log_det_ = 2.0 * float(np.log(np.diag(self.chol_)).sum())
        return self

    def _log_joint(self, X):
        X = _check_query(X, self.means_.shape[1])
        scores = np.empty((X.shape[0], self.classes_.size))
        for idx, mu in enumerate(self.means_):
            z = solve_triangular(self.chol_, (X - mu).T, lower=True)
            maha = (z**2).sum(axis=0)
            scores[:, idx] = self.log_priors_[idx] - 0.5 * (maha + self.log_det_)
        return scores

    def predict(self, X):
        return self.classes_[super().predict(X)]


class QdaClassifier(_GaussianScorer):
    """Gaussian classifier with per-class shrunk, regularized covariances."""

    def __init__(self, shrink=0.1, reg=1e-6):
        if not 0.0 <= shrink <= 1.0:
            raise ParameterError(f"shrink must be in [0, 1], got {shrink}")
        if reg < 0:
            raise ParameterError(f"reg must be >= 0, got {reg}")
        self.shrink = float(shrink)
        self.reg = float(reg)

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        blocks = _class_blocks(X, y)
        n, d = X.shape
        self.classes_ = np.array([c for c, _ in blocks])
        self.means_ = np.vstack([b.mean(axis=0) for _, b in blocks])
        self.log_priors_ = np.log(np.array([b.shape[0] / n for _, b in blocks]))
        self.chols_ = []
        self.log_dets_ = []
        for (_, block), mu in zip(blocks, self.means_):
            centered = block - mu
            cov = centered.T @ centered / (block.shape[0] - 1)
            tbar = float(np.mean(np.diag(cov)))
            cov = (1.0 - self.shrink) * cov + self.shrink * np.diag(np.diag(cov))
            cov += self.reg * tbar * np.eye(d)
            chol = _cholesky_or_raise(cov, "class covariance")
            self.chols_.append(chol)
            self.log_dets_.append(2.0 * float(np.log(np.diag(chol)).sum()))
        return self

    def _log_joint(self, X):
        X = _check_query(X, self.means_.shape[1])
        scores = np.empty((X.shape[0], self.classes_.size))
        for idx, (mu, chol, log_det) in enumerate(zip(self.means_, self.chols_, self.log_dets_)):
            z = solve_triangular(chol, (X - mu).T, lower=True)
            maha = (z**2).sum(axis=0)
            scores[:, idx] = self.log_priors_[idx] - 0.5 * (maha + log_det)
        return scores

    def predict(self, X):
        return self.classes_[super().predict(X)]


@dataclass
class TreeNode:
    """Decision-tree node: either a split (feature, threshold) or a leaf."""

    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    leaf_class: int = -1

    @property
    def is_leaf(self):
        return self.left is None


def _majority(y, n_classes):
    return int(np.bincount(y, minlength=n_classes).argmax())


def _best_split(X, y, features, n_classes):
    """Lowest weighted child Gini over midpoint thresholds of the given features.

    Ties go to the lower feature index, then the lower threshold.  Returns
    (feature, threshold) or None when no feature admits a split.
    """
    n = y.shape[0]
    onehot = np.zeros((n, n_classes))
    best = None
    for f in np.sort(features):
        x = X[:, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        boundaries = np.flatnonzero(xs[1:] != xs[:-1])
        if boundaries.size == 0:
            continue
        onehot[:] = 0.0
        onehot[np.arange(n), y[order]] = 1.0
        left_counts = onehot.cumsum(axis=0)[boundaries]
        total = onehot.sum(axis=0)
        n_left = (boundaries + 1).astype(float)
        n_right = n - n_left
        gini_left = 1.0 - ((left_counts / n_left[:, None]) ** 2).sum(axis=1)
        gini_right = 1.0 - (((total - left_counts) / n_right[:, None]) ** 2).sum(axis=1)
        weighted = (n_left * gini_left + n_right * gini_right) / n
        j = int(weighted.argmin())  # first minimum = lowest threshold
        if best is None or weighted[j] < best[0]:
            threshold = 0.5 * (xs[boundaries[j]] + xs[boundaries[j] + 1])
            best = (float(weighted[j]), int(f), float(threshold))
    if best is None:
        return None
    return best[1], best[2]


def _grow_tree(X, y, rng, n_classes, max_depth, min_leaf, n_candidates, depth=0):
    if (
        np.unique(y).size == 1
        or (max_depth is not None and depth >= max_depth)
        or y.shape[0] < 2 * min_leaf
    ):
        return TreeNode(leaf_class=_majority(y, n_classes))
    d = X.shape[1]
    candidates = rng.choice(d, size=min(n_candidates, d), replace=False)
    split = _best_split(X, y, candidates, n_classes)
    if split is None and candidates.size < d:
        # the sampled features were all constant in this node; fall back to
        # the full set so separable data still reaches pure leaves
        split = _best_split(X, y, np.arange(d), n_classes)
    if split is None:
        return TreeNode(leaf_class=_majority(y, n_classes))
    feature, threshold = split
    mask = X[:, feature] <= threshold
    left = _grow_tree(X[mask], y[mask], rng, n_classes, max_depth, min_leaf, n_candidates, depth + 1)
    right = _grow_tree(X[~mask], y[~mask], rng, n_classes, max_depth, min_leaf, n_candidates, depth + 1)
    return TreeNode(feature=feature, threshold=threshold, left=left, right=right)


def _predict_tree(node, X):
    out = np.empty(X.shape[0], dtype=int)
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        current, idx = stack.pop()
        if current.is_leaf:
            out[idx] = current.leaf_class
            continue
        mask = X[idx, current.feature] <= current.threshold
        stack.append((current.left, idx[mask]))
        stack.append((current.right, idx[~mask]))
    return out


class RandomForest:
    """Bagged Gini decision trees with sqrt(d) feature sampling per split."""

    def __init__(self, n_trees=100, max_depth=12, min_leaf=1, seed=0):
        if n_trees < 1:
            raise ParameterError(f"n_trees must be >= 1, got {n_trees}")
        if min_leaf < 1:
            raise ParameterError(f"min_leaf must be >= 1, got {min_leaf}")
        self.n_trees = int(n_trees)
        self.max_depth = None if max_depth is None else int(max_depth)
        self.min_leaf = int(min_leaf)
        self.seed = int(seed)

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        n, d = X.shape
        if n < 2:
            raise DegenerateInputError("random forest needs at least 2 instances")
        self.n_classes_ = int(y.max()) + 1
        self.n_features_ = d
        n_candidates = math.ceil(math.sqrt(d))
        self.trees_ = []
        self.bootstraps_ = []
        for child in np.random.SeedSequence(self.seed).spawn(self.n_trees):
            rng = np.random.default_rng(child)
            bootstrap = rng.choice(n, size=n, replace=True)
            tree = _grow_tree(
                X[bootstrap],
                y[bootstrap],
                rng,
                self.n_classes_,
                self.max_depth,
                self.min_leaf,
                n_candidates,
            )
            self.trees_.append(tree)
            self.bootstraps_.append(bootstrap)
        return self

    def predict(self, X):
        X = _check_query(X, self.n_features_)
        votes = np.zeros((X.shape[0], self.n_classes_), dtype=int)
        for tree in self.trees_:
            pred = _predict_tree(tree, X)
            votes[np.arange(X.shape[0]), pred] += 1
        return votes.argmax(axis=1)  # ties resolve to the smaller label
