"""Label-relevance feature scoring and subset selection."""

from __future__ import annotations

import numpy as np

from dataclasses import dataclass

from .errors import DegenerateInputError, ParameterError

__all__ = ["FeatureScores", "feature_scores", "select_top", "random_subset"]

SCORE_MODES = ("correlation", "chi2")

_CHI2_BINS = 10


@dataclass(frozen=True)
class FeatureScores:
    """Non-negative per-feature relevance scores plus the mode that produced them."""

    scores: np.ndarray
    mode: str


def _correlation_scores(X, y, classes):
    # max over one-vs-rest |Pearson| with the class indicator; reduces to
    # |point-biserial| for two classes
    xc = X - X.mean(axis=0)
    x_norm = np.sqrt((xc**2).sum(axis=0))
    scores = np.zeros(X.shape[1])
    for c in classes:
        z = (y == c).astype(float)
        z -= z.mean()
        z_norm = np.sqrt((z**2).sum())
        if z_norm == 0.0:
            continue
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.abs(xc.T @ z) / (x_norm * z_norm)
        r[x_norm == 0.0] = 0.0
        scores = np.maximum(scores, r)
    return scores


def _chi2_scores(X, y, classes):
    n, d = X.shape
    k = classes.size
    class_ids = np.searchsorted(classes, y)
    scores = np.zeros(d)
    for j in range(d):
        x = X[:, j]
        span = x.max() - x.min()
        if span == 0.0:
            continue
        bins = np.minimum((_CHI2_BINS * (x - x.min()) / span).astype(int), _CHI2_BINS - 1)
        observed = np.zeros((_CHI2_BINS, k))
        np.add.at(observed, (bins, class_ids), 1.0)
        observed = observed[observed.sum(axis=1) > 0]
        expected = np.outer(observed.sum(axis=1), observed.sum(axis=0)) / n
        scores[j] = float(((observed - expected) ** 2 / expected).sum())
    return scores


def feature_scores(X, y, mode="correlation"):
    """Score every feature by its relevance to the labels.

    correlation: max over classes of |Pearson(feature, class indicator)|.
    chi2: chi-square statistic of a 10-equal-width-bin x class table.
    Zero-variance features score 0 in both modes.
    """
    if mode not in SCORE_MODES:
        raise ParameterError(f"mode must be one of {SCORE_MODES}, got {mode!r}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.shape[0] < 3:
        raise DegenerateInputError("feature scoring needs at least 3 instances")
    classes = np.unique(y)
    if classes.size < 2:
        raise DegenerateInputError("feature scoring needs at least 2 classes")
    if mode == "correlation":
        scores = _correlation_scores(X, y, classes)
    else:
        scores = _chi2_scores(X, y, classes)
    return FeatureScores(scores=scores, mode=mode)


def select_top(scores, n_keep):
    """Indices of the ``n_keep`` best-scoring features, sorted ascending.

    Score ties go to the smaller feature index.
    """
    values = np.asarray(scores.scores if isinstance(scores, FeatureScores) else scores)
    if not 1 <= n_keep <= values.shape[0]:
        raise ParameterError(f"n_keep must be in 1..{values.shape[0]}, got {n_keep}")
    order = np.argsort(-values, kind="stable")
    return np.sort(order[:n_keep])


def random_subset(d, n_keep, rng):
    """Uniform sample of ``n_keep`` distinct feature indices, sorted ascending."""
    if not 1 <= n_keep <= d:
        raise ParameterError(f"n_keep must be in 1..{d}, got {n_keep}")
    return np.sort(rng.choice(d, size=n_keep, replace=False))
