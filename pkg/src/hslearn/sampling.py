"""Hypersphere placement, membership, within-sphere stratified sampling,
and the per-iteration parameter schedule of the hierarchical trainer."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dataset import avg_feature_std
from .errors import DegenerateInputError, ParameterError, ShapeError

__all__ = [
    "Hypersphere",
    "ScheduleState",
    "init_schedule",
    "advance_schedule",
    "draw_centers",
    "points_in_sphere",
    "stratified_sample",
]


@dataclass(frozen=True)
class Hypersphere:
    """A sampling region: center point plus Euclidean radius (boundary inclusive)."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.center.ndim != 1 or not np.isfinite(self.center).all():
            raise ParameterError("center must be a finite 1-D vector")
        if not (self.radius >= 0.0 and math.isfinite(self.radius)):
            raise ParameterError(f"radius must be finite and >= 0, got {self.radius}")


@dataclass(frozen=True)
class ScheduleState:
    """All control parameters of one hierarchical-training iteration.

    ``radius``/``radius_step`` are in units of the space the schedule was
    initialized in; ``avg_std`` keeps that baseline scale.  ``n_keep`` and
    ``n_extract`` are feature counts (selection keep count and extractor
    output dimension).
    """

    step: int
    total_steps: int
    radius: float
    radius_step: float
    avg_std: float
    sphere_count: int
    sample_fraction: float
    n_keep: int
    n_extract: int

    def __post_init__(self):
        if self.step < 1 or self.total_steps < 1:
            raise ParameterError("step and total_steps must be >= 1")
        if self.sphere_count < 1:
            raise ParameterError("sphere_count must be >= 1")
        if not 0.2 <= self.sample_fraction <= 1.0:
            raise ParameterError(f"sample_fraction must be in [0.2, 1], got {self.sample_fraction}")
        if self.n_keep < 1 or self.n_extract < 1:
            raise ParameterError("n_keep and n_extract must be >= 1")
        if self.radius <= 0.0:
            raise ParameterError(f"radius must be > 0, got {self.radius}")


def init_schedule(dataset, total_steps):
    """First-iteration schedule derived from the data's size and spread.

    radius = 0.1 * avg feature std, growing by 0.3 * avg std per step;
    sphere count = floor(0.01 n) clipped to [10, 20] (and to n); full
    instance sampling; selection and extraction keep 90% of the features.
    """
    if total_steps < 1:
        raise ParameterError("total_steps must be >= 1")
    sigma = avg_feature_std(dataset)
    if sigma == 0.0:
        raise DegenerateInputError("all features are constant; cannot size hyperspheres")
    n, d = dataset.n_instances, dataset.n_features
    spheres = min(max(math.floor(0.01 * n), 10), 20)
    spheres = min(spheres, n)
    keep = math.ceil(0.9 * d)
    return ScheduleState(
        step=1,
        total_steps=int(total_steps),
        radius=0.1 * sigma,
        radius_step=0.3 * sigma,
        avg_std=sigma,
        sphere_count=spheres,
        sample_fraction=1.0,
        n_keep=keep,
        n_extract=keep,
    )


def advance_schedule(state, current_d):
    """One schedule update: radius grows, every other knob decays to its floor.

    Feature counts decay to max(count - ceil(0.95 * count), min(50, d)) and
    are finally clamped to the current dimensionality ``current_d``.
    """
    if current_d < 1:
        raise ParameterError("current_d must be >= 1")
    floor_features = min(50, current_d)

    def decay(count):
        value = max(count - math.ceil(0.95 * count), floor_features)
        return min(value, current_d)

    return replace(
        state,
        step=state.step + 1,
        radius=state.radius + state.radius_step,
        sphere_count=max(state.sphere_count - math.ceil(0.2 * state.sphere_count), 1),
        sample_fraction=max(state.sample_fraction - 0.05, 0.2),
        n_keep=decay(state.n_keep),
        n_extract=decay(state.n_extract),
    )


def draw_centers(dataset, count, rng):
    """Draw sphere centers coordinate-wise uniformly over the data's bounding box."""
    if count < 1:
        raise ParameterError("count must be >= 1")
    if dataset.n_instances < 1:
        raise DegenerateInputError("cannot draw centers from an empty dataset")
    lo = dataset.X.min(axis=0)
    hi = dataset.X.max(axis=0)
    return rng.uniform(lo, hi, size=(count, dataset.n_features))


def points_in_sphere(X, sphere):
    """Indices of rows within the sphere, boundary inclusive."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or sphere.center.shape[0] != X.shape[1]:
        raise ShapeError(
            f"center dimension {sphere.center.shape[0]} does not match data with "
            f"{X.shape[1] if X.ndim == 2 else '?'} columns"
        )
    distances = np.linalg.norm(X - sphere.center, axis=1)
    return np.flatnonzero(distances <= sphere.radius)


def stratified_sample(indices, y, fraction, rng):
    """Sample ceil(fraction * count) per class, without replacement.

    Classes are visited in ascending label order and member lists are
    sorted first, so the draw depends only on (indices, y, fraction, rng
    state).  Returns sorted indices; empty input yields empty output.
    """
    if not 0.0 < fraction <= 1.0:
        raise ParameterError(f"fraction must be in (0, 1], got {fraction}")
    indices = np.sort(np.asarray(indices, dtype=int))
    if indices.size == 0:
        return indices
    y = np.asarray(y, dtype=int)
    picks = []
    for c in np.unique(y[indices]):
        members = indices[y[indices] == c]
        take = math.ceil(fraction * members.size)
        picks.append(rng.choice(members, size=take, replace=False))
    return np.sort(np.concatenate(picks))
