"""CSV ingestion, standardization, and stratified train/validation/test splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateInputError,
    ParameterError,
    ParseError,
    SchemaError,
    ShapeError,
    StratificationError,
)

__all__ = [
    "Dataset",
    "SplitDataset",
    "StandardizationParams",
    "load_csv",
    "write_csv",
    "standardize",
    "apply_standardization",
    "split_stratified",
    "avg_feature_std",
    "make_rings",
]


@dataclass
class Dataset:
    """Instance-by-feature value matrix with dense integer class labels.

    Rows are instances, columns are features.  Labels are integers in
    0..class_count-1.  Arrays are frozen after construction; derive new
    datasets with :meth:`take` / :meth:`with_matrix` instead of mutating.

    Splitting can produce partitions in which a rare class is absent; the
    label encoding (and ``class_count``) always refers to the parent data.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: list[str]
    class_count: int

    def __post_init__(self):
        self.X = np.array(self.X, dtype=float)
        self.y = np.array(self.y, dtype=int)
        if self.X.ndim != 2:
            raise ShapeError(f"X must be 2-D, got {self.X.ndim}-D")
        if self.y.ndim != 1 or self.y.shape[0] != self.X.shape[0]:
            raise ShapeError("y must be 1-D with one label per row of X")
        if len(self.feature_names) != self.X.shape[1]:
            raise ShapeError("feature_names length must match the column count")
        if self.class_count < 2:
            raise DegenerateInputError("a dataset needs at least 2 classes")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= self.class_count):
            raise ValueError("labels must lie in 0..class_count-1")
        if not np.isfinite(self.X).all():
            raise ValueError("X contains non-finite values")
        self.X.setflags(write=False)
        self.y.setflags(write=False)

    @property
    def n_instances(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    def take(self, indices):
        """Row subset as a new Dataset (label encoding unchanged)."""
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.X[idx], self.y[idx], list(self.feature_names), self.class_count)

    def with_matrix(self, X, feature_names=None):
        """Same instances/labels over a new feature matrix."""
        X = np.asarray(X, dtype=float)
        if feature_names is None:
            feature_names = [f"f{j}" for j in range(X.shape[1])]
        return Dataset(X, self.y, list(feature_names), self.class_count)


@dataclass
class SplitDataset:
    """Stratified train/validation/test partition of one dataset."""

    train: Dataset
    validation: Dataset
    test: Dataset
    split_seed: int
    train_indices: np.ndarray
    validation_indices: np.ndarray
    test_indices: np.ndarray


@dataclass
class StandardizationParams:
    """Per-feature location/scale fitted on training data.

    ``std`` keeps the raw sample deviation; an entry of 0 flags a constant
    feature, which is mapped to all zeros by the transform.
    """

    mean: np.ndarray
    std: np.ndarray

    @property
    def constant_mask(self):
        return self.std == 0.0


def load_csv(path, label_column, has_header=True):
    """Load a comma-delimited dataset.

    ``label_column`` selects the label either by header name (requires a
    header row) or by zero-based column index.  Labels are re-encoded to
    dense integers in order of first appearance; row order is preserved.
    """
    with open(path, newline="", encoding="utf-8-sig") as fh:
        rows = [(lineno, row) for lineno, row in enumerate(csv.reader(fh), start=1) if row]
    if not rows:
        raise SchemaError(f"{path}: file is empty")

    header = None
    if has_header:
        header = [cell.strip() for cell in rows[0][1]]
        rows = rows[1:]
        if not rows:
            raise SchemaError(f"{path}: no data rows after the header")

    width = len(header) if header is not None else len(rows[0][1])
    if isinstance(label_column, str):
        if header is None:
            raise SchemaError("label column by name requires has_header=True")
        if label_column not in header:
            raise SchemaError(f"label column {label_column!r} not found in header {header}")
        label_idx = header.index(label_column)
    else:
        label_idx = int(label_column)
        if not 0 <= label_idx < width:
            raise SchemaError(f"label column index {label_idx} out of range for {width} columns")
    if width < 2:
        raise SchemaError("need at least one feature column besides the label")

    feature_cols = [j for j in range(width) if j != label_idx]
    if header is not None:
        feature_names = [header[j] for j in feature_cols]
    else:
        feature_names = [f"f{k}" for k in range(len(feature_cols))]

    values = np.empty((len(rows), len(feature_cols)), dtype=float)
    label_codes = {}
    y = np.empty(len(rows), dtype=int)
    for i, (lineno, row) in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"{path}: row at line {lineno} has {len(row)} cells, expected {width}")
        for k, j in enumerate(feature_cols):
            cell = row[j].strip()
            if not cell:
                raise ParseError(f"{path}: missing value at line {lineno}, column {j + 1}")
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: cannot parse {cell!r} as a number at line {lineno}, column {j + 1}"
                ) from None
            if not math.isfinite(v):
                raise ParseError(f"{path}: non-finite value at line {lineno}, column {j + 1}")
            values[i, k] = v
        label = row[label_idx].strip()
        if label not in label_codes:
            label_codes[label] = len(label_codes)
        y[i] = label_codes[label]

    if len(label_codes) < 2:
        raise DegenerateInputError(f"{path}: found {len(label_codes)} class, need at least 2")
    return Dataset(values, y, feature_names, len(label_codes))


def write_csv(dataset, path):
    """Write a dataset back to CSV with 17-significant-digit reals.

    Labels are emitted as their integer codes in a trailing ``label``
    column, so a reload reproduces the value matrix exactly and the class
    partition up to code renaming.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*dataset.feature_names, "label"])
        for row, label in zip(dataset.X, dataset.y):
            writer.writerow([format(v, ".17g") for v in row] + [str(int(label))])
    return path


def _apply_params(X, params):
    div = np.where(params.std == 0.0, 1.0, params.std)
    z = (X - params.mean) / div
    z[:, params.constant_mask] = 0.0
    return z


def standardize(dataset):
    """Zero-mean unit-variance transform fitted on this data.

    Constant features become all zeros (and stay flagged in the params so
    held-out data gets the identical treatment).
    """
    if dataset.n_instances < 2:
        raise DegenerateInputError("standardize needs at least 2 instances")
    params = StandardizationParams(
        mean=dataset.X.mean(axis=0),
        std=dataset.X.std(axis=0, ddof=1),
    )
    return apply_standardization(dataset, params), params


def apply_standardization(dataset, params):
    """Apply previously fitted standardization to (held-out) data."""
    if params.mean.shape[0] != dataset.n_features:
        raise ShapeError("standardization params do not match the feature count")
    return dataset.with_matrix(_apply_params(dataset.X, params), dataset.feature_names)


def avg_feature_std(dataset):
    """Mean sample standard deviation over non-constant features.

    Constant features are excluded; if every feature is constant the
    result is 0.
    """
    if dataset.n_instances < 2:
        raise DegenerateInputError("avg_feature_std needs at least 2 instances")
    stds = dataset.X.std(axis=0, ddof=1)
    active = stds[stds > 0.0]
    return float(active.mean()) if active.size else 0.0


def split_stratified(dataset, fractions, seed):
    """Per-class shuffled split into train/validation/test.

    Within each class the partition sizes are the cumulative-floor
    rounding of fraction * class_size, so every count is within 1 of its
    exact share.  Deterministic given ``seed``.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3:
        raise ParameterError("fractions must be (train, validation, test)")
    if any(f <= 0 for f in fractions):
        raise ParameterError(f"fractions must be positive, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ParameterError(f"fractions must sum to 1, got {sum(fractions)}")

    rng = np.random.default_rng(seed)
    parts = ([], [], [])
    for c in range(dataset.class_count):
        members = np.flatnonzero(dataset.y == c)
        if members.size < 3:
            raise StratificationError(
                f"class {c} has {members.size} instances; need at least one per partition"
            )
        perm = rng.permutation(members)
        b1 = math.floor(members.size * fractions[0] + 1e-9)
        b2 = math.floor(members.size * (fractions[0] + fractions[1]) + 1e-9)
        if b1 < 1:
            raise StratificationError(f"class {c} would not appear in the training partition")
        parts[0].append(perm[:b1])
        parts[1].append(perm[b1:b2])
        parts[2].append(perm[b2:])

    train_idx, val_idx, test_idx = (np.sort(np.concatenate(p)) for p in parts)
    return SplitDataset(
        train=dataset.take(train_idx),
        validation=dataset.take(val_idx),
        test=dataset.take(test_idx),
        split_seed=int(seed),
        train_indices=train_idx,
        validation_indices=val_idx,
        test_indices=test_idx,
    )


def make_rings(n_per_class=100, radii=(1.0, 5.0), noise=0.0, seed=0):
    """Concentric 2-D rings, one class per radius.

    A stock nonlinear benchmark: classes share their mean, so no linear
    projection separates them.
    """
    rng = np.random.default_rng(seed)
    blocks = []
    labels = []
    for c, radius in enumerate(radii):
        angles = rng.uniform(0.0, 2.0 * np.pi, size=n_per_class)
        r = radius + (noise * rng.standard_normal(n_per_class) if noise else 0.0)
        blocks.append(np.column_stack([r * np.cos(angles), r * np.sin(angles)]))
        labels.append(np.full(n_per_class, c))
    return Dataset(np.vstack(blocks), np.concatenate(labels), ["x", "y"], len(radii))
