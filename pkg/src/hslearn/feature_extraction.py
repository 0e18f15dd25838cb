"""The four subspace learners: PCA, FDA, GDA (kernel FDA), and RICA.

Every fit returns a :class:`ProjectionModel` that knows which input columns
it consumes (``selected``), its centering vector, and either a linear weight
matrix or, for GDA, the retained training points plus dual coefficients.
Models are immutable and serialize to a value-exact flat text format.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateInputError,
    DivergenceError,
    ParameterError,
    ParseError,
    ShapeError,
    SingularMatrixError,
)
from .numerics import covariance, generalized_eigen, symmetric_eigen

__all__ = [
    "ScatterPair",
    "ProjectionModel",
    "KernelData",
    "scatter_matrices",
    "fisher_ratio",
    "fit_pca",
    "fit_fda",
    "fit_gda",
    "fit_rica",
    "rica_loss_and_grad",
    "project",
    "rbf_kernel",
    "serialize_model",
    "deserialize_model",
]

METHODS = ("pca", "fda", "gda", "rica")

_ARMIJO_C = 1e-4
_MIN_STEP = 1e-20


@dataclass(frozen=True)
class ScatterPair:
    """Between-class and within-class scatter matrices (unnormalized sums)."""

    between: np.ndarray
    within: np.ndarray


@dataclass(frozen=True)
class KernelData:
    """Everything a kernel model needs to project new points.

    ``points`` are the retained training rows already shifted by the
    model's ``mean_in``; ``col_means``/``grand_mean`` are the training
    kernel-centering statistics.
    """

    kind: str
    bandwidth: float
    points: np.ndarray
    dual: np.ndarray
    col_means: np.ndarray
    grand_mean: float


@dataclass(frozen=True)
class ProjectionModel:
    """One fitted extractor: input column subset, centering, and weights."""

    method: str
    selected: np.ndarray
    mean_in: np.ndarray
    weights: np.ndarray | None
    kernel: KernelData | None
    out_dim: int

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.out_dim < 1:
            raise ParameterError("out_dim must be >= 1")

    @property
    def in_dim(self):
        return self.selected.shape[0]


def _resolve_selected(selected, total):
    if selected is None:
        return np.arange(total)
    sel = np.asarray(selected, dtype=int)
    if sel.ndim != 1 or sel.size == 0:
        raise ParameterError("selected must be a non-empty 1-D index array")
    if sel.min() < 0 or sel.max() >= total:
        raise ShapeError(f"selected indices out of range for {total} columns")
    return np.sort(sel)


def scatter_matrices(X, y):
    """Within-class and between-class scatter of labeled data.

    within = sum over classes of the centered class Gram matrix; between =
    sum of n_c * outer(class mean - grand mean).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    classes = np.unique(y)
    if classes.size < 2:
        raise DegenerateInputError("scatter matrices need at least 2 classes")
    n, d = X.shape
    if n < classes.size + 1:
        raise DegenerateInputError(f"need more instances than classes, got {n} for {classes.size}")
    grand = X.mean(axis=0)
    within = np.zeros((d, d))
    between = np.zeros((d, d))
    for c in classes:
        block = X[y == c]
        mu = block.mean(axis=0)
        centered = block - mu
        within += centered.T @ centered
        gap = (mu - grand)[:, None]
        between += block.shape[0] * (gap @ gap.T)
    return ScatterPair(between=0.5 * (between + between.T), within=0.5 * (within + within.T))


def fisher_ratio(u, pair):
    """Rayleigh quotient u'Bu / u'Wu of a unit direction against a scatter pair."""
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > 1e-6:
        raise ParameterError("direction must have unit norm")
    denom = float(u @ pair.within @ u)
    if denom <= 1e-14:
        raise SingularMatrixError("direction lies in the null space of the within-class scatter")
    return float(u @ pair.between @ u) / denom


def fit_pca(X, z, selected=None):
    """Principal components: leading eigenvectors of the sample covariance."""
    X = np.asarray(X, dtype=float)
    sel = _resolve_selected(selected, X.shape[1])
    xs = X[:, sel]
    if xs.shape[0] < 2:
        raise DegenerateInputError("PCA needs at least 2 instances")
    if z < 1:
        raise ParameterError(f"z must be >= 1, got {z}")
    z = min(int(z), xs.shape[1])
    eig = symmetric_eigen(covariance(xs))
    return ProjectionModel(
        method="pca",
        selected=sel,
        mean_in=xs.mean(axis=0),
        weights=eig.vectors[:, :z].copy(),
        kernel=None,
        out_dim=z,
    )


def fit_fda(X, y, z, ridge=1e-6, diag_boost=1e-6, selected=None):
    """Fisher discriminant directions.

    Solves the generalized eigenproblem of (between, within + ridge) and
    keeps at most K-1 directions.  ``diag_boost`` is then added to the
    leading diagonal of the weight matrix, a small perturbation that keeps
    near-rank-deficient projections from collapsing.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    sel = _resolve_selected(selected, X.shape[1])
    xs = X[:, sel]
    if z < 1:
        raise ParameterError(f"z must be >= 1, got {z}")
    pair = scatter_matrices(xs, y)
    n_classes = np.unique(y).size
    z_eff = max(1, min(int(z), n_classes - 1, xs.shape[1]))
    eig = generalized_eigen(pair.between, pair.within, ridge=ridge)
    weights = eig.vectors[:, :z_eff].copy()
    for i in range(min(weights.shape)):
        weights[i, i] += diag_boost
    return ProjectionModel(
        method="fda",
        selected=sel,
        mean_in=xs.mean(axis=0),
        weights=weights,
        kernel=None,
        out_dim=z_eff,
    )


def _sq_distances(a, b):
    aa = (a**2).sum(axis=1)[:, None]
    bb = (b**2).sum(axis=1)[None, :]
    return np.maximum(aa + bb - 2.0 * (a @ b.T), 0.0)


def rbf_kernel(a, b, bandwidth):
    """Gaussian kernel exp(-||a-b||^2 / (2 * bandwidth^2)) between row sets."""
    if bandwidth <= 0:
        raise ParameterError(f"bandwidth must be > 0, got {bandwidth}")
    return np.exp(-_sq_distances(np.asarray(a, float), np.asarray(b, float)) / (2.0 * bandwidth**2))


def _kernel_matrix(kind, a, b, bandwidth):
    if kind == "rbf":
        return rbf_kernel(a, b, bandwidth)
    return np.asarray(a, float) @ np.asarray(b, float).T


def _median_distance(x):
    d = np.sqrt(_sq_distances(x, x)[np.triu_indices(x.shape[0], k=1)])
    med = float(np.median(d)) if d.size else 0.0
    return med if med > 0.0 else 1.0


def fit_gda(X, y, z, bandwidth="auto", ridge=1e-6, selected=None, kernel="rbf"):
    """Kernel Fisher discriminant solved in the dual.

    Rows of the centered training kernel matrix act as the feature map;
    the Fisher problem on those rows yields dual coefficients, and new
    points project through their centered kernel row against the retained
    training points.  ``kernel="linear"`` is a test hook that makes the
    method coincide with plain FDA up to an affine transform.
    """
    if kernel not in ("rbf", "linear"):
        raise ParameterError(f"kernel must be 'rbf' or 'linear', got {kernel!r}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    sel = _resolve_selected(selected, X.shape[1])
    xs = X[:, sel]
    if z < 1:
        raise ParameterError(f"z must be >= 1, got {z}")
    classes = np.unique(y)
    if classes.size < 2:
        raise DegenerateInputError("GDA needs at least 2 classes")
    if xs.shape[0] < classes.size + 1:
        raise DegenerateInputError("GDA needs more instances than classes")

    mean_in = xs.mean(axis=0)
    points = xs - mean_in
    if kernel == "rbf":
        sigma = _median_distance(points) if bandwidth == "auto" else float(bandwidth)
        if sigma <= 0:
            raise ParameterError(f"bandwidth must be > 0, got {sigma}")
    else:
        sigma = 0.0
    gram = _kernel_matrix(kernel, points, points, sigma)
    col_means = gram.mean(axis=0)
    grand_mean = float(gram.mean())
    centered = gram - col_means[:, None] - col_means[None, :] + grand_mean

    pair = scatter_matrices(centered, y)
    z_eff = max(1, min(int(z), classes.size - 1))
    eig = generalized_eigen(pair.between, pair.within, ridge=ridge)
    dual = eig.vectors[:, :z_eff].copy()
    return ProjectionModel(
        method="gda",
        selected=sel,
        mean_in=mean_in,
        weights=None,
        kernel=KernelData(
            kind=kernel,
            bandwidth=sigma,
            points=points,
            dual=dual,
            col_means=col_means,
            grand_mean=grand_mean,
        ),
        out_dim=z_eff,
    )


def rica_loss_and_grad(W, X, sparsity=0.5, smooth_eps=1e-8):
    """Reconstruction-ICA objective and its analytic gradient.

    L(W) = mean_i ||W'W x_i - x_i||^2
         + (sparsity / n) * sum_ij sqrt((W x_i)_j^2 + smooth_eps)

    ``W`` has one row per output component (z x d).  Returns (loss, dL/dW).
    """
    if sparsity < 0:
        raise ParameterError(f"sparsity must be >= 0, got {sparsity}")
    if smooth_eps <= 0:
        raise ParameterError(f"smooth_eps must be > 0, got {smooth_eps}")
    W = np.asarray(W, dtype=float)
    X = np.asarray(X, dtype=float)
    if W.ndim != 2 or X.ndim != 2 or W.shape[1] != X.shape[1]:
        raise ShapeError(f"W {W.shape} and X {X.shape} have incompatible column counts")
    n = X.shape[0]
    acts = X @ W.T
    residual = acts @ W - X
    smooth = np.sqrt(acts**2 + smooth_eps)
    loss = float((residual**2).sum() / n + sparsity * smooth.sum() / n)
    grad = (2.0 / n) * (W @ (residual.T @ X + X.T @ residual))
    grad += (sparsity / n) * ((acts / smooth).T @ X)
    return loss, grad


def fit_rica(X, z, sparsity=0.5, max_iters=500, rng=None, selected=None, tol=1e-7, trace=None):
    """Fit RICA by gradient descent with a backtracking (Armijo) line search.

    The weight matrix starts as uniform noise of scale 0.01 drawn from
    ``rng``; every iteration restarts the step at 1.0 and halves it until
    the Armijo decrease holds.  Stops at ``max_iters`` or when the relative
    objective decrease drops below ``tol``.  Pass a list as ``trace`` to
    collect the accepted objective values.
    """
    X = np.asarray(X, dtype=float)
    sel = _resolve_selected(selected, X.shape[1])
    xs = X[:, sel]
    if xs.shape[0] < 2:
        raise DegenerateInputError("RICA needs at least 2 instances")
    if not 1 <= z <= xs.shape[1]:
        raise ParameterError(f"z must be in 1..{xs.shape[1]}, got {z}")
    if max_iters < 1:
        raise ParameterError("max_iters must be >= 1")
    if rng is None:
        rng = np.random.default_rng(0)

    mean_in = xs.mean(axis=0)
    xc = xs - mean_in
    W = 0.01 * rng.uniform(-1.0, 1.0, size=(int(z), xs.shape[1]))

    loss, grad = rica_loss_and_grad(W, xc, sparsity=sparsity)
    if trace is not None:
        trace.append(loss)
    for _ in range(int(max_iters)):
        if not math.isfinite(loss):
            raise DivergenceError("RICA objective became non-finite")
        grad_sq = float((grad**2).sum())
        if grad_sq == 0.0:
            break
        step = 1.0
        while True:
            candidate = W - step * grad
            new_loss, new_grad = rica_loss_and_grad(candidate, xc, sparsity=sparsity)
            if math.isfinite(new_loss) and new_loss <= loss - _ARMIJO_C * step * grad_sq:
                break
            step *= 0.5
            if step < _MIN_STEP:
                candidate = None
                break
        if candidate is None:
            break
        W = candidate
        decrease = loss - new_loss
        loss, grad = new_loss, new_grad
        if trace is not None:
            trace.append(loss)
        if decrease < tol * max(abs(loss), 1e-30):
            break

    return ProjectionModel(
        method="rica",
        selected=sel,
        mean_in=mean_in,
        weights=W.T.copy(),
        kernel=None,
        out_dim=int(z),
    )


def project(model, X):
    """Map rows of ``X`` through a fitted model; output is n x out_dim.

    The model's selected columns are extracted and centered first; linear
    models multiply by their weights, kernel models evaluate centered
    kernel rows against the retained training points.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError(f"X must be 2-D, got {X.ndim}-D")
    if X.shape[1] <= int(model.selected.max()):
        raise ShapeError(
            f"input has {X.shape[1]} columns but the model selects up to "
            f"index {int(model.selected.max())}"
        )
    xs = X[:, model.selected] - model.mean_in
    if model.kernel is None:
        return xs @ model.weights
    kd = model.kernel
    rows = _kernel_matrix(kd.kind, xs, kd.points, kd.bandwidth)
    centered = rows - rows.mean(axis=1, keepdims=True) - kd.col_means[None, :] + kd.grand_mean
    return centered @ kd.dual


# --- flat text serialization -------------------------------------------------
#
# One token line per field, arrays as space-separated reals printed with 17
# significant digits (value-exact for IEEE doubles).


def _fmt(v):
    return format(float(v), ".17g")


def _write_array(out, tag, a):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    out.write(f"{tag} {a.shape[0]} {a.shape[1]}\n")
    for row in a:
        out.write(" ".join(_fmt(v) for v in row) + "\n")


def serialize_model(model):
    """Render a ProjectionModel as flat text; inverse of :func:`deserialize_model`."""
    out = io.StringIO()
    out.write(f"model {model.method} outdim {model.out_dim}\n")
    out.write("selected " + " ".join(str(int(i)) for i in model.selected) + "\n")
    out.write("mean " + " ".join(_fmt(v) for v in model.mean_in) + "\n")
    if model.weights is not None:
        _write_array(out, "weights", model.weights)
    if model.kernel is not None:
        kd = model.kernel
        out.write(f"kernel {kd.kind} bandwidth {_fmt(kd.bandwidth)} grand {_fmt(kd.grand_mean)}\n")
        out.write("colmeans " + " ".join(_fmt(v) for v in kd.col_means) + "\n")
        _write_array(out, "points", kd.points)
        _write_array(out, "dual", kd.dual)
    out.write("end\n")
    return out.getvalue()


class _LineReader:
    def __init__(self, text):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self):
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line:
                return line
        raise ParseError("unexpected end of model text")


def _read_array(reader, tag):
    head = reader.next().split()
    if len(head) != 3 or head[0] != tag:
        raise ParseError(f"expected '{tag} <rows> <cols>', got {' '.join(head)!r}")
    rows, cols = int(head[1]), int(head[2])
    data = np.empty((rows, cols))
    for i in range(rows):
        cells = reader.next().split()
        if len(cells) != cols:
            raise ParseError(f"{tag} row {i} has {len(cells)} values, expected {cols}")
        data[i] = [float(c) for c in cells]
    return data


def deserialize_model(text):
    """Parse the output of :func:`serialize_model` back into a model."""
    reader = _LineReader(text)
    model = _parse_model(reader)
    return model


def _parse_model(reader):
    head = reader.next().split()
    if len(head) != 4 or head[0] != "model" or head[2] != "outdim":
        raise ParseError(f"expected 'model <method> outdim <z>', got {' '.join(head)!r}")
    method, out_dim = head[1], int(head[3])

    sel_line = reader.next().split()
    if sel_line[0] != "selected":
        raise ParseError("expected 'selected' line")
    selected = np.array([int(v) for v in sel_line[1:]], dtype=int)

    mean_line = reader.next().split()
    if mean_line[0] != "mean":
        raise ParseError("expected 'mean' line")
    mean_in = np.array([float(v) for v in mean_line[1:]])

    weights = None
    kernel = None
    line = reader.next()
    if line.startswith("weights"):
        reader.pos -= 1
        weights = _read_array(reader, "weights")
        line = reader.next()
    if line.startswith("kernel"):
        parts = line.split()
        if len(parts) != 6 or parts[2] != "bandwidth" or parts[4] != "grand":
            raise ParseError(f"malformed kernel line: {line!r}")
        kind, bandwidth, grand = parts[1], float(parts[3]), float(parts[5])
        cm_line = reader.next().split()
        if cm_line[0] != "colmeans":
            raise ParseError("expected 'colmeans' line")
        col_means = np.array([float(v) for v in cm_line[1:]])
        points = _read_array(reader, "points")
        dual = _read_array(reader, "dual")
        kernel = KernelData(
            kind=kind,
            bandwidth=bandwidth,
            points=points,
            dual=dual,
            col_means=col_means,
            grand_mean=grand,
        )
        line = reader.next()
    if line != "end":
        raise ParseError(f"expected 'end', got {line!r}")
    return ProjectionModel(
        method=method,
        selected=selected,
        mean_in=mean_in,
        weights=weights,
        kernel=kernel,
        out_dim=out_dim,
    )
