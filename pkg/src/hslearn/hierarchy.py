"""Iterative hierarchical training loop and its single-shot baseline.

Each iteration places hyperspheres over the current feature space, scores
features and samples instances inside every sphere, fits one extractor on
the union of the sampled data, and projects the whole training matrix
through it.  The per-iteration models form a :class:`ProjectionHistory`
that replays the same transform over held-out data.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateInputError, ParameterError, ParseError
from .feature_extraction import (
    ProjectionModel,
    _LineReader,
    _parse_model,
    fit_fda,
    fit_gda,
    fit_pca,
    fit_rica,
    project,
    serialize_model,
)
from .feature_selection import feature_scores, random_subset, select_top
from .sampling import (
    Hypersphere,
    ScheduleState,
    advance_schedule,
    draw_centers,
    init_schedule,
    points_in_sphere,
    stratified_sample,
)

__all__ = [
    "PipelineConfig",
    "ProjectionHistory",
    "run_hierarchical",
    "run_original",
    "apply_history",
    "serialize_history",
    "deserialize_history",
    "save_history",
    "load_history",
]

log = logging.getLogger(__name__)

FS_MODES = ("none", "random", "correlation", "chi2")
FE_METHODS = ("pca", "fda", "gda", "rica")
PIPELINES = ("raw", "original", "hierarchical")
SUPERVISED_METHODS = ("fda", "gda")

# spawn-key slots for deterministically derived random streams; the extractor
# stream uses the same key in both pipelines so a degenerate hierarchical run
# reproduces the single-shot fit exactly
_FIT_KEY = 2**31 - 1
_GLOBAL_FS_KEY = 2**31 - 2


@dataclass
class PipelineConfig:
    """Selection mode, extractor, pipeline kind, and their hyperparameters."""

    fs_mode: str = "correlation"
    fe_method: str = "pca"
    pipeline: str = "hierarchical"
    total_steps: int = 5
    seed: int = 0
    classifier: str = "knn"
    classifier_params: dict = field(default_factory=dict)
    fda_ridge: float = 1e-6
    fda_diag_boost: float = 1e-6
    gda_bandwidth: object = "auto"
    gda_ridge: float = 1e-6
    rica_sparsity: float = 0.5
    rica_max_iters: int = 500
    schedule_overrides: dict | None = None

    def __post_init__(self):
        self.fs_mode = str(self.fs_mode).lower()
        self.fe_method = str(self.fe_method).lower()
        self.pipeline = str(self.pipeline).lower()
        if self.fs_mode not in FS_MODES:
            raise ParameterError(f"fs_mode must be one of {FS_MODES}, got {self.fs_mode!r}")
        if self.fe_method not in FE_METHODS:
            raise ParameterError(f"fe_method must be one of {FE_METHODS}, got {self.fe_method!r}")
        if self.pipeline not in PIPELINES:
            raise ParameterError(f"pipeline must be one of {PIPELINES}, got {self.pipeline!r}")
        if self.total_steps < 1:
            raise ParameterError("total_steps must be >= 1")
        if self.seed < 0:
            raise ParameterError("seed must be non-negative")


@dataclass
class ProjectionHistory:
    """Ordered per-iteration models plus the schedule that produced them.

    ``schedule_log[i]`` is the schedule state when ``models[i]`` was fitted
    (None for the single-shot baseline).  ``skipped`` records iterations
    that produced no model, as (iteration, reason) pairs.
    """

    models: list[ProjectionModel] = field(default_factory=list)
    schedule_log: list[ScheduleState | None] = field(default_factory=list)
    skipped: list[tuple[int, str]] = field(default_factory=list)

    @property
    def selected_log(self):
        return [m.selected for m in self.models]

    @property
    def final_dim(self):
        return self.models[-1].out_dim if self.models else None

    def __len__(self):
        return len(self.models)


def _stream(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _fit_extractor(cfg, X, y, z, selected, rng):
    method = cfg.fe_method
    if method == "pca":
        return fit_pca(X, z, selected=selected)
    if method == "fda":
        return fit_fda(
            X, y, z, ridge=cfg.fda_ridge, diag_boost=cfg.fda_diag_boost, selected=selected
        )
    if method == "gda":
        return fit_gda(X, y, z, bandwidth=cfg.gda_bandwidth, ridge=cfg.gda_ridge, selected=selected)
    return fit_rica(
        X, z, sparsity=cfg.rica_sparsity, max_iters=cfg.rica_max_iters, rng=rng, selected=selected
    )


def _sphere_features(cfg, data, members, n_keep, rng):
    d = data.n_features
    keep = min(n_keep, d)
    if cfg.fs_mode == "none":
        return np.arange(d)
    if cfg.fs_mode == "random":
        return random_subset(d, keep, rng)
    scores = feature_scores(data.X[members], data.y[members], mode=cfg.fs_mode)
    return select_top(scores, keep)


def _apply_overrides(state, overrides, current_d):
    if not overrides:
        return state
    allowed = {"radius", "radius_step", "sphere_count", "sample_fraction", "n_keep", "n_extract"}
    unknown = set(overrides) - allowed
    if unknown:
        raise ParameterError(f"unknown schedule override(s): {sorted(unknown)}")
    state = replace(state, **overrides)
    return replace(
        state,
        n_keep=min(state.n_keep, current_d),
        n_extract=min(state.n_extract, current_d),
    )


def run_hierarchical(train, cfg, seed=None):
    """Run the full iterative loop; returns (history, projected train set).

    Iterations whose spheres are all empty or degenerate are logged no-ops;
    the run fails only if every iteration produced nothing.  Deterministic
    given (train, cfg, seed): sphere and extractor streams are derived from
    the seed by (iteration, slot) keys, never from call order.
    """
    if seed is None:
        seed = cfg.seed
    if np.unique(train.y).size < 2:
        raise DegenerateInputError("hierarchical training needs at least 2 classes")
    supervised = cfg.fe_method in SUPERVISED_METHODS

    history = ProjectionHistory()
    current = train
    state = None
    for tau in range(1, cfg.total_steps + 1):
        d = current.n_features
        if state is None:
            state = init_schedule(current, cfg.total_steps)
            state = _apply_overrides(state, cfg.schedule_overrides, d)
        else:
            state = advance_schedule(state, d)

        centers = draw_centers(current, state.sphere_count, _stream(seed, tau, 0))
        inst_parts = []
        feat_parts = []
        for s, center in enumerate(centers):
            members = points_in_sphere(current.X, Hypersphere(center, state.radius))
            if members.size < 3 or np.unique(current.y[members]).size < 2:
                continue
            sphere_rng = _stream(seed, tau, 1 + s)
            feat_parts.append(_sphere_features(cfg, current, members, state.n_keep, sphere_rng))
            inst_parts.append(
                stratified_sample(members, current.y, state.sample_fraction, sphere_rng)
            )

        if not inst_parts:
            history.skipped.append((tau, "all spheres empty or single-class"))
            log.warning("iteration %d: all %d spheres skipped", tau, state.sphere_count)
            continue

        union_inst = np.unique(np.concatenate(inst_parts))
        union_feat = np.unique(np.concatenate(feat_parts))
        union_y = current.y[union_inst]
        n_union_classes = np.unique(union_y).size
        if union_inst.size < 3 or (
            supervised and (n_union_classes < 2 or union_inst.size < n_union_classes + 1)
        ):
            history.skipped.append((tau, "union sample too small or single-class"))
            log.warning("iteration %d: degenerate union (%d points)", tau, union_inst.size)
            continue

        z = min(state.n_extract, union_feat.size)
        model = _fit_extractor(
            cfg,
            current.X[union_inst],
            union_y,
            z,
            union_feat,
            _stream(seed, tau, _FIT_KEY),
        )
        projected = project(model, current.X)
        current = current.with_matrix(
            projected, [f"c{tau}_{j}" for j in range(projected.shape[1])]
        )
        history.models.append(model)
        history.schedule_log.append(state)

    if not history.models:
        raise DegenerateInputError("every iteration was skipped; no model could be fitted")
    return history, current


def run_original(train, cfg, seed=None):
    """Single-shot baseline: optional global selection, then one extractor fit."""
    if seed is None:
        seed = cfg.seed
    if np.unique(train.y).size < 2:
        raise DegenerateInputError("training needs at least 2 classes")
    d = train.n_features
    keep = -(-9 * d // 10)  # ceil(0.9 d)

    if cfg.fs_mode == "none":
        selected = np.arange(d)
    elif cfg.fs_mode == "random":
        selected = random_subset(d, keep, _stream(seed, 1, _GLOBAL_FS_KEY))
    else:
        selected = select_top(feature_scores(train.X, train.y, mode=cfg.fs_mode), keep)

    z = min(keep, selected.size)
    model = _fit_extractor(
        cfg, train.X, train.y, z, selected, _stream(seed, 1, _FIT_KEY)
    )
    projected = project(model, train.X)
    history = ProjectionHistory(models=[model], schedule_log=[None])
    return history, train.with_matrix(
        projected, [f"c1_{j}" for j in range(projected.shape[1])]
    )


def apply_history(history, X):
    """Replay every stored model over ``X`` in order; empty history is identity."""
    X = np.asarray(X, dtype=float)
    for model in history.models:
        X = project(model, X)
    return X


# --- history serialization ----------------------------------------------------


def _fmt(v):
    return format(float(v), ".17g")


def serialize_history(history):
    """Flat text rendering of a history; value-exact round trip."""
    out = io.StringIO()
    out.write(f"history {len(history.models)}\n")
    for tau, reason in history.skipped:
        out.write(f"skipped {tau} {reason}\n")
    for i, (model, state) in enumerate(zip(history.models, history.schedule_log)):
        out.write(f"entry {i}\n")
        if state is None:
            out.write("schedule none\n")
        else:
            out.write(
                "schedule "
                f"step={state.step} total={state.total_steps} "
                f"radius={_fmt(state.radius)} radius_step={_fmt(state.radius_step)} "
                f"avg_std={_fmt(state.avg_std)} spheres={state.sphere_count} "
                f"sample_fraction={_fmt(state.sample_fraction)} "
                f"n_keep={state.n_keep} n_extract={state.n_extract}\n"
            )
        out.write(serialize_model(model))
    out.write("end history\n")
    return out.getvalue()


def deserialize_history(text):
    """Parse the output of :func:`serialize_history`."""
    reader = _LineReader(text)
    head = reader.next().split()
    if len(head) != 2 or head[0] != "history":
        raise ParseError(f"expected 'history <count>', got {' '.join(head)!r}")
    count = int(head[1])
    history = ProjectionHistory()
    line = reader.next()
    while line.startswith("skipped "):
        _, tau, reason = line.split(" ", 2)
        history.skipped.append((int(tau), reason))
        line = reader.next()
    for i in range(count):
        if line != f"entry {i}":
            raise ParseError(f"expected 'entry {i}', got {line!r}")
        sched_line = reader.next()
        if sched_line == "schedule none":
            state = None
        elif sched_line.startswith("schedule "):
            fields = dict(part.split("=", 1) for part in sched_line.split()[1:])
            state = ScheduleState(
                step=int(fields["step"]),
                total_steps=int(fields["total"]),
                radius=float(fields["radius"]),
                radius_step=float(fields["radius_step"]),
                avg_std=float(fields["avg_std"]),
                sphere_count=int(fields["spheres"]),
                sample_fraction=float(fields["sample_fraction"]),
                n_keep=int(fields["n_keep"]),
                n_extract=int(fields["n_extract"]),
            )
        else:
            raise ParseError(f"expected a schedule line, got {sched_line!r}")
        history.models.append(_parse_model(reader))
        history.schedule_log.append(state)
        line = reader.next()
    if line != "end history":
        raise ParseError(f"expected 'end history', got {line!r}")
    return history


def save_history(history, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_history(history))
    return path


def load_history(path):
    with open(path, encoding="utf-8") as fh:
        return deserialize_history(fh.read())
