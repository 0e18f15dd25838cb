"""Experiment-grid configuration, execution, and result tables.

A grid is dataset x pipeline x selection mode x extractor x classifier x
seed, with the raw pipeline appearing once per dataset/classifier/seed
(selection and extraction do not apply to it).  Every cell draws its
random streams from a stable hash of (master seed, cell identity), so
results do not depend on execution order or worker count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classifiers import KNearestNeighbors, LdaClassifier, QdaClassifier, RandomForest, accuracy
from .dataset import apply_standardization, load_csv, split_stratified, standardize
from .errors import ConfigError, HslearnError, ParameterError
from .hierarchy import (
    FE_METHODS,
    FS_MODES,
    PIPELINES,
    PipelineConfig,
    apply_history,
    run_hierarchical,
    run_original,
)

__all__ = [
    "DatasetSpec",
    "ClassifierSpec",
    "ExperimentGrid",
    "ResultRecord",
    "parse_config",
    "run_grid",
    "render_table",
    "emit_table",
    "stable_seed",
]

CLASSIFIER_NAMES = ("lda", "knn", "rf", "qda")

CSV_COLUMNS = (
    "dataset",
    "pipeline",
    "fs_mode",
    "fe_method",
    "classifier",
    "seed",
    "final_dim",
    "val_acc",
    "test_acc",
    "fit_seconds",
    "predict_seconds",
    "status",
)

# canonical report ordering; grids may use any subset
_PIPELINE_ORDER = ("raw", "original", "hierarchical")
_FE_ORDER = ("pca", "fda", "gda", "rica")
_FS_ORDER = ("none", "random", "correlation", "chi2")
_CLF_ORDER = ("lda", "knn", "rf", "qda")


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    path: str
    label_column: object
    has_header: bool = True


@dataclass(frozen=True)
class ClassifierSpec:
    name: str
    params: dict = field(default_factory=dict)


@dataclass
class ExperimentGrid:
    """Fully resolved experiment plan with every default filled in."""

    datasets: list[DatasetSpec]
    fs_modes: list[str] = field(default_factory=lambda: ["none", "random", "correlation"])
    fe_methods: list[str] = field(default_factory=lambda: list(_FE_ORDER))
    pipelines: list[str] = field(default_factory=lambda: list(_PIPELINE_ORDER))
    classifiers: list[ClassifierSpec] = field(
        default_factory=lambda: [ClassifierSpec(n) for n in _CLF_ORDER]
    )
    seeds: list[int] = field(default_factory=lambda: [0])
    fractions: tuple = (0.70, 0.15, 0.15)
    total_steps: int = 5
    master_seed: int = 0
    extractor_params: dict = field(default_factory=dict)

    def cell_count(self):
        """Number of result records the grid will produce."""
        per_dataset_seed = len(self.classifiers) * (
            ("raw" in self.pipelines)
            + len(self.fs_modes)
            * len(self.fe_methods)
            * len([p for p in self.pipelines if p != "raw"])
        )
        return len(self.datasets) * len(self.seeds) * per_dataset_seed


@dataclass
class ResultRecord:
    """One experiment-grid cell."""

    dataset: str
    pipeline: str
    fs_mode: str
    fe_method: str
    classifier: str
    seed: int
    final_dim: int | None
    val_acc: float | None
    test_acc: float | None
    fit_seconds: float
    predict_seconds: float
    status: str = "ok"

    def sort_key(self):
        return (self.dataset, self.pipeline, self.fs_mode, self.fe_method, self.classifier, self.seed)


def stable_seed(master_seed, identity):
    """Platform-independent 63-bit stream seed from a master seed and a label."""
    digest = hashlib.sha256(f"{master_seed}:{identity}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


# --- configuration ------------------------------------------------------------

_GRID_KEYS = {
    "seeds",
    "fs_modes",
    "fe_methods",
    "pipelines",
    "classifiers",
    "split",
    "iterations",
    "master_seed",
}
_DATASET_KEYS = {"path", "label_column", "has_header"}
_PARAM_SECTIONS = {
    "knn": {"k"},
    "lda": {"reg"},
    "qda": {"shrink", "reg"},
    "rf": {"trees", "max_depth", "min_leaf"},
    "fda": {"ridge", "diag_boost"},
    "gda": {"bandwidth", "ridge"},
    "rica": {"sparsity", "max_iters"},
}


def _config_error(lineno, message):
    raise ConfigError(f"line {lineno}: {message}")


def _parse_scalar(raw, lineno, kind):
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        _config_error(lineno, f"expected a {kind.__name__}, got {raw!r}")
    if kind is bool:
        if raw.lower() in ("true", "yes", "1"):
            return True
        if raw.lower() in ("false", "no", "0"):
            return False
        _config_error(lineno, f"expected true/false, got {raw!r}")
    return raw


def _parse_enum_list(raw, lineno, allowed, what):
    values = [v.strip().lower() for v in raw.split(",") if v.strip()]
    if not values:
        _config_error(lineno, f"{what} list is empty")
    for v in values:
        if v not in allowed:
            _config_error(lineno, f"unknown {what} {v!r}; allowed values: {', '.join(allowed)}")
    if len(set(values)) != len(values):
        _config_error(lineno, f"duplicate entries in {what} list")
    return values


def parse_config(path):
    """Parse a line-oriented ``key = value`` config file into a grid.

    Sections are ``[grid]``, one ``[dataset NAME]`` per dataset, and
    optional per-method hyperparameter sections ([knn], [rf], [lda],
    [qda], [fda], [gda], [rica]).  Unknown keys, bad enum values, and
    malformed lines fail with the offending line number.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    grid_kv = {}
    datasets = []
    params = {name: {} for name in _PARAM_SECTIONS}
    section = None
    dataset_kv = None

    def close_dataset():
        if dataset_kv is None:
            return
        name, kv, lineno = dataset_kv
        if "path" not in kv:
            _config_error(lineno, f"dataset {name!r} is missing the required 'path' key")
        label = kv.get("label_column", "label")
        if isinstance(label, str) and (label.isdigit() or (label.startswith("-") and label[1:].isdigit())):
            label = int(label)
        datasets.append(
            DatasetSpec(
                name=name,
                path=kv["path"],
                label_column=label,
                has_header=kv.get("has_header", True),
            )
        )

    for lineno, raw_line in enumerate(lines, start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            close_dataset()
            dataset_kv = None
            header = line[1:-1].strip()
            if header == "grid":
                section = ("grid", lineno)
            elif header.startswith("dataset"):
                name = header[len("dataset"):].strip()
                if not name:
                    _config_error(lineno, "dataset section needs a name: [dataset NAME]")
                section = ("dataset", lineno)
                dataset_kv = (name, {}, lineno)
            elif header in _PARAM_SECTIONS:
                section = (header, lineno)
            else:
                _config_error(lineno, f"unknown section [{header}]")
            continue
        if "=" not in line:
            _config_error(lineno, f"expected 'key = value', got {line!r}")
        if section is None:
            _config_error(lineno, "key outside of any [section]")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()

        kind = section[0]
        if kind == "grid":
            if key not in _GRID_KEYS:
                _config_error(lineno, f"unknown [grid] key {key!r}; allowed: {sorted(_GRID_KEYS)}")
            grid_kv[key] = (value, lineno)
        elif kind == "dataset":
            if key not in _DATASET_KEYS:
                _config_error(lineno, f"unknown dataset key {key!r}; allowed: {sorted(_DATASET_KEYS)}")
            parsed = _parse_scalar(value, lineno, bool) if key == "has_header" else value
            dataset_kv[1][key] = parsed
        else:
            allowed = _PARAM_SECTIONS[kind]
            if key not in allowed:
                _config_error(lineno, f"unknown [{kind}] key {key!r}; allowed: {sorted(allowed)}")
            params[kind][key] = (value, lineno)
    close_dataset()

    if not datasets:
        raise ConfigError("config declares no [dataset NAME] section")
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate dataset names")

    grid = ExperimentGrid(datasets=datasets)

    if "seeds" in grid_kv:
        raw, lineno = grid_kv["seeds"]
        try:
            seeds = [int(v.strip()) for v in raw.split(",") if v.strip()]
        except ValueError:
            _config_error(lineno, f"seeds must be integers, got {raw!r}")
        if not seeds:
            _config_error(lineno, "seeds list is empty")
        if len(set(seeds)) != len(seeds):
            _config_error(lineno, "seeds must be distinct")
        if any(s < 0 for s in seeds):
            _config_error(lineno, "seeds must be non-negative")
        grid.seeds = seeds
    if "fs_modes" in grid_kv:
        raw, lineno = grid_kv["fs_modes"]
        grid.fs_modes = _parse_enum_list(raw, lineno, FS_MODES, "fs_mode")
    if "fe_methods" in grid_kv:
        raw, lineno = grid_kv["fe_methods"]
        grid.fe_methods = _parse_enum_list(raw, lineno, FE_METHODS, "fe_method")
    if "pipelines" in grid_kv:
        raw, lineno = grid_kv["pipelines"]
        grid.pipelines = _parse_enum_list(raw, lineno, PIPELINES, "pipeline")
    if "classifiers" in grid_kv:
        raw, lineno = grid_kv["classifiers"]
        names = _parse_enum_list(raw, lineno, CLASSIFIER_NAMES, "classifier")
        grid.classifiers = [ClassifierSpec(n) for n in names]
    if "split" in grid_kv:
        raw, lineno = grid_kv["split"]
        parts = [p.strip() for p in raw.split(",")]
        if len(parts) != 3:
            _config_error(lineno, "split needs three comma-separated fractions")
        fractions = tuple(_parse_scalar(p, lineno, float) for p in parts)
        if any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
            _config_error(lineno, f"split fractions must be positive and sum to 1, got {raw!r}")
        grid.fractions = fractions
    if "iterations" in grid_kv:
        raw, lineno = grid_kv["iterations"]
        grid.total_steps = _parse_scalar(raw, lineno, int)
        if grid.total_steps < 1:
            _config_error(lineno, "iterations must be >= 1")
    if "master_seed" in grid_kv:
        raw, lineno = grid_kv["master_seed"]
        grid.master_seed = _parse_scalar(raw, lineno, int)
        if grid.master_seed < 0:
            _config_error(lineno, "master_seed must be non-negative")

    _fill_method_params(grid, params)
    return grid


_PARAM_TYPES = {
    ("knn", "k"): int,
    ("lda", "reg"): float,
    ("qda", "shrink"): float,
    ("qda", "reg"): float,
    ("rf", "trees"): int,
    ("rf", "max_depth"): int,
    ("rf", "min_leaf"): int,
    ("fda", "ridge"): float,
    ("fda", "diag_boost"): float,
    ("gda", "ridge"): float,
    ("rica", "sparsity"): float,
    ("rica", "max_iters"): int,
}


def _fill_method_params(grid, params):
    parsed = {}
    for section, kv in params.items():
        for key, (raw, lineno) in kv.items():
            if section == "gda" and key == "bandwidth":
                parsed[(section, key)] = (
                    "auto" if raw.lower() == "auto" else _parse_scalar(raw, lineno, float)
                )
            else:
                parsed[(section, key)] = _parse_scalar(raw, lineno, _PARAM_TYPES[(section, key)])

    clf_params = {
        "knn": {"k": parsed.get(("knn", "k"), 5)},
        "lda": {"reg": parsed.get(("lda", "reg"), 1e-6)},
        "qda": {
            "shrink": parsed.get(("qda", "shrink"), 0.1),
            "reg": parsed.get(("qda", "reg"), 1e-6),
        },
        "rf": {
            "n_trees": parsed.get(("rf", "trees"), 100),
            "max_depth": parsed.get(("rf", "max_depth"), 12),
            "min_leaf": parsed.get(("rf", "min_leaf"), 1),
        },
    }
    grid.classifiers = [
        ClassifierSpec(spec.name, clf_params[spec.name]) for spec in grid.classifiers
    ]
    grid.extractor_params = {
        "fda_ridge": parsed.get(("fda", "ridge"), 1e-6),
        "fda_diag_boost": parsed.get(("fda", "diag_boost"), 1e-6),
        "gda_bandwidth": parsed.get(("gda", "bandwidth"), "auto"),
        "gda_ridge": parsed.get(("gda", "ridge"), 1e-6),
        "rica_sparsity": parsed.get(("rica", "sparsity"), 0.5),
        "rica_max_iters": parsed.get(("rica", "max_iters"), 500),
    }


# --- execution ------------------------------------------------------------


def _build_classifier(spec, seed):
    if spec.name == "knn":
        return KNearestNeighbors(**spec.params)
    if spec.name == "lda":
        return LdaClassifier(**spec.params)
    if spec.name == "qda":
        return QdaClassifier(**spec.params)
    if spec.name == "rf":
        return RandomForest(seed=seed, **spec.params)
    raise ParameterError(f"unknown classifier {spec.name!r}")


def _prepare_split(dataset, grid, name, seed):
    split_seed = stable_seed(grid.master_seed, f"{name}|split|{seed}")
    split = split_stratified(dataset, grid.fractions, split_seed)
    train, params = standardize(split.train)
    val = apply_standardization(split.validation, params)
    test = apply_standardization(split.test, params)
    return train, val, test


def run_pipeline_cell(train, grid, name, pipeline, fs_mode, fe_method, seed):
    """Fit one pipeline cell on (already standardized) training data.

    Returns (history, transform) where ``transform`` maps any matrix in
    the training feature space through the fitted models.  The raw
    pipeline has an empty history and the identity transform.
    """
    if pipeline == "raw":
        return None, lambda X: X
    cfg = PipelineConfig(
        fs_mode=fs_mode,
        fe_method=fe_method,
        pipeline=pipeline,
        total_steps=grid.total_steps,
        seed=stable_seed(grid.master_seed, f"{name}|{pipeline}|{fs_mode}|{fe_method}|{seed}"),
        **grid.extractor_params,
    )
    runner = run_hierarchical if pipeline == "hierarchical" else run_original
    history, _ = runner(train, cfg)
    return history, lambda X: apply_history(history, X)


def _run_task(args):
    """One (dataset, seed, pipeline, fs, fe) unit: fit pipeline, score classifiers."""
    grid, name, train, val, test, pipeline, fs_mode, fe_method, seed = args
    records = []
    t0 = time.perf_counter()
    try:
        _, transform = run_pipeline_cell(train, grid, name, pipeline, fs_mode, fe_method, seed)
        tr_X = transform(train.X)
        val_X = transform(val.X)
        test_X = transform(test.X)
    except HslearnError as exc:
        elapsed = time.perf_counter() - t0
        for spec in grid.classifiers:
            records.append(
                ResultRecord(
                    dataset=name,
                    pipeline=pipeline,
                    fs_mode=fs_mode,
                    fe_method=fe_method,
                    classifier=spec.name,
                    seed=seed,
                    final_dim=None,
                    val_acc=None,
                    test_acc=None,
                    fit_seconds=elapsed,
                    predict_seconds=0.0,
                    status=f"failed: {type(exc).__name__}: {exc}",
                )
            )
        return records
    pipeline_seconds = time.perf_counter() - t0

    for spec in grid.classifiers:
        clf_seed = stable_seed(
            grid.master_seed, f"{name}|{pipeline}|{fs_mode}|{fe_method}|{spec.name}|{seed}"
        )
        try:
            clf = _build_classifier(spec, clf_seed)
            t1 = time.perf_counter()
            clf.fit(tr_X, train.y)
            fit_seconds = pipeline_seconds + (time.perf_counter() - t1)
            t2 = time.perf_counter()
            test_pred = clf.predict(test_X)
            predict_seconds = time.perf_counter() - t2
            val_pred = clf.predict(val_X)
            record = ResultRecord(
                dataset=name,
                pipeline=pipeline,
                fs_mode=fs_mode,
                fe_method=fe_method,
                classifier=spec.name,
                seed=seed,
                final_dim=tr_X.shape[1],
                val_acc=accuracy(val_pred, val.y),
                test_acc=accuracy(test_pred, test.y),
                fit_seconds=fit_seconds,
                predict_seconds=predict_seconds,
            )
        except HslearnError as exc:
            record = ResultRecord(
                dataset=name,
                pipeline=pipeline,
                fs_mode=fs_mode,
                fe_method=fe_method,
                classifier=spec.name,
                seed=seed,
                final_dim=tr_X.shape[1],
                val_acc=None,
                test_acc=None,
                fit_seconds=pipeline_seconds,
                predict_seconds=0.0,
                status=f"failed: {type(exc).__name__}: {exc}",
            )
        records.append(record)
    return records


def _expand_tasks(grid):
    """All (dataset, seed, pipeline, fs, fe) units; raw appears once per (dataset, seed)."""
    tasks = []
    for spec in grid.datasets:
        for seed in grid.seeds:
            if "raw" in grid.pipelines:
                tasks.append((spec, seed, "raw", "none", "none"))
            for pipeline in grid.pipelines:
                if pipeline == "raw":
                    continue
                for fs_mode in grid.fs_modes:
                    for fe_method in grid.fe_methods:
                        tasks.append((spec, seed, pipeline, fs_mode, fe_method))
    return tasks


def run_grid(grid, jobs=1):
    """Execute every grid cell; failures are recorded, never raised.

    Dataset loading problems do raise (the grid cannot run without data).
    Records come back sorted by cell identity.
    """
    loaded = {}
    for spec in grid.datasets:
        loaded[spec.name] = load_csv(spec.path, spec.label_column, has_header=spec.has_header)

    prepared = {}
    for spec in grid.datasets:
        for seed in grid.seeds:
            prepared[(spec.name, seed)] = _prepare_split(loaded[spec.name], grid, spec.name, seed)

    payloads = []
    for spec, seed, pipeline, fs_mode, fe_method in _expand_tasks(grid):
        train, val, test = prepared[(spec.name, seed)]
        payloads.append((grid, spec.name, train, val, test, pipeline, fs_mode, fe_method, seed))

    records = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for batch in pool.map(_run_task, payloads):
                records.extend(batch)
    else:
        for payload in payloads:
            records.extend(_run_task(payload))
    records.sort(key=ResultRecord.sort_key)
    return records


# --- reporting ------------------------------------------------------------


def _fmt_acc(value):
    return "" if value is None else format(value, ".6f")


def _fmt_pct(values):
    vals = [v for v in values if v is not None]
    return f"{100.0 * sum(vals) / len(vals):.2f}" if vals else "-"


def render_table(records, fmt="csv"):
    """Render records as a CSV string or a markdown pivot + summary."""
    if not records:
        raise ParameterError("no records to render")
    records = sorted(records, key=ResultRecord.sort_key)
    if fmt == "csv":
        return _render_csv(records)
    if fmt == "markdown":
        return _render_markdown(records)
    raise ParameterError(f"format must be 'csv' or 'markdown', got {fmt!r}")


def _render_csv(records):
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(
            [
                r.dataset,
                r.pipeline,
                r.fs_mode,
                r.fe_method,
                r.classifier,
                r.seed,
                "" if r.final_dim is None else r.final_dim,
                _fmt_acc(r.val_acc),
                _fmt_acc(r.test_acc),
                format(r.fit_seconds, ".6f"),
                format(r.predict_seconds, ".6f"),
                r.status,
            ]
        )
    return out.getvalue()


def _present(records, attr, canonical):
    seen = {getattr(r, attr) for r in records}
    return [v for v in canonical if v in seen]


def _render_markdown(records):
    datasets = sorted({r.dataset for r in records})
    # raw rows are stored under fs none/fe none; show them across every group
    grid_fs = [m for m in _FS_ORDER if any(r.fs_mode == m and r.pipeline != "raw" for r in records)]
    if not grid_fs:
        grid_fs = ["none"]
    classifiers = _present(records, "classifier", _CLF_ORDER)
    pipelines = _present(records, "pipeline", _PIPELINE_ORDER)
    fe_methods = [m for m in _FE_ORDER if any(r.fe_method == m for r in records)]

    by_key = {}
    for r in records:
        by_key.setdefault((r.dataset, r.pipeline, r.fs_mode, r.fe_method, r.classifier), []).append(
            r.test_acc
        )

    def cell(dataset, pipeline, fs_mode, fe_method, classifier):
        if pipeline == "raw":
            key = (dataset, "raw", "none", "none", classifier)
        else:
            key = (dataset, pipeline, fs_mode, fe_method, classifier)
        return _fmt_pct(by_key.get(key, []))

    out = io.StringIO()
    out.write("# Test accuracy by selection mode and classifier\n\n")
    header = ["dataset", "pipeline", "extractor"]
    for fs_mode in grid_fs:
        for clf in classifiers:
            header.append(f"{fs_mode}/{clf}")
    out.write("| " + " | ".join(header) + " |\n")
    out.write("|" + "---|" * len(header) + "\n")
    for dataset in datasets:
        for pipeline in pipelines:
            row_fes = ["-"] if pipeline == "raw" else fe_methods
            for fe_method in row_fes:
                row = [dataset, pipeline, fe_method]
                for fs_mode in grid_fs:
                    for clf in classifiers:
                        row.append(cell(dataset, pipeline, fs_mode, fe_method, clf))
                out.write("| " + " | ".join(row) + " |\n")

    summary_pipelines = [p for p in pipelines if p != "raw"]
    if summary_pipelines and fe_methods:
        out.write("\n# Mean test accuracy per extractor and pipeline\n\n")
        header = ["extractor", "pipeline", *classifiers]
        out.write("| " + " | ".join(header) + " |\n")
        out.write("|" + "---|" * len(header) + "\n")
        for fe_method in fe_methods:
            for pipeline in summary_pipelines:
                row = [fe_method, pipeline]
                for clf in classifiers:
                    values = [
                        r.test_acc
                        for r in records
                        if r.fe_method == fe_method
                        and r.pipeline == pipeline
                        and r.classifier == clf
                    ]
                    row.append(_fmt_pct(values))
                out.write("| " + " | ".join(row) + " |\n")
    return out.getvalue()


def emit_table(records, fmt, path):
    """Render and write records to ``path``; returns the path."""
    text = render_table(records, fmt)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path
