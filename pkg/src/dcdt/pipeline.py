"""End-to-end wiring: generate -> extract -> train/fit -> evaluate.

This module owns the benchmark harness (operationalized Rouleau vs SLIM
on the simplest and full feature sets, nested-CV AUC per screening task)
and the ``repro`` routine that writes every artifact deterministically.

The benchmark SLIM configurations keep a deterministic node budget on the
branch-and-bound search instead of a wall-clock budget: a clock cutoff
would make "best incumbent so far" depend on machine speed and break
byte-for-byte reproducibility of reports.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from . import evaluation, rouleau, slim
from .evaluation import nested_cv, task_subset
from .features import FeatureCatalog, binarize, default_catalog, extract
from .rouleau import RouleauParams
from .slim import BinaryDataset, SlimConfig
from .stroke_model import Group, serialize_labels, serialize_strokes
from .synthgen import GeneratorConfig, generate_dataset

METHOD_ROULEAU = "Operationalized Rouleau"
METHOD_SLIM_SIMPLEST = "SLIM (simplest features)"
METHOD_SLIM_ALL = "SLIM (all features)"
DEFAULT_METHODS = (METHOD_ROULEAU, METHOD_SLIM_SIMPLEST, METHOD_SLIM_ALL)
DEFAULT_TASKS = ("mid", "vcd", "pd", "all3")

# Cohort scale for the shipped synthetic benchmark.
DEFAULT_BENCHMARK_COUNTS = {Group.HC: 406, Group.MID: 151, Group.VCD: 151, Group.PD: 151}

# Benchmark-speed SLIM settings: small coefficient range, deterministic
# search budget, and a two-point grid; the full declared grid lives in
# slim.default_grid for flat experiments.
BENCHMARK_SLIM_BASE = SlimConfig(coeff_bound=3, intercept_bound=50, max_features=10, max_nodes=500)
BENCHMARK_SLIM_AXES = {"c_minus": (1.0,), "c0": (1e-3,), "c1": (0.0, 1e-3)}

BENCHMARK_ROULEAU_GRID_AXES = {
    "eps1_deg": (10.0, 15.0, 20.0),
    "eps2_deg": (30.0, 45.0, 60.0),
    "digit_minimal_err_deg": (15.0, 22.5),
}


def rouleau_grid_from_axes(axes: Mapping[str, Sequence]) -> list:
    names = list(axes.keys())
    grid = []
    for combo in itertools.product(*(axes[n] for n in names)):
        kwargs = dict(zip(names, combo))
        eps1 = kwargs.get("eps1_deg", rouleau.DEFAULT_PARAMS.eps1_deg)
        eps2 = kwargs.get("eps2_deg", rouleau.DEFAULT_PARAMS.eps2_deg)
        if not (0 < eps1 < eps2 <= 180):
            continue
        grid.append(replace(rouleau.DEFAULT_PARAMS, **kwargs))
    return grid


def slim_grid_from_axes(base: SlimConfig, axes: Mapping[str, Sequence]) -> list:
    names = list(axes.keys())
    return [
        replace(base, **dict(zip(names, combo)))
        for combo in itertools.product(*(axes[n] for n in names))
    ]


@dataclass(frozen=True)
class FeatureTable:
    """Extracted vectors plus the aligned binary matrices SLIM consumes."""

    subject_ids: tuple
    groups: tuple
    vectors: tuple                 # numeric feature dicts (the 'all' set)
    binary_names_all: tuple
    binary_names_simplest: tuple
    X_all: np.ndarray
    X_simplest: np.ndarray


def build_feature_table(tests: Sequence, catalog: Optional[FeatureCatalog] = None) -> FeatureTable:
    catalog = catalog or default_catalog()
    vectors = [extract(t, catalog, "all") for t in tests]
    rows = [binarize(v, catalog) for v in vectors]
    names_all = catalog.binary_names("all")
    names_simp = catalog.binary_names("simplest")
    X_all = np.array([[row[n] for n in names_all] for row in rows], dtype=np.int8)
    simp_idx = [names_all.index(n) for n in names_simp]
    X_simp = X_all[:, simp_idx]
    return FeatureTable(
        subject_ids=tuple(t.subject_id for t in tests),
        groups=tuple(t.group for t in tests),
        vectors=tuple(vectors),
        binary_names_all=names_all,
        binary_names_simplest=names_simp,
        X_all=np.ascontiguousarray(X_all),
        X_simplest=np.ascontiguousarray(X_simp),
    )


def make_rouleau_trainer(table: FeatureTable):
    def trainer(train_examples, train_labels, params: RouleauParams):
        def score_fn(i: int) -> float:
            return -float(rouleau.rouleau_total(table.vectors[i], params).total)
        return score_fn
    return trainer


def make_slim_trainer(table: FeatureTable, catalog: FeatureCatalog, feature_set: str):
    if feature_set == "all":
        X, names = table.X_all, table.binary_names_all
    elif feature_set == "simplest":
        X, names = table.X_simplest, table.binary_names_simplest
    else:
        raise ValueError("feature_set must be 'all' or 'simplest'")
    u = catalog.u_weights()
    col = {n: j for j, n in enumerate(names)}

    def trainer(train_examples, train_labels, cfg: SlimConfig):
        cfg = replace(cfg, u={n: u[n] for n in names})
        data = BinaryDataset(X[list(train_examples)], train_labels, names)
        model = slim.train(data, cfg)
        assert model.n_features <= 10, "feature cap violated"
        w = np.zeros(len(names), dtype=np.int64)
        for name, coef in model.coefficients.items():
            w[col[name]] = coef
        Xi = X.astype(np.int64)

        def score_fn(i: int) -> float:
            return float(Xi[i] @ w + model.intercept)

        score_fn.model = model
        return score_fn

    return trainer


def run_benchmark(
    tests: Sequence,
    *,
    catalog: Optional[FeatureCatalog] = None,
    seed: int = 7,
    tasks: Sequence[str] = DEFAULT_TASKS,
    methods: Sequence[str] = DEFAULT_METHODS,
    k_outer: int = 5,
    k_inner: int = 5,
    slim_base: Optional[SlimConfig] = None,
    slim_axes: Optional[Mapping[str, Sequence]] = None,
    rouleau_axes: Optional[Mapping[str, Sequence]] = None,
    table: Optional[FeatureTable] = None,
) -> dict:
    """Nested-CV AUC for every (method, task); returns {method: {task: report}}."""
    catalog = catalog or default_catalog()
    table = table or build_feature_table(tests, catalog)
    slim_base = slim_base or BENCHMARK_SLIM_BASE
    slim_grid = slim_grid_from_axes(slim_base, slim_axes or BENCHMARK_SLIM_AXES)
    r_grid = rouleau_grid_from_axes(rouleau_axes or BENCHMARK_ROULEAU_GRID_AXES)

    trainers = {
        METHOD_ROULEAU: (make_rouleau_trainer(table), r_grid),
        METHOD_SLIM_SIMPLEST: (make_slim_trainer(table, catalog, "simplest"), slim_grid),
        METHOD_SLIM_ALL: (make_slim_trainer(table, catalog, "all"), slim_grid),
    }

    results: dict = {}
    for method in methods:
        trainer, grid = trainers[method]
        results[method] = {}
        for task in tasks:
            idx, y = task_subset(table.groups, task)
            results[method][task] = nested_cv(
                idx, y, grid, trainer, task=task, k_outer=k_outer, k_inner=k_inner, seed=seed
            )
    return results


# ---------------------------------------------------------------------------
# Feature CSV
# ---------------------------------------------------------------------------

def features_csv(table: FeatureTable, catalog: Optional[FeatureCatalog] = None,
                 feature_set: str = "all", binary: bool = False) -> str:
    catalog = catalog or default_catalog()
    if binary:
        names = catalog.binary_names(feature_set)
        rows = [binarize(v, catalog) for v in table.vectors]
    else:
        names = catalog.names(feature_set)
        rows = table.vectors
    lines = ["subject_id,group," + ",".join(names)]
    for sid, group, row in zip(table.subject_ids, table.groups, rows):
        g = group.value if group is not None else ""
        lines.append(f"{sid},{g}," + ",".join(repr(float(row[n])) for n in names))
    return "\n".join(lines) + "\n"


def parse_features_csv(text: str, path: str = "<features>") -> tuple:
    """(subject_ids, groups, vectors) from a feature CSV."""
    from .stroke_model import DataFormatError, Group as G

    lines = [l for l in text.split("\n") if l.strip()]
    if not lines:
        raise DataFormatError("empty features file", 1, path)
    header = lines[0].split(",")
    if header[:2] != ["subject_id", "group"]:
        raise DataFormatError("features header must start with subject_id,group", 1, path)
    names = header[2:]
    ids, groups, vectors = [], [], []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise DataFormatError(f"expected {len(header)} fields, got {len(parts)}", i, path)
        ids.append(parts[0])
        groups.append(G(parts[1]) if parts[1] else None)
        try:
            vectors.append({n: float(v) for n, v in zip(names, parts[2:])})
        except ValueError:
            raise DataFormatError("malformed numeric value", i, path) from None
    return ids, groups, vectors


# ---------------------------------------------------------------------------
# Full reproduction run
# ---------------------------------------------------------------------------

def run_repro(
    out_dir: str,
    *,
    seed: int = 7,
    counts: Optional[Mapping[Group, int]] = None,
    k_outer: int = 5,
    k_inner: int = 5,
    tasks: Sequence[str] = DEFAULT_TASKS,
) -> dict:
    """Generate the synthetic cohort, extract features, run the benchmark,
    and write every artifact under ``out_dir``.  Deterministic in ``seed``."""
    counts = dict(DEFAULT_BENCHMARK_COUNTS) if counts is None else dict(counts)
    catalog = default_catalog()
    os.makedirs(os.path.join(out_dir, "data"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "models"), exist_ok=True)

    cfg = GeneratorConfig(counts=counts, seed=seed)
    tests = generate_dataset(cfg)
    _write(os.path.join(out_dir, "data", "strokes.csv"), serialize_strokes(tests))
    _write(os.path.join(out_dir, "data", "labels.csv"), serialize_labels(tests))

    table = build_feature_table(tests, catalog)
    _write(os.path.join(out_dir, "features_all.csv"), features_csv(table, catalog, "all"))

    results = run_benchmark(
        tests, catalog=catalog, seed=seed, tasks=tasks,
        k_outer=k_outer, k_inner=k_inner, table=table,
    )
    _write(
        os.path.join(out_dir, "benchmark.txt"),
        evaluation.benchmark_table(results, DEFAULT_METHODS, tasks),
    )
    _write(
        os.path.join(out_dir, "benchmark.csv"),
        evaluation.benchmark_csv(results, DEFAULT_METHODS, tasks),
    )

    # One final model per task and SLIM feature set, trained on the full
    # task cohort with the first benchmark configuration, plus fitted
    # Rouleau thresholds.
    slim_grid = slim_grid_from_axes(BENCHMARK_SLIM_BASE, BENCHMARK_SLIM_AXES)
    u = catalog.u_weights()
    for task in tasks:
        idx, y = task_subset(table.groups, task)
        for feature_set, names, X in (
            ("simplest", table.binary_names_simplest, table.X_simplest),
            ("all", table.binary_names_all, table.X_all),
        ):
            cfg_t = replace(slim_grid[0], u={n: u[n] for n in names})
            data = BinaryDataset(X[idx], y, names)
            model = slim.train(data, cfg_t)
            slim.save_model(model, os.path.join(out_dir, "models", f"{task}_slim_{feature_set}.slim"))
            _write(
                os.path.join(out_dir, "models", f"{task}_slim_{feature_set}.sheet.txt"),
                slim.render(model, catalog),
            )
        examples = [(table.vectors[i], yi) for i, yi in zip(idx, y)]
        params = rouleau.fit_params(examples, {k: v for k, v in BENCHMARK_ROULEAU_GRID_AXES.items()})
        _write(os.path.join(out_dir, "models", f"{task}_rouleau.params"), rouleau.serialize_params(params))

    return results


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
