"""Command-line entry point wiring the whole pipeline.

Subcommands: generate, extract, rouleau (score|fit), slim (train|predict),
evaluate, render, repro.  Every subcommand is deterministic given its
flags and seed; outputs are the plain-text formats owned by the library
modules.  Exit codes: 0 success, 1 data/validation error (diagnostic
names the file and line), 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import evaluation, pipeline, rouleau, slim
from .features import CatalogError, binarize, default_catalog, parse_catalog
from .pipeline import (
    BENCHMARK_ROULEAU_GRID_AXES,
    BENCHMARK_SLIM_AXES,
    BENCHMARK_SLIM_BASE,
    DEFAULT_METHODS,
    DEFAULT_TASKS,
    build_feature_table,
    features_csv,
    parse_features_csv,
)
from .stroke_model import (
    DataFormatError,
    Group,
    attach_groups,
    parse_labels,
    parse_strokes,
    serialize_labels,
    serialize_strokes,
)
from .synthgen import DEFAULT_PHENOTYPES, GeneratorConfig, generate_dataset


class CliError(Exception):
    """Data or validation failure surfaced as exit code 1."""


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path: str, text: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _load_catalog(path):
    if path is None:
        return default_catalog()
    return parse_catalog(_read(path))


def _parse_counts(text: str) -> dict:
    counts = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        key, _, value = item.partition("=")
        try:
            counts[Group(key.strip())] = int(value)
        except (ValueError, KeyError):
            raise CliError(f"bad counts entry '{item}' (expected e.g. HC=10)") from None
    return counts


def _parse_kv_file(path: str) -> dict:
    out = {}
    for i, raw in enumerate(_read(path).split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{path}:{i}: expected key=value")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _phenotypes_with_overrides(config_path):
    phenotypes = dict(DEFAULT_PHENOTYPES)
    if config_path is None:
        return phenotypes
    overrides = _parse_kv_file(config_path)
    for key, value in overrides.items():
        group_s, _, field = key.partition(".")
        try:
            group = Group(group_s.upper())
        except ValueError:
            raise CliError(f"unknown phenotype group '{group_s}' in {config_path}") from None
        try:
            phenotypes[group] = replace(phenotypes[group], **{field: float(value)})
        except (TypeError, ValueError) as exc:
            raise CliError(f"bad phenotype override '{key}={value}': {exc}") from None
    return phenotypes


def _load_tests(data_dir: str):
    strokes_path = os.path.join(data_dir, "strokes.csv")
    labels_path = os.path.join(data_dir, "labels.csv")
    tests = parse_strokes(_read(strokes_path), strokes_path)
    groups = parse_labels(_read(labels_path), labels_path)
    return attach_groups(tests, groups)


def _labeled_examples(features_path: str, task: str):
    ids, groups, vectors = parse_features_csv(_read(features_path), features_path)
    idx, y = evaluation.task_subset(groups, task)
    return [(vectors[i], yi) for i, yi in zip(idx, y)], ids, groups, vectors


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_generate(args) -> int:
    counts = _parse_counts(args.counts) if args.counts else dict(pipeline.DEFAULT_BENCHMARK_COUNTS)
    phenotypes = _phenotypes_with_overrides(args.config)
    cfg = GeneratorConfig(
        counts=counts,
        seed=args.seed,
        canvas_radius_cm=args.canvas_radius,
        sample_period_ms=args.sample_period,
    )
    tests = generate_dataset(cfg, phenotypes)
    _write(os.path.join(args.out, "strokes.csv"), serialize_strokes(tests))
    _write(os.path.join(args.out, "labels.csv"), serialize_labels(tests))
    print(f"wrote {len(tests)} tests to {args.out}")
    return 0


def _cmd_extract(args) -> int:
    catalog = _load_catalog(args.catalog)
    tests = _load_tests(args.data)
    table = build_feature_table(tests, catalog)
    _write(args.out, features_csv(table, catalog, args.features, binary=args.binarize))
    print(f"wrote features for {len(tests)} tests to {args.out}")
    return 0


def _cmd_rouleau(args) -> int:
    if args.action == "fit":
        examples, _, _, _ = _labeled_examples(args.features_csv, args.task)
        params = rouleau.fit_params(examples, clock=args.clock)
        _write(args.out, rouleau.serialize_params(params))
        print(f"wrote fitted params to {args.out}")
        return 0
    params = rouleau.parse_params(_read(args.params)) if args.params else rouleau.DEFAULT_PARAMS
    ids, groups, vectors = parse_features_csv(_read(args.features_csv), args.features_csv)
    lines = ["subject_id,group,face_pts,numbers_pts,hands_pts,total,decision"]
    for sid, group, fv in zip(ids, groups, vectors):
        s = rouleau.rouleau_total(fv, params, args.clock)
        decision = rouleau.classify(s, params)
        g = group.value if group else ""
        lines.append(f"{sid},{g},{s.face_pts},{s.numbers_pts},{s.hands_pts},{s.total},{decision}")
    _write(args.out, "\n".join(lines) + "\n")
    print(f"wrote scores for {len(ids)} subjects to {args.out}")
    return 0


def _cmd_slim(args) -> int:
    catalog = _load_catalog(args.catalog)
    if args.action == "train":
        examples, _, _, _ = _labeled_examples(args.features_csv, args.task)
        names = catalog.binary_names(args.features)
        rows = [binarize(fv, catalog) for fv, _ in examples]
        y = [yi for _, yi in examples]
        data = slim.BinaryDataset.from_vectors(rows, y, names)
        u = catalog.u_weights()
        cfg = replace(
            BENCHMARK_SLIM_BASE,
            c_minus=args.c_minus,
            c0=args.c0,
            c1=args.c1,
            coeff_bound=args.coeff_bound,
            intercept_bound=args.intercept_bound,
            max_features=args.max_features,
            max_nodes=args.max_nodes,
            u={n: u[n] for n in names},
        )
        model = slim.train(data, cfg)
        slim.save_model(model, args.out)
        print(f"trained ({model.status}, objective {model.objective:.6f}); wrote {args.out}")
        return 0
    # predict
    model = slim.load_model(args.model)
    ids, groups, vectors = parse_features_csv(_read(args.features_csv), args.features_csv)
    lines = ["subject_id,group,score,prediction"]
    for sid, group, fv in zip(ids, groups, vectors):
        row = binarize(fv, catalog)
        sc = slim.score(model, row)
        pred = "impaired" if slim.predict(model, row) == 1 else "healthy"
        g = group.value if group else ""
        lines.append(f"{sid},{g},{sc},{pred}")
    _write(args.out, "\n".join(lines) + "\n")
    print(f"wrote predictions for {len(ids)} subjects to {args.out}")
    return 0


def _cmd_render(args) -> int:
    catalog = _load_catalog(args.catalog)
    model = slim.load_model(args.model)
    sheet = slim.render(model, catalog)
    if args.out:
        _write(args.out, sheet)
    sys.stdout.write(sheet)
    return 0


def _cmd_evaluate(args) -> int:
    catalog = _load_catalog(args.catalog)
    tests = _load_tests(args.data)
    table = build_feature_table(tests, catalog)
    if args.method == "rouleau":
        method = pipeline.METHOD_ROULEAU
    else:
        method = pipeline.METHOD_SLIM_ALL if args.features == "all" else pipeline.METHOD_SLIM_SIMPLEST
    results = pipeline.run_benchmark(
        tests,
        catalog=catalog,
        seed=args.seed,
        tasks=(args.task,),
        methods=(method,),
        k_outer=args.folds,
        k_inner=args.inner_folds,
        table=table,
    )
    rep = results[method][args.task]
    _write(args.out + ".txt", evaluation.benchmark_table(results, (method,), (args.task,)))
    _write(args.out + ".csv", evaluation.benchmark_csv(results, (method,), (args.task,)))
    print(f"{method} on {args.task}: mean AUC {rep.mean:.4f} (std {rep.std:.4f})")
    return 0


def _cmd_repro(args) -> int:
    counts = _parse_counts(args.counts) if args.counts else None
    results = pipeline.run_repro(
        args.out,
        seed=args.seed,
        counts=counts,
        k_outer=args.folds,
        k_inner=args.inner_folds,
    )
    sys.stdout.write(evaluation.benchmark_table(results, DEFAULT_METHODS, DEFAULT_TASKS))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcdt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic cohort (strokes + labels)")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True, help="output directory for strokes.csv/labels.csv")
    p.add_argument("--counts", help="per-group counts, e.g. HC=406,MID=151,VCD=151,PD=151")
    p.add_argument("--preset", default="default", choices=("default",), help="phenotype preset bundle")
    p.add_argument("--config", help="key=value phenotype overrides, e.g. mid.digit_omission_prob=0.3")
    p.add_argument("--canvas-radius", type=float, default=4.0)
    p.add_argument("--sample-period", type=int, default=13)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("extract", help="extract feature vectors to CSV")
    p.add_argument("--data", required=True, help="directory with strokes.csv and labels.csv")
    p.add_argument("--out", required=True)
    p.add_argument("--features", default="all", choices=("all", "simplest"))
    p.add_argument("--binarize", action="store_true", help="emit binary predicates instead of raw values")
    p.add_argument("--catalog", help="alternate catalog file")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("rouleau", help="score subjects with, or fit, the operationalized rubric")
    p.add_argument("action", choices=("score", "fit"))
    p.add_argument("--features-csv", required=True, help="CSV from 'dcdt extract'")
    p.add_argument("--out", required=True)
    p.add_argument("--params", help="params file for scoring (defaults shipped)")
    p.add_argument("--task", default="all3", choices=tuple(evaluation.TASKS))
    p.add_argument("--clock", default="cmd", choices=("cmd", "copy"))
    p.set_defaults(func=_cmd_rouleau)

    p = sub.add_parser("slim", help="train a sparse integer model or predict with one")
    p.add_argument("action", choices=("train", "predict"))
    p.add_argument("--features-csv", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", help="model file (predict)")
    p.add_argument("--task", default="all3", choices=tuple(evaluation.TASKS))
    p.add_argument("--features", default="all", choices=("all", "simplest"))
    p.add_argument("--c-minus", type=float, default=1.0)
    p.add_argument("--c0", type=float, default=1e-3)
    p.add_argument("--c1", type=float, default=0.0)
    p.add_argument("--coeff-bound", type=int, default=BENCHMARK_SLIM_BASE.coeff_bound)
    p.add_argument("--intercept-bound", type=int, default=BENCHMARK_SLIM_BASE.intercept_bound)
    p.add_argument("--max-features", type=int, default=10)
    p.add_argument("--max-nodes", type=int, default=BENCHMARK_SLIM_BASE.max_nodes,
                   help="deterministic search budget; 0 means exact search")
    p.add_argument("--catalog", help="alternate catalog file")
    p.set_defaults(func=_cmd_slim)

    p = sub.add_parser("render", help="render a model file as a scoring sheet")
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="also write the sheet to this path")
    p.add_argument("--catalog", help="alternate catalog file")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("evaluate", help="nested-CV AUC for one method and task")
    p.add_argument("--data", required=True, help="directory with strokes.csv and labels.csv")
    p.add_argument("--task", required=True, choices=tuple(evaluation.TASKS))
    p.add_argument("--method", required=True, choices=("slim", "rouleau"))
    p.add_argument("--features", default="all", choices=("all", "simplest"))
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--inner-folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", default="report", help="output prefix for .txt/.csv reports")
    p.add_argument("--catalog", help="alternate catalog file")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("repro", help="full synthetic benchmark: generate, extract, evaluate, report")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.add_argument("--counts", help="per-group counts override")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--inner-folds", type=int, default=5)
    p.set_defaults(func=_cmd_repro)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "max_nodes", None) == 0:
        args.max_nodes = None
    try:
        return args.func(args)
    except (DataFormatError, CatalogError, CliError, ValueError) as exc:
        print(f"dcdt: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
