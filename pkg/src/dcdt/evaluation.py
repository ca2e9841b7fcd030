"""Stratified nested cross-validation, AUC, and benchmark reporting.

Scores are oriented "higher means more impaired" (the +1 class);
rule-based totals must be negated by the caller before they meet this
module.  AUC is the Mann-Whitney concordance probability with ties worth
one half, which equals trapezoidal integration of the tie-aware ROC
curve; both implementations live here so they can check each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .stroke_model import Group

# Screening tasks: each impaired subset is discriminated from HC.
TASKS: Mapping[str, tuple] = {
    "mid": (Group.MID,),
    "vcd": (Group.VCD,),
    "pd": (Group.PD,),
    "all3": (Group.MID, Group.VCD, Group.PD),
}

TASK_TITLES: Mapping[str, str] = {
    "mid": "Memory impairment disorders vs. HC",
    "vcd": "Vascular cognitive disorders vs. HC",
    "pd": "PD vs. HC",
    "all3": "All three vs. HC",
}


def task_subset(groups: Sequence[Group], task: str) -> tuple:
    """(indices, labels) for a screening task; +1 marks the impaired class."""
    if task not in TASKS:
        raise ValueError(f"unknown task '{task}' (expected one of {sorted(TASKS)})")
    impaired = TASKS[task]
    idx, y = [], []
    for i, g in enumerate(groups):
        if g is Group.HC:
            idx.append(i)
            y.append(-1)
        elif g in impaired:
            idx.append(i)
            y.append(+1)
    return idx, y


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: tuple
    seed: int

    def fold_indices(self, fold: int) -> tuple:
        test = [i for i, f in enumerate(self.assignments) if f == fold]
        train = [i for i, f in enumerate(self.assignments) if f != fold]
        return train, test


def stratified_kfold(labels: Sequence, k: int, seed: int) -> FoldPlan:
    """Assign each item a fold so per-class counts differ by at most one."""
    if k < 2:
        raise ValueError("k must be >= 2")
    labels = list(labels)
    assignments = [-1] * len(labels)
    rng = np.random.default_rng(seed)
    classes = sorted(set(labels), key=repr)
    for cls in classes:
        idx = np.array([i for i, v in enumerate(labels) if v == cls])
        if idx.size < k:
            raise ValueError(f"class {cls!r} has {idx.size} items, fewer than k={k}")
        perm = rng.permutation(idx)
        base, extra = divmod(idx.size, k)
        pos = 0
        for fold in range(k):
            size = base + (1 if fold < extra else 0)
            for i in perm[pos:pos + size]:
                assignments[int(i)] = fold
            pos += size
    return FoldPlan(k, tuple(assignments), seed)


def _check_two_classes(y: np.ndarray):
    if not ((y == 1).any() and (y == -1).any()):
        raise ValueError("need both classes (+1 and -1) present")


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 * P(tie)."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    _check_two_classes(y)
    order = np.argsort(s, kind="mergesort")
    sv = s[order]
    ranks = np.empty(s.size, dtype=np.float64)
    # average ranks over tie groups
    i = 0
    while i < sv.size:
        j = i
        while j + 1 < sv.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    n_pos = int((y == 1).sum())
    n_neg = int((y == -1).sum())
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_points(scores: Sequence[float], labels: Sequence[int]) -> tuple:
    """Tie-aware ROC as (fpr, tpr) arrays from (0,0) to (1,1)."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    _check_two_classes(y)
    order = np.argsort(-s, kind="mergesort")
    sv = s[order]
    yv = y[order]
    n_pos = int((y == 1).sum())
    n_neg = int((y == -1).sum())
    fpr = [0.0]
    tpr = [0.0]
    tp = fp = 0
    i = 0
    while i < sv.size:
        j = i
        while j + 1 < sv.size and sv[j + 1] == sv[i]:
            j += 1
        tp += int((yv[i:j + 1] == 1).sum())
        fp += int((yv[i:j + 1] == -1).sum())
        fpr.append(fp / n_neg)
        tpr.append(tp / n_pos)
        i = j + 1
    return np.array(fpr), np.array(tpr)


def auc_trapezoid(scores: Sequence[float], labels: Sequence[int]) -> float:
    """AUC by trapezoidal integration of the tie-aware ROC curve."""
    fpr, tpr = roc_points(scores, labels)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


@dataclass(frozen=True)
class EvalReport:
    task: str
    fold_aucs: tuple
    chosen: tuple          # chosen hyperparameter description per fold
    mean: float
    std: float             # population std over the k folds
    seed: int

    @classmethod
    def from_folds(cls, task: str, fold_aucs: Sequence[float], chosen: Sequence[str], seed: int) -> "EvalReport":
        arr = np.asarray(fold_aucs, dtype=np.float64)
        return cls(
            task=task,
            fold_aucs=tuple(float(a) for a in arr),
            chosen=tuple(chosen),
            mean=float(arr.mean()),
            std=float(arr.std()),
            seed=seed,
        )


Trainer = Callable[[Sequence, Sequence[int], object], Callable[[object], float]]


def nested_cv(
    examples: Sequence,
    labels: Sequence[int],
    grid: Sequence,
    trainer: Trainer,
    *,
    task: str = "",
    k_outer: int = 5,
    k_inner: int = 5,
    seed: int = 0,
) -> EvalReport:
    """Outer folds estimate generalization; inner folds pick the config.

    ``trainer(train_examples, train_labels, config)`` returns a scoring
    function mapping one example to a real score (higher = impaired).
    The configuration with the best mean inner AUC wins, ties going to
    the earlier entry in ``grid``; it is then retrained on the full outer
    training split and evaluated on the held-out fold.
    """
    if not grid:
        raise ValueError("grid must be nonempty")
    examples = list(examples)
    y = np.asarray(labels)
    _check_two_classes(y)
    outer = stratified_kfold(list(y), k_outer, seed)

    fold_aucs = []
    chosen = []
    for fold in range(k_outer):
        train_idx, test_idx = outer.fold_indices(fold)
        test_set = set(test_idx)
        inner_seed = int(np.random.SeedSequence(seed, spawn_key=(1, fold)).generate_state(1)[0])
        inner = stratified_kfold([int(y[i]) for i in train_idx], k_inner, inner_seed)

        best = None
        for gi, config in enumerate(grid):
            inner_aucs = []
            for ifold in range(k_inner):
                it_rel, iv_rel = inner.fold_indices(ifold)
                it = [train_idx[i] for i in it_rel]
                iv = [train_idx[i] for i in iv_rel]
                # leakage audit: outer-fold test subjects stay out of inner loops
                assert test_set.isdisjoint(it) and test_set.isdisjoint(iv)
                score_fn = trainer([examples[i] for i in it], [int(y[i]) for i in it], config)
                inner_aucs.append(
                    auc([score_fn(examples[i]) for i in iv], [int(y[i]) for i in iv])
                )
            mean_auc = float(np.mean(inner_aucs))
            if best is None or mean_auc > best[0]:
                best = (mean_auc, gi, config)

        config = best[2]
        score_fn = trainer([examples[i] for i in train_idx], [int(y[i]) for i in train_idx], config)
        fold_aucs.append(auc([score_fn(examples[i]) for i in test_idx], [int(y[i]) for i in test_idx]))
        chosen.append(repr(config))

    return EvalReport.from_folds(task, fold_aucs, chosen, seed)


def format_auc_cell(mean: float, std: float) -> str:
    return f"{mean:.2f} ({std:.2f})"


def benchmark_table(
    results: Mapping[str, Mapping[str, EvalReport]],
    method_order: Sequence[str],
    task_order: Sequence[str],
) -> str:
    """Aligned text table: rows are methods, columns screening tasks."""
    header = ["Method"] + [TASK_TITLES.get(t, t) for t in task_order]
    rows = [header]
    for method in method_order:
        row = [method]
        for t in task_order:
            rep = results[method][t]
            row.append(format_auc_cell(rep.mean, rep.std))
        rows.append(row)
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def benchmark_csv(
    results: Mapping[str, Mapping[str, EvalReport]],
    method_order: Sequence[str],
    task_order: Sequence[str],
) -> str:
    """Long-form CSV: per-fold AUCs plus mean/std summary rows."""
    lines = ["task,method,fold,auc"]
    for t in task_order:
        for method in method_order:
            rep = results[method][t]
            for i, a in enumerate(rep.fold_aucs):
                lines.append(f"{t},{method},{i},{a!r}")
            lines.append(f"{t},{method},mean,{rep.mean!r}")
            lines.append(f"{t},{method},std,{rep.std!r}")
    return "\n".join(lines) + "\n"
