"""Supersparse linear integer models: exact weighted 0-1 loss training.

The model is ``predict(x) = sign(intercept + sum_j coef_j * x_j)`` over
binary features, with integer coefficients, +1 encoding the impaired
class and sign(0) = -1 (healthy).  Training minimizes

    C+ * (1/N) * sum_{y=+1} psi_i  +  C- * (1/N) * sum_{y=-1} psi_i
    + C0 * #nonzero  +  C1 * sum_j u_j * [coef_j != 0]

over coefficients in [-bound, bound] with at most ``max_features``
nonzeros (hard-capped at 10).  psi counts margin-zero as an error
(``y * score <= 0``), which keeps the loss symmetric under negating all
labels and coefficients while swapping C+ and C-.  The intercept pays no
penalty: it is an offset, not a used feature.

``train`` is branch-and-bound over integer coefficient assignments,
fixing features one at a time in descending single-feature-AUC order;
a node's lower bound is the penalty already committed by its fixed
nonzeros, and subtrees whose bound meets the incumbent are pruned.  Run
to completion the search is exact (``proven-optimal``); under a node or
wall-clock budget it returns the best incumbent (``budget-best``).
``brute_force_train`` scans every assignment and is the test oracle.

Scoring sheets read the other way around from the sign form: a sheet
awards ``-coef_j`` points per true predicate and predicts the positive
class when the sheet total falls strictly below ``intercept``, so low
scores flag impairment exactly as clinical point sheets do.
"""

from __future__ import annotations

import itertools
import math
import re
import time
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .evaluation import auc
from .features import SHEET_DESCRIPTIONS, FeatureCatalog, FeatureClock

MODEL_MAGIC = "slim-model v1"
INTERCEPT_KEY = "__intercept__"
LABEL_KEY = "__label__"
DEFAULT_LABEL = "IMPAIRED"
BRUTE_FORCE_LIMIT = 10**7

# Declared hyperparameter grid (C+ stays 1; the others trade off loss
# asymmetry, sparsity, and understandability).
DEFAULT_GRID_AXES = {
    "c_minus": (0.5, 1.0, 2.0),
    "c0": (1e-4, 1e-3, 1e-2),
    "c1": (0.0, 1e-4, 1e-3),
}


class FeatureMismatchError(ValueError):
    """Model references a feature the input vector does not carry."""


@dataclass(frozen=True)
class SlimConfig:
    c_plus: float = 1.0
    c_minus: float = 1.0
    c0: float = 1e-3
    c1: float = 0.0
    coeff_bound: int = 10
    intercept_bound: int = 100
    max_features: int = 10
    u: Optional[Mapping[str, int]] = None
    time_budget_ms: Optional[float] = None
    max_nodes: Optional[int] = None

    def __post_init__(self):
        if self.c_plus <= 0 or self.c_minus <= 0:
            raise ValueError("C+ and C- must be positive")
        if self.c0 < 0 or self.c1 < 0:
            raise ValueError("C0 and C1 must be nonnegative")
        if self.coeff_bound < 1 or self.intercept_bound < 1:
            raise ValueError("coefficient bounds must be >= 1")
        if not (1 <= self.max_features <= 10):
            raise ValueError("max_features must be in 1..10 (hard cap of 10 features)")


def default_grid(base: Optional[SlimConfig] = None) -> list:
    base = base or SlimConfig()
    grid = []
    for cm in DEFAULT_GRID_AXES["c_minus"]:
        for c0 in DEFAULT_GRID_AXES["c0"]:
            for c1 in DEFAULT_GRID_AXES["c1"]:
                grid.append(replace(base, c_minus=cm, c0=c0, c1=c1))
    return grid


class BinaryDataset:
    """N x J binary design matrix with labels in {-1, +1}.

    The intercept column of ones is implicit; ``X`` holds features only.
    """

    __slots__ = ("X", "y", "feature_names")

    def __init__(self, X, y, feature_names: Sequence[str]):
        X = np.ascontiguousarray(np.asarray(X, dtype=np.int8))
        y = np.ascontiguousarray(np.asarray(y, dtype=np.int8))
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("X must be a nonempty 2-D matrix")
        if not np.isin(X, (0, 1)).all():
            raise ValueError("X entries must be 0 or 1")
        if y.shape != (X.shape[0],) or not np.isin(y, (-1, 1)).all():
            raise ValueError("y must be one label in {-1,+1} per row")
        names = tuple(feature_names)
        if len(names) != X.shape[1]:
            raise ValueError("feature_names must match the column count")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", names)

    def __setattr__(self, name, value):
        raise AttributeError("BinaryDataset is immutable")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def j(self) -> int:
        return self.X.shape[1]

    @classmethod
    def from_vectors(cls, vectors: Sequence[Mapping[str, float]], labels: Sequence[int],
                     feature_names: Optional[Sequence[str]] = None) -> "BinaryDataset":
        if feature_names is None:
            feature_names = list(vectors[0].keys())
        X = np.array([[v[name] for name in feature_names] for v in vectors])
        return cls(X, labels, feature_names)


@dataclass(frozen=True)
class SlimModel:
    coefficients: Mapping[str, int]   # nonzero integer weights by feature name
    intercept: int
    objective: float
    status: str                       # proven-optimal | budget-best | loaded | parsed
    config: Optional[SlimConfig] = None
    label: str = DEFAULT_LABEL

    def __post_init__(self):
        if self.config is not None:
            if len(self.coefficients) > self.config.max_features:
                raise ValueError("model exceeds the feature cap")
            if any(abs(c) > self.config.coeff_bound for c in self.coefficients.values()):
                raise ValueError("model coefficient outside the declared bound")

    @property
    def n_features(self) -> int:
        return len(self.coefficients)


def misclassifications(scores, labels) -> np.ndarray:
    """psi vector: 1 where y * score <= 0 (margin zero counts as error)."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    return (y * s <= 0).astype(np.int8)


def score(model: SlimModel, x: Mapping[str, float]) -> int:
    """Integer decision score intercept + sum coef_j * x_j."""
    total = model.intercept
    for name, coef in model.coefficients.items():
        if name not in x:
            raise FeatureMismatchError(f"input vector lacks model feature '{name}'")
        total += coef * int(round(float(x[name])))
    return int(total)


def predict(model: SlimModel, x: Mapping[str, float]) -> int:
    """+1 (impaired) when the score is strictly positive, else -1."""
    return 1 if score(model, x) > 0 else -1


def _loss(c_plus: float, c_minus: float, pos_err: int, neg_err: int, n: int) -> float:
    return c_plus * (pos_err / n) + c_minus * (neg_err / n)


def _penalty(c0: float, c1: float, nnz: int, usum: int) -> float:
    return c0 * nnz + c1 * usum


def objective(lam: Sequence[int], intercept: int, data: BinaryDataset, cfg: SlimConfig) -> float:
    """Weighted 0-1 loss plus sparsity and understandability penalties."""
    lam = np.asarray(lam, dtype=np.int64)
    if lam.shape != (data.j,):
        raise ValueError("coefficient vector length must match the feature count")
    if np.any(np.abs(lam) > cfg.coeff_bound) or abs(intercept) > cfg.intercept_bound:
        raise ValueError("coefficients outside the declared bounds")
    u = _u_vector(data.feature_names, cfg)
    s = data.X.astype(np.int64) @ lam + intercept
    psi = misclassifications(s, data.y)
    pos_err = int(psi[data.y == 1].sum())
    neg_err = int(psi[data.y == -1].sum())
    nz = lam != 0
    return _loss(cfg.c_plus, cfg.c_minus, pos_err, neg_err, data.n) + _penalty(
        cfg.c0, cfg.c1, int(nz.sum()), int(u[nz].sum())
    )


def _u_vector(names: Sequence[str], cfg: SlimConfig) -> np.ndarray:
    if cfg.u is None:
        return np.ones(len(names), dtype=np.int64)
    out = np.empty(len(names), dtype=np.int64)
    for i, name in enumerate(names):
        w = int(cfg.u.get(name, 1))
        if w < 1:
            raise ValueError(f"understandability weight for '{name}' must be >= 1")
        out[i] = w
    return out


def _best_intercept(s: np.ndarray, cfg: SlimConfig, n: int, y_pos_mask, y_neg_mask) -> tuple:
    """(intercept, loss) minimizing weighted 0-1 loss for fixed coefficients.

    With feature scores s fixed, a positive errs iff c <= -s_i and a
    negative errs iff c >= -s_i, so the loss only changes at integers
    -s_i and -s_i + 1; scanning those (clipped to the bound) is exact.
    Ties go to the smallest intercept.
    """
    b = cfg.intercept_bound
    t = -s
    cands = np.unique(np.clip(np.concatenate([t, t + 1, (-b, b)]), -b, b))
    tp = np.sort(t[y_pos_mask])
    tn = np.sort(t[y_neg_mask])
    # pos errors: #{t_pos >= c}; neg errors: #{t_neg <= c}
    pos_err = tp.size - np.searchsorted(tp, cands, side="left")
    neg_err = np.searchsorted(tn, cands, side="right")
    losses = cfg.c_plus * (pos_err / n) + cfg.c_minus * (neg_err / n)
    k = int(np.argmin(losses))  # first occurrence; cands ascend, so smallest c
    return int(cands[k]), float(losses[k])


def _solution_key(obj: float, lam: np.ndarray, intercept: int) -> tuple:
    """Total order for tie-breaking: objective, then fewer nonzeros, then
    smaller total magnitude, then lexicographic coefficients, then the
    intercept."""
    nz = int((lam != 0).sum())
    return (obj, nz, int(np.abs(lam).sum()), tuple(int(v) for v in lam), intercept)


def _validate_training_inputs(data: BinaryDataset, cfg: SlimConfig):
    if data.j < 1:
        raise ValueError("training needs at least one feature")
    if not ((data.y == 1).any() and (data.y == -1).any()):
        raise ValueError("training needs both classes present")


def brute_force_train(data: BinaryDataset, cfg: SlimConfig) -> SlimModel:
    """Exhaustive scan over all coefficient assignments; the train oracle.

    Ties break toward fewer nonzeros, then smaller sum of magnitudes,
    then lexicographically smaller coefficients.
    """
    _validate_training_inputs(data, cfg)
    lam_count = (2 * cfg.coeff_bound + 1) ** data.j * (2 * cfg.intercept_bound + 1)
    if lam_count > BRUTE_FORCE_LIMIT:
        raise ValueError(f"instance too large for brute force ({lam_count} assignments)")
    u = _u_vector(data.feature_names, cfg)
    X = data.X.astype(np.int64)
    y_pos = data.y == 1
    y_neg = data.y == -1
    n = data.n

    best_key = None
    values = range(-cfg.coeff_bound, cfg.coeff_bound + 1)
    for lam_t in itertools.product(values, repeat=data.j):
        lam = np.array(lam_t, dtype=np.int64)
        nz = lam != 0
        nnz = int(nz.sum())
        if nnz > cfg.max_features:
            continue
        s = X @ lam
        c, loss = _best_intercept(s, cfg, n, y_pos, y_neg)
        obj = loss + _penalty(cfg.c0, cfg.c1, nnz, int(u[nz].sum()))
        key = _solution_key(obj, lam, c)
        if best_key is None or key < best_key:
            best_key = key

    obj, _, _, lam_t, c = best_key
    coeffs = {data.feature_names[i]: v for i, v in enumerate(lam_t) if v != 0}
    return SlimModel(coeffs, c, obj, "proven-optimal", cfg)


def _single_feature_order(data: BinaryDataset) -> list:
    """Feature indices by descending single-feature AUC (ties by index)."""
    aucs = []
    for j in range(data.j):
        aucs.append(auc(data.X[:, j].astype(float), data.y))
    return sorted(range(data.j), key=lambda j: (-aucs[j], j))


def train(data: BinaryDataset, cfg: SlimConfig) -> SlimModel:
    """Branch-and-bound minimization of the SLIM objective.

    Exact (``proven-optimal``) when the search completes; under
    ``max_nodes`` (deterministic) or ``time_budget_ms`` (wall clock) the
    best incumbent is returned flagged ``budget-best``.
    """
    _validate_training_inputs(data, cfg)
    u = _u_vector(data.feature_names, cfg)
    X = data.X.astype(np.int64)
    y_pos = data.y == 1
    y_neg = data.y == -1
    n = data.n
    J = data.j
    order = _single_feature_order(data)
    values = [0] + [w for k in range(1, cfg.coeff_bound + 1) for w in (k, -k)]
    # Guided value ordering buys good incumbents early; it only pays for
    # itself when the search will be cut short.
    guided = cfg.max_nodes is not None or cfg.time_budget_ms is not None

    lam = np.zeros(J, dtype=np.int64)
    state = {"nodes": 0, "cutoff": False, "best_key": None}
    start = time.monotonic()

    def leaf(s: np.ndarray, nnz: int, usum: int):
        c, loss = _best_intercept(s, cfg, n, y_pos, y_neg)
        obj = loss + _penalty(cfg.c0, cfg.c1, nnz, usum)
        key = _solution_key(obj, lam, c)
        if state["best_key"] is None or key < state["best_key"]:
            state["best_key"] = key

    def over_budget() -> bool:
        if state["cutoff"]:
            return True
        if cfg.max_nodes is not None and state["nodes"] > cfg.max_nodes:
            state["cutoff"] = True
        elif cfg.time_budget_ms is not None and state["nodes"] % 256 == 0:
            if (time.monotonic() - start) * 1000.0 > cfg.time_budget_ms:
                state["cutoff"] = True
        return state["cutoff"]

    def dfs(depth: int, s: np.ndarray, nnz: int, usum: int):
        state["nodes"] += 1
        if over_budget():
            return
        bound = _penalty(cfg.c0, cfg.c1, nnz, usum)
        if state["best_key"] is not None and bound >= state["best_key"][0]:
            return
        if depth == J:
            leaf(s, nnz, usum)
            return
        jcol = order[depth]
        col = X[:, jcol]
        if guided:
            ranked = []
            for rank, v in enumerate(values):
                if v != 0 and nnz + 1 > cfg.max_features:
                    continue
                nnz2 = nnz + (v != 0)
                usum2 = usum + (int(u[jcol]) if v else 0)
                c, loss = _best_intercept(s + v * col, cfg, n, y_pos, y_neg)
                ranked.append((loss + _penalty(cfg.c0, cfg.c1, nnz2, usum2), rank, v))
            ranked.sort()
            candidates = [v for _, _, v in ranked]
        else:
            candidates = values
        for v in candidates:
            if v != 0 and nnz + 1 > cfg.max_features:
                continue
            nnz2 = nnz + (v != 0)
            usum2 = usum + (int(u[jcol]) if v else 0)
            if state["best_key"] is not None and _penalty(cfg.c0, cfg.c1, nnz2, usum2) >= state["best_key"][0]:
                continue
            lam[jcol] = v
            dfs(depth + 1, s + v * col if v else s, nnz2, usum2)
            lam[jcol] = 0
            if state["cutoff"]:
                return

    # Seed the incumbent with the zero model so the bound can prune.
    leaf(np.zeros(n, dtype=np.int64), 0, 0)
    dfs(0, np.zeros(n, dtype=np.int64), 0, 0)

    obj, _, _, lam_t, c = state["best_key"]
    status = "budget-best" if state["cutoff"] else "proven-optimal"
    coeffs = {data.feature_names[i]: v for i, v in enumerate(lam_t) if v != 0}
    return SlimModel(coeffs, c, obj, status, cfg)


# ---------------------------------------------------------------------------
# Scoring sheets and model files
# ---------------------------------------------------------------------------

_CLOCK_HEADINGS = (
    (FeatureClock.COMMAND, "Command clock:"),
    (FeatureClock.COPY, "Copy clock:"),
    (FeatureClock.BOTH, "Both clocks:"),
)


def render(model: SlimModel, catalog: FeatureCatalog, label: Optional[str] = None) -> str:
    """Human scoring sheet: points are negated coefficients, the rule is
    strict (a sheet total equal to the threshold stays healthy)."""
    label = label or model.label
    lines = [f"PREDICT {label} IF SCORE < {model.intercept}"]
    counter = 0
    for clock, heading in _CLOCK_HEADINGS:
        rows = [
            d for d in catalog
            if d.clock is clock and d.name in model.coefficients
        ]
        if not rows:
            continue
        lines.append(heading)
        for d in rows:
            counter += 1
            points = -model.coefficients[d.name]
            desc = SHEET_DESCRIPTIONS.get(d.name, d.name)
            lines.append(f"{counter}. {desc} & {points:+d}")
    for name in model.coefficients:
        if name not in catalog:
            raise FeatureMismatchError(f"model feature '{name}' is not in the catalog")
    return "\n".join(lines) + "\n"


_SHEET_RULE_RE = re.compile(r"^PREDICT (.+) IF SCORE < (-?\d+)$")
_SHEET_ROW_RE = re.compile(r"^(\d+)\. (.+) & ([+-]\d+)$")


def parse_sheet(text: str, catalog: FeatureCatalog) -> SlimModel:
    """Parse a rendered sheet back into a model (inverse of render)."""
    reverse = {}
    for d in catalog:
        desc = SHEET_DESCRIPTIONS.get(d.name, d.name)
        reverse[(d.clock, desc)] = d.name
    headings = {h: c for c, h in _CLOCK_HEADINGS}

    lines = [l for l in text.split("\n") if l.strip()]
    if not lines:
        raise ValueError("empty sheet")
    m = _SHEET_RULE_RE.match(lines[0])
    if m is None:
        raise ValueError(f"bad sheet rule line: {lines[0]!r}")
    label = m.group(1)
    intercept = int(m.group(2))
    coeffs = {}
    clock = None
    for line in lines[1:]:
        if line in headings:
            clock = headings[line]
            continue
        row = _SHEET_ROW_RE.match(line)
        if row is None:
            raise ValueError(f"bad sheet row: {line!r}")
        if clock is None:
            raise ValueError("sheet row before any clock heading")
        desc = row.group(2)
        name = reverse.get((clock, desc))
        if name is None:
            raise ValueError(f"unknown sheet predicate {desc!r} under {clock.value}")
        coeffs[name] = -int(row.group(3))
    return SlimModel(coeffs, intercept, math.nan, "parsed", None, label)


def serialize_model(model: SlimModel) -> str:
    lines = [MODEL_MAGIC]
    if model.label != DEFAULT_LABEL:
        lines.append(f"{LABEL_KEY}\t{model.label}")
    for name, coef in model.coefficients.items():
        lines.append(f"{name}\t{coef}")
    lines.append(f"{INTERCEPT_KEY}\t{model.intercept}")
    return "\n".join(lines) + "\n"


def parse_model(text: str, path: str = "<model>") -> SlimModel:
    lines = [l for l in text.split("\n") if l.strip()]
    if not lines or lines[0] != MODEL_MAGIC:
        raise ValueError(f"{path}: first line must be '{MODEL_MAGIC}'")
    label = DEFAULT_LABEL
    coeffs = {}
    intercept = None
    for i, line in enumerate(lines[1:], start=2):
        if "\t" not in line:
            raise ValueError(f"{path}:{i}: expected <name><TAB><value>")
        name, _, value = line.partition("\t")
        if name == LABEL_KEY:
            label = value
            continue
        try:
            iv = int(value)
        except ValueError:
            raise ValueError(f"{path}:{i}: coefficient must be an integer") from None
        if name == INTERCEPT_KEY:
            intercept = iv
        elif name.startswith("__"):
            raise ValueError(f"{path}:{i}: unknown reserved row '{name}'")
        elif name in coeffs:
            raise ValueError(f"{path}:{i}: duplicate feature '{name}'")
        else:
            coeffs[name] = iv
    if intercept is None:
        raise ValueError(f"{path}: missing {INTERCEPT_KEY} row")
    return SlimModel(coeffs, intercept, math.nan, "loaded", None, label)


def save_model(model: SlimModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(serialize_model(model))


def load_model(path) -> SlimModel:
    with open(path, "r", encoding="utf-8") as f:
        return parse_model(f.read(), str(path))
