"""Operationalized Rouleau-style scoring of clock feature vectors.

The classic 10-point rubric (2 for clockface integrity, 4 for number
presence/sequencing, 4 for hand presence/placement) is made executable by
mapping each vague clinical phrase to one named threshold in
:class:`RouleauParams`.  Scoring consumes the command clock by default;
pass ``clock="copy"`` to score the copy clock instead.

Scores are integers and every scoring function is pure: the same feature
vector always yields the same score regardless of stroke order, since the
vector itself is already order-free.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, fields, replace
from typing import Mapping, Optional, Sequence

from .evaluation import auc
from .features import is_missing


@dataclass(frozen=True)
class RouleauParams:
    """Thresholds for the operationalized rubric.

    ``eps1_deg``/``eps2_deg`` split hand pointing errors into slight vs
    major ("at most one hand with a pointing error between the two
    thresholds" keeps 3 points); the digit thresholds split minimal vs
    gross spatial-arrangement error; ``cut_score`` is the decision
    threshold (total below it flags impairment).
    """

    eps1_deg: float = 15.0
    eps2_deg: float = 45.0
    digit_minimal_err_deg: float = 22.5
    digit_gross_err_deg: float = 45.0
    face_distortion_ecc: float = 0.6
    face_gap_deg: float = 45.0
    size_ratio_max: float = 0.9
    cut_score: int = 8

    def __post_init__(self):
        if not (0 < self.eps1_deg < self.eps2_deg <= 180):
            raise ValueError("need 0 < eps1_deg < eps2_deg <= 180")
        if not (0 <= self.cut_score <= 10):
            raise ValueError("cut_score must be in [0, 10]")


DEFAULT_PARAMS = RouleauParams()

# Grid ranges searched by fit_params; anything absent stays at its default.
DEFAULT_GRID: Mapping[str, Sequence] = {
    "eps1_deg": (10.0, 15.0, 20.0),
    "eps2_deg": (30.0, 45.0, 60.0),
    "digit_minimal_err_deg": (15.0, 22.5, 30.0),
    "face_distortion_ecc": (0.45, 0.6),
}

MIN_DIGITS_FOR_POINTS = 3  # fewer drawn digits than this is "poor representation"


@dataclass(frozen=True)
class RouleauScore:
    face_pts: int
    numbers_pts: int
    hands_pts: int
    total: int
    rationale: tuple

    def __post_init__(self):
        if self.total != self.face_pts + self.numbers_pts + self.hands_pts:
            raise ValueError("total must equal the sum of the three items")


def _k(clock: str, suffix: str) -> str:
    if clock not in ("cmd", "copy"):
        raise ValueError("clock must be 'cmd' or 'copy'")
    return f"{clock}_{suffix}"


def score_face(fv: Mapping[str, float], p: RouleauParams, clock: str = "cmd") -> tuple:
    """Clockface integrity, 0-2 points, with a one-line rationale."""
    ecc = fv[_k(clock, "ellipse_eccentricity")]
    gap = fv[_k(clock, "clockface_gap_deg")]
    if is_missing(gap):
        return 0, "face: absent"
    ecc_ok = (not is_missing(ecc)) and ecc <= p.face_distortion_ecc
    gap_ok = gap <= p.face_gap_deg
    if ecc_ok and gap_ok:
        return 2, f"face: eccentricity and gap within limits (gap {gap:.0f} deg)"
    if not ecc_ok and not gap_ok and gap > 180.0:
        return 0, f"face: grossly distorted and mostly open (gap {gap:.0f} deg)"
    return 1, "face: incomplete or distorted"


def score_numbers(fv: Mapping[str, float], p: RouleauParams, clock: str = "cmd") -> tuple:
    """Presence and sequencing of the numbers, 0-4 points."""
    present = int(fv[_k(clock, "digits_present_count")])
    repeated = fv[_k(clock, "digits_repeated_count")] > 0
    missing = fv[_k(clock, "digits_missing_count")] > 0
    dev = fv[_k(clock, "digit_max_angle_dev_deg")]
    in_order = fv[_k(clock, "digits_in_order")] >= 1.0

    if present < MIN_DIGITS_FOR_POINTS:
        return 0, f"numbers: only {present} digits drawn"
    if not missing and not repeated:
        if in_order and dev <= p.digit_minimal_err_deg:
            return 4, "numbers: all present, ordered, placement within minimal error"
        if in_order and dev <= p.digit_gross_err_deg:
            return 3, f"numbers: all present and ordered but placement off by {dev:.0f} deg"
        return 2, "numbers: all present but gross layout error"
    gross = (not is_missing(dev) and dev > p.digit_gross_err_deg)
    if gross:
        return 1, "numbers: missing/added digits with gross distortion"
    return 2, "numbers: missing/added digits, remaining layout acceptable"


def score_hands(fv: Mapping[str, float], p: RouleauParams, clock: str = "cmd") -> tuple:
    """Presence and placement of the hands, 0-4 points."""
    hour = fv[_k(clock, "hour_hand_present")] >= 1.0
    minute = fv[_k(clock, "minute_hand_present")] >= 1.0
    if not hour and not minute:
        return 0, "hands: none drawn"
    if hour != minute:
        return 1, "hands: only one hand"
    if fv[_k(clock, "hand_stroke_count")] > 2 and fv[_k(clock, "hand_direction_count")] > 2:
        return 0, "hands: perseveration (extra hand strokes in extra directions)"
    eh = fv[_k(clock, "hour_hand_angle_err_deg")]
    em = fv[_k(clock, "minute_hand_angle_err_deg")]
    if max(eh, em) > p.eps2_deg:
        return 2, f"hands: major pointing error ({max(eh, em):.0f} deg)"
    ratio = fv[_k(clock, "hand_size_ratio")]
    size_ok = (not is_missing(ratio)) and ratio <= p.size_ratio_max
    if eh <= p.eps1_deg and em <= p.eps1_deg and size_ok:
        return 4, "hands: correct position, size difference respected"
    slight = sum(1 for e in (eh, em) if p.eps1_deg < e <= p.eps2_deg)
    if slight <= 1:
        return 3, "hands: slight placement error or size difference absent"
    return 2, "hands: both hands noticeably out of course"


def rouleau_total(fv: Mapping[str, float], p: RouleauParams = DEFAULT_PARAMS, clock: str = "cmd") -> RouleauScore:
    f_pts, f_why = score_face(fv, p, clock)
    n_pts, n_why = score_numbers(fv, p, clock)
    h_pts, h_why = score_hands(fv, p, clock)
    return RouleauScore(f_pts, n_pts, h_pts, f_pts + n_pts + h_pts, (f_why, n_why, h_why))


def classify(score: RouleauScore, p: RouleauParams = DEFAULT_PARAMS) -> str:
    """'impaired' when the total falls below the cut score, else 'healthy'."""
    return "impaired" if score.total < p.cut_score else "healthy"


def fit_params(
    examples: Sequence,
    grid: Optional[Mapping[str, Sequence]] = None,
    clock: str = "cmd",
) -> RouleauParams:
    """Grid-search thresholds maximizing training AUC of the negated total.

    ``examples`` is a sequence of ``(feature_vector, y)`` with y = +1 for
    the impaired class.  Ties prefer the smallest ``(eps1, eps2)`` pair,
    then earlier grid order on the remaining fields.
    """
    ys = [y for _, y in examples]
    if len(set(ys)) < 2:
        raise ValueError("fit_params needs both classes in the training set")
    grid = DEFAULT_GRID if grid is None else grid

    field_names = [f.name for f in fields(RouleauParams)]
    # eps1/eps2 lead the dataclass field order, so the product below is
    # already sorted by (eps1, eps2, ...) as the tie-break demands.
    axes = []
    for name in field_names:
        values = grid.get(name)
        if values is None:
            axes.append((getattr(DEFAULT_PARAMS, name),))
        else:
            axes.append(tuple(sorted(values)))

    labels = ys
    best = None
    for combo in itertools.product(*axes):
        kwargs = dict(zip(field_names, combo))
        if not (0 < kwargs["eps1_deg"] < kwargs["eps2_deg"] <= 180):
            continue
        params = RouleauParams(**kwargs)
        scores = [-rouleau_total(fv, params, clock).total for fv, _ in examples]
        a = auc(scores, labels)
        if best is None or a > best[0]:
            best = (a, params)
    if best is None:
        raise ValueError("grid contained no valid (eps1, eps2) combination")
    return best[1]


def serialize_params(p: RouleauParams) -> str:
    lines = [f"{f.name}={getattr(p, f.name)}" for f in fields(RouleauParams)]
    return "\n".join(lines) + "\n"


def parse_params(text: str) -> RouleauParams:
    known = {f.name: f for f in fields(RouleauParams)}
    kwargs = {}
    for i, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"params line {i}: expected key=value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in known:
            raise ValueError(f"params line {i}: unknown parameter '{key}'")
        kwargs[key] = int(value) if key == "cut_score" else float(value)
    return replace(DEFAULT_PARAMS, **kwargs)
