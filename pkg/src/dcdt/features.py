"""Geometric and temporal feature battery for clock tests.

Angle convention: clockwise from 12 o'clock, measured about the clock
center (the ellipse fit of the clockface, falling back to the clockface
centroid, then to the centroid of all non-noise ink).  Digit d's ideal
position is ``30*d`` degrees; the hands target 11:10 (hour 335, minute 60).

Feature values live in plain ``{name: float}`` dictionaries.  Missing
values (geometry that cannot be computed because the symbol is absent or
degenerate) are NaN; :func:`binarize` resolves them to each predicate's
abnormal pole so downstream scoring sheets are total functions.

The catalog is declared data.  Each record is
``name|clock|kind|deps|simplest|cutpoint`` where ``cutpoint`` states the
feature's abnormal condition: for numeric parents of a derived predicate
``>X`` or ``<X`` (the predicate fires, value 1, when the condition holds;
a missing parent counts as firing); for native binary predicates ``=0``
or ``=1`` (the value the predicate takes when its inputs are absent).
Understandability weights ``u`` are not stored; they are recomputed from
the dependency tree: primitives get 1, derived features 1 plus the
largest weight among their dependencies.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np

from .stroke_model import (
    HOUR_HAND_TARGET_DEG,
    MINUTE_HAND_TARGET_DEG,
    ClockDrawing,
    ClockTest,
    Stroke,
    SymbolKind,
)

ANCHOR_DIGITS = (12, 3, 6, 9)
NON_ANCHOR_DIGITS = (1, 2, 4, 5, 7, 8, 10, 11)
MINUTE_AT_10_TOL_DEG = 15.0       # "points to digit 10" = within half a digit sector of 300
HAND_DIRECTION_CLUSTER_DEG = 15.0  # hand strokes within this angle count as one direction

MISSING = float("nan")


def is_missing(value: float) -> bool:
    return isinstance(value, float) and math.isnan(value)


class DegenerateGeometryError(ValueError):
    """Point set too small or too flat for the requested geometric fit."""


class CatalogError(ValueError):
    """Catalog file violates its contract (cycles, bad refs, bad records)."""


def clockwise_angle_deg(dx, dy):
    """Angle of the vector (dx, dy), clockwise from 12 o'clock, in [0, 360)."""
    return np.degrees(np.arctan2(dx, dy)) % 360.0


def circular_diff_deg(a: float, b: float) -> float:
    """Smallest absolute angular difference, in [0, 180]."""
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


# ---------------------------------------------------------------------------
# Ellipse fitting (direct least-squares conic fit with ellipse constraint)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EllipseFit:
    center_x: float
    center_y: float
    semi_major: float
    semi_minor: float
    orientation_deg: float
    eccentricity: float
    residual_rms: float


def fit_ellipse(points) -> EllipseFit:
    """Fit an ellipse to 2-D points by the stabilized direct conic method.

    Data are centered and scaled before building the scatter matrices,
    which keeps an exact circle's fitted eccentricity at the 1e-7 level.
    Raises :class:`DegenerateGeometryError` for fewer than 6 points,
    (near-)collinear input, or when no ellipse solution exists.
    """
    P = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = P.shape[0]
    if n < 6:
        raise DegenerateGeometryError(f"ellipse fit needs >= 6 points, got {n}")
    mean = P.mean(axis=0)
    Q = P - mean
    sv = np.linalg.svd(Q, compute_uv=False)
    if sv[0] <= 0 or sv[1] <= 1e-9 * sv[0]:
        raise DegenerateGeometryError("ellipse fit needs non-collinear points")
    scale = math.sqrt(float((Q**2).sum(axis=1).mean()))
    U = Q / scale
    x, y = U[:, 0], U[:, 1]

    D1 = np.column_stack([x * x, x * y, y * y])
    D2 = np.column_stack([x, y, np.ones_like(x)])
    S1 = D1.T @ D1
    S2 = D1.T @ D2
    S3 = D2.T @ D2
    T = -np.linalg.solve(S3, S2.T)
    C1_inv = np.array([[0.0, 0.0, 0.5], [0.0, -1.0, 0.0], [0.5, 0.0, 0.0]])
    M = C1_inv @ (S1 + S2 @ T)

    eigvals, eigvecs = np.linalg.eig(M)
    best = None
    for k in range(3):
        if abs(eigvals[k].imag) > 1e-8:
            continue
        v = np.real(eigvecs[:, k])
        cond = 4.0 * v[0] * v[2] - v[1] ** 2
        if cond > 0 and (best is None or cond > best[0]):
            best = (cond, v)
    if best is None:
        raise DegenerateGeometryError("no ellipse solution for this point set")
    a1 = best[1]
    a2 = T @ a1
    A, B, C = a1
    D, E, F = a2

    den = B * B - 4.0 * A * C
    if den >= 0:
        raise DegenerateGeometryError("conic solution is not an ellipse")
    cx = (2.0 * C * D - B * E) / den
    cy = (2.0 * A * E - B * D) / den
    Fc = A * cx * cx + B * cx * cy + C * cy * cy + D * cx + E * cy + F
    M2 = np.array([[A, B / 2.0], [B / 2.0, C]])
    lam, vecs = np.linalg.eigh(M2)
    with np.errstate(invalid="ignore"):
        semis = np.sqrt(-Fc / lam)
    if not np.all(np.isfinite(semis)) or np.any(semis <= 0):
        raise DegenerateGeometryError("degenerate ellipse axes")
    # which eigenvalue owns the major axis depends on the conic's overall
    # sign, so order by the resulting semi-axes
    major_idx = int(np.argmax(semis))
    semi_major = float(semis[major_idx] * scale)
    semi_minor = float(semis[1 - major_idx] * scale)
    major_vec = vecs[:, major_idx]
    orientation = math.degrees(math.atan2(major_vec[1], major_vec[0])) % 180.0
    ecc = math.sqrt(max(0.0, 1.0 - (semi_minor / semi_major) ** 2))

    vals = A * x * x + B * x * y + C * y * y + D * x + E * y + F
    gx = 2.0 * A * x + B * y + D
    gy = B * x + 2.0 * C * y + E
    gnorm = np.hypot(gx, gy)
    gnorm[gnorm == 0] = 1.0
    rms = float(np.sqrt(np.mean((vals / gnorm) ** 2)) * scale)

    return EllipseFit(
        center_x=float(mean[0] + scale * cx),
        center_y=float(mean[1] + scale * cy),
        semi_major=semi_major,
        semi_minor=semi_minor,
        orientation_deg=orientation,
        eccentricity=ecc,
        residual_rms=rms,
    )


# ---------------------------------------------------------------------------
# Clockface geometry
# ---------------------------------------------------------------------------

def face_geometry(drawing: ClockDrawing) -> tuple:
    """(center, EllipseFit or None) for a drawing.

    Center falls back from ellipse fit to clockface centroid to the
    centroid of all non-noise ink to the origin, in that order.
    """
    face = drawing.of_kind(SymbolKind.CLOCKFACE)
    if face:
        pts = np.vstack([s.xy for s in face])
        if pts.shape[0] >= 6:
            try:
                fit = fit_ellipse(pts)
                return (fit.center_x, fit.center_y), fit
            except DegenerateGeometryError:
                pass
        c = pts.mean(axis=0)
        return (float(c[0]), float(c[1])), None
    other = [s.xy for s in drawing if s.label.kind is not SymbolKind.NOISE]
    if other:
        c = np.vstack(other).mean(axis=0)
        return (float(c[0]), float(c[1])), None
    return (0.0, 0.0), None


def largest_gap_of_angles(angles_deg) -> float:
    """Largest empty arc between the given angles, in degrees, in [0, 360]."""
    a = np.sort(np.asarray(angles_deg, dtype=np.float64) % 360.0)
    if a.size == 0:
        raise DegenerateGeometryError("no angles")
    if a.size == 1:
        return 360.0
    gaps = np.diff(a)
    wrap = a[0] + 360.0 - a[-1]
    return float(max(gaps.max(), wrap))


def largest_angular_gap(face_strokes: Sequence[Stroke], center: Optional[tuple] = None) -> float:
    """Largest empty arc of clockface point angles about the face center."""
    if not face_strokes:
        raise DegenerateGeometryError("no clockface strokes")
    pts = np.vstack([s.xy for s in face_strokes])
    if center is None:
        if pts.shape[0] >= 6:
            try:
                fit = fit_ellipse(pts)
                center = (fit.center_x, fit.center_y)
            except DegenerateGeometryError:
                center = tuple(pts.mean(axis=0))
        else:
            center = tuple(pts.mean(axis=0))
    ang = clockwise_angle_deg(pts[:, 0] - center[0], pts[:, 1] - center[1])
    return largest_gap_of_angles(ang)


def clockface_closure(face_strokes: Sequence[Stroke], center: Optional[tuple] = None) -> tuple:
    """(gap_cm, gap_deg) between the face's first and last drawn points."""
    if not face_strokes:
        raise DegenerateGeometryError("no clockface strokes")
    ordered = sorted(face_strokes, key=lambda s: s.start_t)
    p0 = ordered[0].xy[0]
    p1 = ordered[-1].xy[-1]
    dist = float(np.hypot(p1[0] - p0[0], p1[1] - p0[1]))
    if center is None:
        pts = np.vstack([s.xy for s in face_strokes])
        if pts.shape[0] >= 6:
            try:
                fit = fit_ellipse(pts)
                center = (fit.center_x, fit.center_y)
            except DegenerateGeometryError:
                center = tuple(pts.mean(axis=0))
        else:
            center = tuple(pts.mean(axis=0))
    a0 = float(clockwise_angle_deg(p0[0] - center[0], p0[1] - center[1]))
    a1 = float(clockwise_angle_deg(p1[0] - center[0], p1[1] - center[1]))
    return dist, circular_diff_deg(a0, a1)


# ---------------------------------------------------------------------------
# Digit census
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DigitInstance:
    stroke_ids: tuple
    bbox: tuple          # (x0, y0, x1, y1)
    start_t: int
    end_t: int


@dataclass(frozen=True)
class DigitRecord:
    digit: int
    present: bool
    count: int
    angle_deg: float     # centroid angle about center; NaN when absent
    bbox_w: float
    bbox_h: float
    instances: tuple


def _stroke_bbox(s: Stroke) -> tuple:
    return (
        float(s.xy[:, 0].min()),
        float(s.xy[:, 1].min()),
        float(s.xy[:, 0].max()),
        float(s.xy[:, 1].max()),
    )


def _boxes_touch(b1: tuple, b2: tuple, pad: float) -> bool:
    return (
        b1[0] - pad <= b2[2]
        and b2[0] - pad <= b1[2]
        and b1[1] - pad <= b2[3]
        and b2[1] - pad <= b1[3]
    )


def _cluster_strokes(strokes: Sequence[Stroke], pad: float = 0.2) -> list:
    """Connected components of strokes whose padded bounding boxes touch."""
    n = len(strokes)
    boxes = [_stroke_bbox(s) for s in strokes]
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if _boxes_touch(boxes[i], boxes[j], pad):
                parent[find(i)] = find(j)
    comps: dict = {}
    for i in range(n):
        comps.setdefault(find(i), []).append(i)
    return [sorted(v) for v in sorted(comps.values(), key=lambda v: strokes[v[0]].start_t)]


def digit_census(drawing: ClockDrawing, center: Optional[tuple] = None) -> dict:
    """Per nominal digit 1..12: presence, instance count, centroid angle, bbox."""
    if center is None:
        center, _ = face_geometry(drawing)
    records = {}
    for d in range(1, 13):
        strokes = sorted(
            (s for s in drawing if s.label.kind is SymbolKind.DIGIT and s.label.digit_value == d),
            key=lambda s: s.start_t,
        )
        if not strokes:
            records[d] = DigitRecord(d, False, 0, MISSING, MISSING, MISSING, ())
            continue
        instances = []
        for comp in _cluster_strokes(strokes):
            members = [strokes[i] for i in comp]
            xs = np.vstack([m.xy for m in members])
            instances.append(
                DigitInstance(
                    stroke_ids=tuple(m.id for m in members),
                    bbox=(
                        float(xs[:, 0].min()),
                        float(xs[:, 1].min()),
                        float(xs[:, 0].max()),
                        float(xs[:, 1].max()),
                    ),
                    start_t=min(m.start_t for m in members),
                    end_t=max(m.end_t for m in members),
                )
            )
        allpts = np.vstack([s.xy for s in strokes])
        cxy = allpts.mean(axis=0)
        ang = float(clockwise_angle_deg(cxy[0] - center[0], cxy[1] - center[1]))
        ws = [inst.bbox[2] - inst.bbox[0] for inst in instances]
        hs = [inst.bbox[3] - inst.bbox[1] for inst in instances]
        records[d] = DigitRecord(
            d, True, len(instances), ang, float(np.mean(ws)), float(np.mean(hs)), tuple(instances)
        )
    return records


def digit_eighth_correct(census: Mapping[int, DigitRecord]) -> dict:
    """Per non-anchor digit: does its centroid sit in its 45-degree sector?

    Sector boundaries run at 0, 45, ..., 315 degrees; a missing digit is
    counted as out of sector.
    """
    out = {}
    for d in NON_ANCHOR_DIGITS:
        rec = census[d]
        if not rec.present or is_missing(rec.angle_deg):
            out[d] = False
            continue
        target_sector = int((30.0 * d) % 360.0 // 45.0)
        out[d] = int(rec.angle_deg % 360.0 // 45.0) == target_sector
    return out


def digit_order_correct(census: Mapping[int, DigitRecord]) -> bool:
    """All 12 digits present exactly once and in clockwise order from 12."""
    if any(census[d].count != 1 for d in range(1, 13)):
        return False
    base = census[12].angle_deg
    seq = sorted(range(1, 13), key=lambda d: ((census[d].angle_deg - base) % 360.0, d))
    return seq == [12, *range(1, 12)]


def digits_counterclockwise(census: Mapping[int, DigitRecord]) -> bool:
    """All 12 digits present exactly once but running counterclockwise."""
    if any(census[d].count != 1 for d in range(1, 13)):
        return False
    base = census[12].angle_deg
    seq = sorted(range(1, 13), key=lambda d: ((census[d].angle_deg - base) % 360.0, d))
    return seq == [12, *range(11, 0, -1)]


# ---------------------------------------------------------------------------
# Crossed-out digits
# ---------------------------------------------------------------------------

def _segments_cross_box(xy: np.ndarray, box: tuple) -> bool:
    x0, y0, x1, y1 = box
    inside = (xy[:, 0] >= x0) & (xy[:, 0] <= x1) & (xy[:, 1] >= y0) & (xy[:, 1] <= y1)
    if inside.any():
        return True
    edges = (
        ((x0, y0), (x1, y0)),
        ((x1, y0), (x1, y1)),
        ((x1, y1), (x0, y1)),
        ((x0, y1), (x0, y0)),
    )

    def ccw(a, b, c):
        return (c[1] - a[1]) * (b[0] - a[0]) - (b[1] - a[1]) * (c[0] - a[0])

    for k in range(len(xy) - 1):
        p, q = xy[k], xy[k + 1]
        for a, b in edges:
            d1 = ccw(p, q, a)
            d2 = ccw(p, q, b)
            d3 = ccw(a, b, p)
            d4 = ccw(a, b, q)
            if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
                return True
    return False


def crossed_out_count(drawing: ClockDrawing, census: Optional[Mapping[int, DigitRecord]] = None) -> int:
    """Digit instances struck through by a later stroke.

    A digit instance counts as crossed out when some stroke drawn after it
    has a bounding box overlapping at least half of the instance's box and
    a path that actually enters the box.
    """
    if census is None:
        census = digit_census(drawing)
    strokes = list(drawing)
    boxes = {s.id: _stroke_bbox(s) for s in strokes}
    crossed = 0
    for rec in census.values():
        for inst in rec.instances:
            bx0, by0, bx1, by1 = inst.bbox
            area = (bx1 - bx0) * (by1 - by0)
            if area <= 0:
                continue
            for s in strokes:
                if s.id in inst.stroke_ids or s.start_t <= inst.end_t:
                    continue
                ox0, oy0, ox1, oy1 = boxes[s.id]
                ow = min(bx1, ox1) - max(bx0, ox0)
                oh = min(by1, oy1) - max(by0, oy0)
                if ow <= 0 or oh <= 0 or ow * oh < 0.5 * area:
                    continue
                if _segments_cross_box(s.xy, inst.bbox):
                    crossed += 1
                    break
    return crossed


# ---------------------------------------------------------------------------
# Hands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HandInfo:
    present: bool
    stroke_count: int
    angle_deg: float
    reach_cm: float
    angle_error_deg: float


@dataclass(frozen=True)
class HandMetrics:
    hour: HandInfo
    minute: HandInfo
    size_ratio: float
    hand_stroke_count: int
    hand_direction_count: int
    arrowhead_hour: bool
    arrowhead_minute: bool
    minute_points_to_10: bool


def _hand_stroke_direction(s: Stroke, center) -> tuple:
    """(angle_deg, reach_cm) via the stroke point farthest from center."""
    dx = s.xy[:, 0] - center[0]
    dy = s.xy[:, 1] - center[1]
    dist = np.hypot(dx, dy)
    k = int(np.argmax(dist))
    return float(clockwise_angle_deg(dx[k], dy[k])), float(dist[k])


def _direction_cluster_count(angles: Sequence[float], tol: float = HAND_DIRECTION_CLUSTER_DEG) -> int:
    if not angles:
        return 0
    a = np.sort(np.asarray(angles, dtype=np.float64) % 360.0)
    if a.size == 1:
        return 1
    gaps = np.append(np.diff(a), a[0] + 360.0 - a[-1])
    start = (int(np.argmax(gaps)) + 1) % a.size
    rolled = np.roll(a, -start)
    rolled = np.where(rolled < rolled[0], rolled + 360.0, rolled)
    clusters = 1
    anchor = rolled[0]
    for v in rolled[1:]:
        if v - anchor > tol:
            clusters += 1
            anchor = v
    return clusters


def hand_metrics(drawing: ClockDrawing, center: Optional[tuple] = None) -> HandMetrics:
    if center is None:
        center, _ = face_geometry(drawing)

    infos = {}
    per_stroke_angles = []
    for kind, target in (
        (SymbolKind.HOUR_HAND, HOUR_HAND_TARGET_DEG),
        (SymbolKind.MINUTE_HAND, MINUTE_HAND_TARGET_DEG),
    ):
        strokes = sorted(drawing.of_kind(kind), key=lambda s: s.start_t)
        if not strokes:
            infos[kind] = HandInfo(False, 0, MISSING, MISSING, MISSING)
            continue
        dirs = [_hand_stroke_direction(s, center) for s in strokes]
        per_stroke_angles.extend(a for a, _ in dirs)
        angle, reach = max(dirs, key=lambda ar: ar[1])
        err = circular_diff_deg(angle, target)
        infos[kind] = HandInfo(True, len(strokes), angle, reach, err)

    hour = infos[SymbolKind.HOUR_HAND]
    minute = infos[SymbolKind.MINUTE_HAND]
    if hour.present and minute.present and minute.reach_cm > 0:
        ratio = hour.reach_cm / minute.reach_cm
    else:
        ratio = MISSING
    points10 = bool(
        minute.present and circular_diff_deg(minute.angle_deg, 300.0) <= MINUTE_AT_10_TOL_DEG
    )
    return HandMetrics(
        hour=hour,
        minute=minute,
        size_ratio=ratio,
        hand_stroke_count=hour.stroke_count + minute.stroke_count,
        hand_direction_count=_direction_cluster_count(per_stroke_angles),
        arrowhead_hour=bool(drawing.of_kind(SymbolKind.ARROWHEAD_HOUR)),
        arrowhead_minute=bool(drawing.of_kind(SymbolKind.ARROWHEAD_MINUTE)),
        minute_points_to_10=points10,
    )


# ---------------------------------------------------------------------------
# Timing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimingStats:
    time_total_ms: float
    ink_time_ms: float
    ink_length_cm: float
    stroke_count: int
    noise_stroke_count: int
    mean_latency_ms: float
    speed_overall_cm_s: float
    speed_by_class: Mapping[SymbolKind, float]


@dataclass(frozen=True)
class TestTiming:
    command: TimingStats
    copy: TimingStats
    time_total_both_ms: float
    ink_length_both_cm: float
    clock_gap_ms: float


def _drawing_timing(drawing: ClockDrawing) -> TimingStats:
    from .stroke_model import stroke_duration, stroke_length

    strokes = sorted(drawing, key=lambda s: s.start_t)
    noise_count = sum(1 for s in strokes if s.label.kind is SymbolKind.NOISE)
    if not strokes:
        return TimingStats(MISSING, MISSING, 0.0, 0, 0, MISSING, MISSING, {})

    total = float(strokes[-1].end_t - strokes[0].start_t)
    ink_time = float(sum(stroke_duration(s) for s in strokes))
    ink_len = float(sum(stroke_length(s) for s in strokes))

    # Symbol-class episodes: maximal time-ordered runs of one symbol kind.
    episodes = []
    for s in strokes:
        if episodes and episodes[-1][0] is s.label.kind:
            episodes[-1][2] = s.end_t
        else:
            episodes.append([s.label.kind, s.start_t, s.end_t])
    if len(episodes) >= 2:
        lat = [nxt[1] - prev[2] for prev, nxt in zip(episodes, episodes[1:])]
        mean_latency = float(np.mean(lat))
    else:
        mean_latency = MISSING

    by_class: dict = {}
    for kind in SymbolKind:
        members = [s for s in strokes if s.label.kind is kind]
        if not members:
            continue
        clen = sum(stroke_length(s) for s in members)
        ctime = sum(stroke_duration(s) for s in members)
        by_class[kind] = (clen / (ctime / 1000.0)) if ctime > 0 else MISSING

    speed = (ink_len / (ink_time / 1000.0)) if ink_time > 0 else MISSING
    return TimingStats(
        time_total_ms=total,
        ink_time_ms=ink_time,
        ink_length_cm=ink_len,
        stroke_count=len(strokes),
        noise_stroke_count=noise_count,
        mean_latency_ms=mean_latency,
        speed_overall_cm_s=speed,
        speed_by_class=by_class,
    )


def timing_features(test: ClockTest) -> TestTiming:
    cmd = _drawing_timing(test.command)
    cpy = _drawing_timing(test.copy)
    both = cmd.time_total_ms + cpy.time_total_ms
    ink_both = cmd.ink_length_cm + cpy.ink_length_cm
    if len(test.command) and len(test.copy):
        cmd_end = max(s.end_t for s in test.command)
        cpy_start = min(s.start_t for s in test.copy)
        gap = float(cpy_start - cmd_end)
    else:
        gap = MISSING
    return TestTiming(cmd, cpy, both, ink_both, gap)


# ---------------------------------------------------------------------------
# Feature catalog
# ---------------------------------------------------------------------------

class FeatureKind(enum.Enum):
    NUMERIC = "numeric"
    BINARY = "binary"


class FeatureClock(enum.Enum):
    COMMAND = "command"
    COPY = "copy"
    BOTH = "both"


@dataclass(frozen=True)
class Cutpoint:
    op: str      # '>', '<' threshold a numeric parent; '=' names a binary pole
    value: float

    def fires(self, x: float) -> bool:
        if self.op == ">":
            return x > self.value
        if self.op == "<":
            return x < self.value
        raise CatalogError(f"cutpoint '={self.value}' cannot threshold a numeric value")


@dataclass(frozen=True)
class FeatureDef:
    name: str
    clock: FeatureClock
    kind: FeatureKind
    deps: tuple
    simplest: bool
    cutpoint: Optional[Cutpoint]
    u: int = 0

    @property
    def abnormal_value(self) -> float:
        """Value a binary feature takes when its inputs are missing."""
        if self.cutpoint is not None and self.cutpoint.op == "=":
            return self.cutpoint.value
        return 1.0


def assign_heights(defs: Sequence[FeatureDef]) -> list:
    """Recompute understandability weights from the dependency tree.

    Primitive features weigh 1; a derived feature weighs one more than
    its heaviest dependency, biasing selection toward directly measured
    quantities.  Raises :class:`CatalogError` on unresolved or cyclic
    dependencies.
    """
    by_name = {d.name: d for d in defs}
    if len(by_name) != len(defs):
        raise CatalogError("duplicate feature names in catalog")
    for d in defs:
        for dep in d.deps:
            if dep not in by_name:
                raise CatalogError(f"feature '{d.name}' depends on unknown '{dep}'")
    heights: dict = {}
    visiting: set = set()

    def height(name: str) -> int:
        if name in heights:
            return heights[name]
        if name in visiting:
            raise CatalogError(f"dependency cycle through feature '{name}'")
        visiting.add(name)
        d = by_name[name]
        h = 1 if not d.deps else 1 + max(height(dep) for dep in d.deps)
        visiting.discard(name)
        heights[name] = h
        return h

    return [replace(d, u=height(d.name)) for d in defs]


class FeatureCatalog:
    """Ordered, validated collection of feature definitions."""

    def __init__(self, defs: Sequence[FeatureDef]):
        defs = assign_heights(list(defs))
        if not any(d.simplest for d in defs):
            raise CatalogError("catalog must flag a nonempty Simplest subset")
        for d in defs:
            if d.kind is FeatureKind.BINARY and d.cutpoint is None:
                raise CatalogError(f"binary feature '{d.name}' needs a cutpoint record")
            if d.kind is FeatureKind.BINARY and d.cutpoint.op in "<>" and len(d.deps) != 1:
                raise CatalogError(f"thresholded feature '{d.name}' needs exactly one dependency")
        self.defs = tuple(defs)
        self._by_name = {d.name: d for d in defs}

    def __iter__(self) -> Iterator[FeatureDef]:
        return iter(self.defs)

    def __len__(self) -> int:
        return len(self.defs)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def get(self, name: str) -> FeatureDef:
        try:
            return self._by_name[name]
        except KeyError:
            raise CatalogError(f"unknown feature '{name}'") from None

    def select(self, feature_set: str = "all") -> tuple:
        if feature_set == "all":
            return self.defs
        if feature_set == "simplest":
            return tuple(d for d in self.defs if d.simplest)
        raise ValueError(f"feature_set must be 'all' or 'simplest', got {feature_set!r}")

    def names(self, feature_set: str = "all") -> tuple:
        return tuple(d.name for d in self.select(feature_set))

    def binary_names(self, feature_set: str = "all") -> tuple:
        return tuple(d.name for d in self.select(feature_set) if d.kind is FeatureKind.BINARY)

    def u_weights(self) -> dict:
        return {d.name: d.u for d in self.defs}


def parse_catalog(text: str) -> FeatureCatalog:
    """Parse ``name|clock|kind|deps|simplest|cutpoint`` records."""
    defs = []
    for i, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("|")
        if len(parts) != 6:
            raise CatalogError(f"catalog line {i}: expected 6 '|'-separated fields")
        name, clock_s, kind_s, deps_s, simplest_s, cut_s = (p.strip() for p in parts)
        try:
            clock = FeatureClock(clock_s)
            kind = FeatureKind(kind_s)
        except ValueError as exc:
            raise CatalogError(f"catalog line {i}: {exc}") from None
        deps = tuple(d.strip() for d in deps_s.split(",") if d.strip())
        if simplest_s not in ("0", "1"):
            raise CatalogError(f"catalog line {i}: simplest flag must be 0 or 1")
        cutpoint = None
        if cut_s:
            op = cut_s[0]
            if op not in "<>=":
                raise CatalogError(f"catalog line {i}: cutpoint must start with <, > or =")
            try:
                cutpoint = Cutpoint(op, float(cut_s[1:]))
            except ValueError:
                raise CatalogError(f"catalog line {i}: bad cutpoint value") from None
        defs.append(FeatureDef(name, clock, kind, deps, simplest_s == "1", cutpoint))
    return FeatureCatalog(defs)


def serialize_catalog(catalog: FeatureCatalog) -> str:
    lines = []
    for d in catalog:
        cut = ""
        if d.cutpoint is not None:
            v = d.cutpoint.value
            cut = f"{d.cutpoint.op}{int(v) if v == int(v) else v}"
        lines.append(
            f"{d.name}|{d.clock.value}|{d.kind.value}|{','.join(d.deps)}|{int(d.simplest)}|{cut}"
        )
    return "\n".join(lines) + "\n"


@lru_cache(maxsize=1)
def default_catalog() -> FeatureCatalog:
    text = resources.files("dcdt").joinpath("data/catalog.txt").read_text(encoding="utf-8")
    return parse_catalog(text)


# Human wording used by the scoring-sheet renderer.  Keys not listed fall
# back to the raw feature name.
_SHEET_WORDING = {
    "digits_in_order": "All digits are present, not repeated, and in the correct angular order",
    "hour_hand_present": "Hour hand is present",
    "minute_hand_present": "Minute hand is present",
    "nonanchor_eighth_ok": "All of the non-anchor digits are in the correct eighth",
    "crossed_out_present": "Crossed-out digits present",
    "two_hands_missing": "Two hands not present",
    "over_60s": "More than 60 seconds to draw",
    "minute_points_10": "Minute hand points to digit 10",
    "digits_missing": "One or more digits are missing",
    "digits_repeated": "Numbers are repeated",
    "digits_ccw": "Numbers placed in counterclockwise direction",
    "arrowheads_present": "Hands have arrowheads",
    "noise_present": "Noise strokes present",
    "ecc_high": "Clockface is strongly elliptical",
    "gap_large": "Large gap in the clockface",
    "closure_open": "Clockface is not closed",
    "hand_err_high": "Large pointing error on a hand",
    "size_ratio_bad": "Hand size difference not respected",
    "slow_speed": "Slow drawing speed",
    "small_face": "Small clockface",
    "long_latency": "Long pauses between components",
    "digit_dev_high": "Digits far from their expected positions",
}

SHEET_DESCRIPTIONS = {}
for _prefix in ("cmd", "copy"):
    for _suffix, _text in _SHEET_WORDING.items():
        SHEET_DESCRIPTIONS[f"{_prefix}_{_suffix}"] = _text
SHEET_DESCRIPTIONS["both_over_120s"] = "More than 120 seconds to draw both clocks"


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------

def _clock_values(prefix: str, drawing: ClockDrawing, timing: TimingStats) -> dict:
    center, fit = face_geometry(drawing)
    face = drawing.of_kind(SymbolKind.CLOCKFACE)
    census = digit_census(drawing, center)
    hands = hand_metrics(drawing, center)

    v = {}
    v[f"{prefix}_stroke_count"] = float(timing.stroke_count)
    v[f"{prefix}_noise_stroke_count"] = float(timing.noise_stroke_count)
    v[f"{prefix}_ink_length_cm"] = timing.ink_length_cm
    v[f"{prefix}_ink_time_ms"] = timing.ink_time_ms
    v[f"{prefix}_time_total_ms"] = timing.time_total_ms
    v[f"{prefix}_pen_speed_cm_s"] = timing.speed_overall_cm_s
    v[f"{prefix}_speed_clockface_cm_s"] = timing.speed_by_class.get(SymbolKind.CLOCKFACE, MISSING)
    v[f"{prefix}_speed_digits_cm_s"] = timing.speed_by_class.get(SymbolKind.DIGIT, MISSING)
    hand_speeds = [
        timing.speed_by_class[k]
        for k in (SymbolKind.HOUR_HAND, SymbolKind.MINUTE_HAND)
        if k in timing.speed_by_class and not is_missing(timing.speed_by_class[k])
    ]
    v[f"{prefix}_speed_hands_cm_s"] = float(np.mean(hand_speeds)) if hand_speeds else MISSING
    v[f"{prefix}_mean_latency_ms"] = timing.mean_latency_ms

    if fit is not None:
        v[f"{prefix}_ellipse_semi_major_cm"] = fit.semi_major
        v[f"{prefix}_ellipse_semi_minor_cm"] = fit.semi_minor
        v[f"{prefix}_ellipse_eccentricity"] = fit.eccentricity
    else:
        v[f"{prefix}_ellipse_semi_major_cm"] = MISSING
        v[f"{prefix}_ellipse_semi_minor_cm"] = MISSING
        v[f"{prefix}_ellipse_eccentricity"] = MISSING
    if face:
        v[f"{prefix}_clockface_gap_deg"] = largest_angular_gap(face, center)
        dist, adeg = clockface_closure(face, center)
        v[f"{prefix}_closure_dist_cm"] = dist
        v[f"{prefix}_closure_angle_deg"] = adeg
    else:
        v[f"{prefix}_clockface_gap_deg"] = MISSING
        v[f"{prefix}_closure_dist_cm"] = MISSING
        v[f"{prefix}_closure_angle_deg"] = MISSING

    present = [census[d] for d in range(1, 13) if census[d].present]
    v[f"{prefix}_digits_present_count"] = float(len(present))
    v[f"{prefix}_digits_missing_count"] = float(12 - len(present))
    v[f"{prefix}_digits_repeated_count"] = float(sum(1 for r in present if r.count >= 2))
    if present:
        devs = [circular_diff_deg(r.angle_deg, (30.0 * r.digit) % 360.0) for r in present]
        v[f"{prefix}_digit_max_angle_dev_deg"] = float(max(devs))
        v[f"{prefix}_digit_mean_bbox_w_cm"] = float(np.mean([r.bbox_w for r in present]))
        v[f"{prefix}_digit_mean_bbox_h_cm"] = float(np.mean([r.bbox_h for r in present]))
    else:
        v[f"{prefix}_digit_max_angle_dev_deg"] = MISSING
        v[f"{prefix}_digit_mean_bbox_w_cm"] = MISSING
        v[f"{prefix}_digit_mean_bbox_h_cm"] = MISSING

    v[f"{prefix}_hour_hand_angle_err_deg"] = hands.hour.angle_error_deg
    v[f"{prefix}_minute_hand_angle_err_deg"] = hands.minute.angle_error_deg
    errs = [e for e in (hands.hour.angle_error_deg, hands.minute.angle_error_deg) if not is_missing(e)]
    v[f"{prefix}_hand_max_angle_err_deg"] = float(max(errs)) if errs else MISSING
    v[f"{prefix}_hand_size_ratio"] = hands.size_ratio
    v[f"{prefix}_hand_stroke_count"] = float(hands.hand_stroke_count)
    v[f"{prefix}_hand_direction_count"] = float(hands.hand_direction_count)
    v[f"{prefix}_crossed_out_count"] = float(crossed_out_count(drawing, census))

    eighth = digit_eighth_correct(census)
    v[f"{prefix}_digits_in_order"] = float(digit_order_correct(census))
    v[f"{prefix}_digits_ccw"] = float(digits_counterclockwise(census))
    v[f"{prefix}_hour_hand_present"] = float(hands.hour.present)
    v[f"{prefix}_minute_hand_present"] = float(hands.minute.present)
    v[f"{prefix}_two_hands_missing"] = float(not (hands.hour.present and hands.minute.present))
    v[f"{prefix}_minute_points_10"] = float(hands.minute_points_to_10)
    v[f"{prefix}_arrowheads_present"] = float(hands.arrowhead_hour or hands.arrowhead_minute)
    v[f"{prefix}_nonanchor_eighth_ok"] = float(all(eighth.values()))
    return v


def extract(test: ClockTest, catalog: Optional[FeatureCatalog] = None, feature_set: str = "all") -> dict:
    """Feature vector for one test over the requested catalog subset.

    Pure and deterministic; degenerate geometry surfaces as NaN entries
    that :func:`binarize` later resolves.
    """
    if catalog is None:
        catalog = default_catalog()
    timing = timing_features(test)
    vals = _clock_values("cmd", test.command, timing.command)
    vals.update(_clock_values("copy", test.copy, timing.copy))
    vals["time_total_both_ms"] = timing.time_total_both_ms
    vals["ink_length_both_cm"] = timing.ink_length_both_cm
    vals["clock_gap_ms"] = timing.clock_gap_ms

    out = {}
    for d in catalog.select(feature_set):
        if d.name in vals:
            out[d.name] = float(vals[d.name])
        elif d.kind is FeatureKind.BINARY and d.cutpoint is not None and d.cutpoint.op in "<>":
            parent = vals.get(d.deps[0], MISSING)
            out[d.name] = MISSING if is_missing(parent) else float(d.cutpoint.fires(parent))
        else:
            raise CatalogError(f"no extractor for catalog feature '{d.name}'")
    return out


def binarize(values: Mapping[str, float], catalog: Optional[FeatureCatalog] = None) -> dict:
    """Collapse a feature vector to the catalog's binary predicates.

    Binary features pass through (missing resolves to the abnormal pole);
    numeric features with a catalog cutpoint produce their predicate when
    the predicate itself was not already present.  Idempotent on vectors
    that are already binary.
    """
    if catalog is None:
        catalog = default_catalog()
    out = {}
    for d in catalog:
        if d.kind is not FeatureKind.BINARY:
            continue
        thresholded = d.cutpoint is not None and d.cutpoint.op in "<>"
        if thresholded and d.deps[0] in values:
            # the numeric parent is authoritative when present
            parent = values[d.deps[0]]
            out[d.name] = 1.0 if is_missing(parent) else float(d.cutpoint.fires(parent))
        elif d.name in values:
            x = values[d.name]
            out[d.name] = d.abnormal_value if is_missing(x) else float(x)
    return out
