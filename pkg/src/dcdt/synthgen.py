"""Seeded synthetic clock-test generator with impairment phenotype presets.

The generator exists to exercise the pipeline at desk scale, not to model
disease: phenotype presets bundle error rates (digit omissions/repetitions,
hand pointing errors, the minute-hand-on-10 confusion, cross-outs), drawing
kinematics (pen speed, pauses), and face geometry (eccentricity, angular
gap).  Preset values are invented calibration and must not be read as
clinically meaningful.

Everything is driven by numpy's PCG64 generator through SeedSequence
streams: ``generate_dataset`` derives one child stream per subject from
``(seed, group_index, subject_index)``, so any subset of subjects is
reproducible independently of the rest, and two runs with the same seed
are byte-identical after serialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .stroke_model import (
    GROUP_ORDER,
    HOUR_HAND_TARGET_DEG,
    MINUTE_HAND_TARGET_DEG,
    ClockDrawing,
    ClockKind,
    ClockTest,
    Group,
    Stroke,
    SymbolKind,
    SymbolLabel,
)

DIGIT_RING_FACTOR = 0.8       # digits sit at 0.8 * canvas radius
MINUTE_HAND_FACTOR = 0.65     # minute hand reach as fraction of canvas radius
HOUR_TO_MINUTE_RATIO = 0.5    # hour hand is half the minute hand by default
MINUTE_AT_10_DEG = 300.0      # angle of digit 10, the classic 11:10 error
SHORT_PAUSE_MEAN_MS = 90.0    # pause between strokes of the same symbol


@dataclass(frozen=True)
class PhenotypeParams:
    """Error-mode and kinematics bundle for one synthetic group."""

    group: Group
    digit_omission_prob: float = 0.0
    digit_repetition_prob: float = 0.0
    digit_angle_jitter_deg: float = 0.0
    hand_angle_error_deg: float = 0.0
    minute_to_10_error_prob: float = 0.0
    hand_omission_prob: float = 0.0
    crossed_out_digit_prob: float = 0.0
    draw_speed_cm_per_s: float = 3.0
    clockface_eccentricity: float = 0.0
    clockface_gap_deg: float = 0.0
    noise_stroke_rate: float = 0.0
    inter_symbol_latency_ms: float = 400.0
    drawing_scale: float = 1.0

    def __post_init__(self):
        for name in (
            "digit_omission_prob",
            "digit_repetition_prob",
            "minute_to_10_error_prob",
            "hand_omission_prob",
            "crossed_out_digit_prob",
        ):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0,1], got {v}")
        if self.digit_angle_jitter_deg < 0 or self.hand_angle_error_deg < 0:
            raise ValueError("angle jitter sigmas must be >= 0")
        if self.draw_speed_cm_per_s <= 0:
            raise ValueError("draw_speed_cm_per_s must be > 0")
        if not (0.0 <= self.clockface_eccentricity < 1.0):
            raise ValueError("clockface_eccentricity must be in [0,1)")
        if self.clockface_gap_deg < 0 or self.noise_stroke_rate < 0:
            raise ValueError("gap and noise rate must be >= 0")
        if self.inter_symbol_latency_ms < 0:
            raise ValueError("inter_symbol_latency_ms must be >= 0")
        if not (0.0 < self.drawing_scale <= 1.5):
            raise ValueError("drawing_scale must be in (0, 1.5]")


@dataclass(frozen=True)
class GeneratorConfig:
    counts: Mapping[Group, int]
    seed: int
    canvas_radius_cm: float = 4.0
    sample_period_ms: int = 13

    def __post_init__(self):
        if self.sample_period_ms <= 0:
            raise ValueError("sample_period_ms must be > 0")
        for g, n in self.counts.items():
            if n < 0:
                raise ValueError(f"count for {g.value} must be >= 0")


# Synthetic presets.  Separations are engineered, not clinical: HC is
# near-ideal; MID trips the digit/hand predicates a screening sheet can
# see by eye; VCD is spatially sloppy, slow, and pause-heavy; PD draws
# small and slow while making few symbolic errors, so its signal lives
# mostly in geometry and kinematics rather than in the by-eye predicates.
DEFAULT_PHENOTYPES: Mapping[Group, PhenotypeParams] = {
    Group.HC: PhenotypeParams(
        Group.HC,
        digit_omission_prob=0.01,
        digit_repetition_prob=0.01,
        digit_angle_jitter_deg=3.0,
        hand_angle_error_deg=4.0,
        minute_to_10_error_prob=0.005,
        hand_omission_prob=0.005,
        crossed_out_digit_prob=0.005,
        draw_speed_cm_per_s=3.0,
        clockface_eccentricity=0.15,
        clockface_gap_deg=8.0,
        noise_stroke_rate=0.05,
        inter_symbol_latency_ms=400.0,
    ),
    Group.MID: PhenotypeParams(
        Group.MID,
        digit_omission_prob=0.03,
        digit_repetition_prob=0.05,
        digit_angle_jitter_deg=4.5,
        hand_angle_error_deg=7.0,
        minute_to_10_error_prob=0.15,
        hand_omission_prob=0.04,
        crossed_out_digit_prob=0.06,
        draw_speed_cm_per_s=2.1,
        clockface_eccentricity=0.30,
        clockface_gap_deg=18.0,
        noise_stroke_rate=0.7,
        inter_symbol_latency_ms=1000.0,
    ),
    Group.VCD: PhenotypeParams(
        Group.VCD,
        digit_omission_prob=0.025,
        digit_repetition_prob=0.04,
        digit_angle_jitter_deg=6.0,
        hand_angle_error_deg=8.5,
        minute_to_10_error_prob=0.03,
        hand_omission_prob=0.03,
        crossed_out_digit_prob=0.06,
        draw_speed_cm_per_s=1.30,
        clockface_eccentricity=0.35,
        clockface_gap_deg=25.0,
        noise_stroke_rate=0.70,
        inter_symbol_latency_ms=1700.0,
        drawing_scale=0.93,
    ),
    Group.PD: PhenotypeParams(
        Group.PD,
        digit_omission_prob=0.012,
        digit_repetition_prob=0.01,
        digit_angle_jitter_deg=5.0,
        hand_angle_error_deg=5.0,
        minute_to_10_error_prob=0.01,
        hand_omission_prob=0.025,
        crossed_out_digit_prob=0.035,
        draw_speed_cm_per_s=1.15,
        clockface_eccentricity=0.20,
        clockface_gap_deg=12.0,
        noise_stroke_rate=0.35,
        inter_symbol_latency_ms=1100.0,
        drawing_scale=0.62,
    ),
}


def _scale_odds(p: float, factor: float) -> float:
    """Scale a probability's odds; fixes 0 and 1 exactly."""
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    q = p * factor
    return q / (q + (1.0 - p))


def _effective_params(p: PhenotypeParams, rng: np.random.Generator) -> PhenotypeParams:
    """Per-subject parameter draw around the group preset.

    A shared lognormal severity factor scales the odds of the error
    probabilities (impairment expression is correlated within a subject)
    while the kinematic and geometric parameters get independent
    lognormal spread.  Multiplicative noise keeps zero parameters exactly
    zero and sure events sure, so noiseless presets stay noiseless and
    probability-one modes stay forced.
    """
    sev = rng.lognormal(0.0, 0.40)
    return replace(
        p,
        digit_omission_prob=_scale_odds(p.digit_omission_prob, sev),
        digit_repetition_prob=_scale_odds(p.digit_repetition_prob, sev),
        crossed_out_digit_prob=_scale_odds(p.crossed_out_digit_prob, sev),
        minute_to_10_error_prob=_scale_odds(p.minute_to_10_error_prob, sev),
        hand_omission_prob=_scale_odds(p.hand_omission_prob, sev),
        noise_stroke_rate=p.noise_stroke_rate * sev,
        digit_angle_jitter_deg=p.digit_angle_jitter_deg * rng.lognormal(0.0, 0.35),
        hand_angle_error_deg=p.hand_angle_error_deg * rng.lognormal(0.0, 0.35),
        draw_speed_cm_per_s=p.draw_speed_cm_per_s * rng.lognormal(0.0, 0.35),
        clockface_eccentricity=min(0.9, p.clockface_eccentricity * rng.lognormal(0.0, 0.45)),
        inter_symbol_latency_ms=p.inter_symbol_latency_ms * rng.lognormal(0.0, 0.3),
        drawing_scale=float(np.clip(p.drawing_scale * rng.lognormal(0.0, 0.15), 0.25, 1.5)),
    )


def _resample_polyline(waypoints: np.ndarray, step: float) -> np.ndarray:
    """Points along a polyline at constant arclength spacing, endpoint kept."""
    w = np.asarray(waypoints, dtype=np.float64)
    seg = np.diff(w, axis=0)
    seglen = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    total = cum[-1]
    if total <= step:
        return np.vstack([w[0], w[-1]])
    d = np.arange(0.0, total, step)
    if total - d[-1] > 1e-9:
        d = np.append(d, total)
    x = np.interp(d, cum, w[:, 0])
    y = np.interp(d, cum, w[:, 1])
    return np.column_stack([x, y])


def _ellipse_arc(
    cx: float, cy: float, ax: float, by: float, start_deg: float, sweep_deg: float, step: float
) -> np.ndarray:
    """Equal-arclength samples on an elliptical arc, exactly on the curve.

    The parameter angle is measured clockwise from 12 o'clock; arclength is
    approximated on a dense parameter grid but points are evaluated on the
    true ellipse, so a zero-eccentricity face is an exact circle.
    """
    n_dense = max(int(abs(sweep_deg) / 0.25), 8) + 1
    phi = np.radians(np.linspace(start_deg, start_deg + sweep_deg, n_dense))
    px = cx + ax * np.sin(phi)
    py = cy + by * np.cos(phi)
    seglen = np.hypot(np.diff(px), np.diff(py))
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    total = cum[-1]
    if total <= step:
        d = np.array([0.0, total])
    else:
        d = np.arange(0.0, total, step)
        if total - d[-1] > 1e-9:
            d = np.append(d, total)
    phi_d = np.interp(d, cum, phi)
    return np.column_stack([cx + ax * np.sin(phi_d), cy + by * np.cos(phi_d)])


class _DrawingBuilder:
    def __init__(
        self,
        rng: np.random.Generator,
        params: PhenotypeParams,
        center: tuple,
        radius: float,
        period: int,
        t_start: int,
    ):
        self.rng = rng
        self.p = params
        self.cx, self.cy = center
        self.radius = radius * params.drawing_scale
        self.period = period
        self.t = int(t_start)
        self.step = params.draw_speed_cm_per_s * period / 1000.0
        self.strokes: list = []

    def _add(self, kind: SymbolKind, pts: np.ndarray, digit: Optional[int] = None):
        n = len(pts)
        ts = self.t + self.period * np.arange(n, dtype=np.int64)
        label = SymbolLabel(kind, digit)
        self.strokes.append(Stroke(len(self.strokes), label, xy=pts, t_ms=ts))
        self.t = int(ts[-1])

    def _pause(self, mean_ms: float):
        extra = int(round(self.rng.exponential(mean_ms))) if mean_ms > 0 else 0
        self.t += self.period + extra

    def _short_pause(self):
        self._pause(SHORT_PAUSE_MEAN_MS)

    def _symbol_pause(self):
        self._pause(self.p.inter_symbol_latency_ms)

    def _digit_pos(self, digit: int, angle_jitter: float) -> tuple:
        ang = math.radians(30.0 * digit + angle_jitter)
        r = DIGIT_RING_FACTOR * self.radius
        return self.cx + r * math.sin(ang), self.cy + r * math.cos(ang)

    def _glyph(self, digit: int, x: float, y: float):
        # Two L-shaped strokes forming a box; the box stands in for the
        # glyph since only position and bounding box feed the features.
        w = (0.78 if digit >= 10 else 0.40) * self.p.drawing_scale
        h = 0.62 * self.p.drawing_scale
        x0, x1 = x - w / 2, x + w / 2
        y0, y1 = y - h / 2, y + h / 2
        s1 = np.array([(x1, y0), (x0, y0), (x0, y1)])
        s2 = np.array([(x0, y1), (x1, y1), (x1, y0)])
        self._add(SymbolKind.DIGIT, _resample_polyline(s1, self.step), digit)
        self._short_pause()
        self._add(SymbolKind.DIGIT, _resample_polyline(s2, self.step), digit)
        return x0, y0, x1, y1

    def _slash(self, box: tuple):
        x0, y0, x1, y1 = box
        dx, dy = (x1 - x0) * 0.12, (y1 - y0) * 0.12
        way = np.array([(x0 - dx, y0 - dy), (x1 + dx, y1 + dy)])
        self._add(SymbolKind.NOISE, _resample_polyline(way, self.step))

    def _offset_digit_angle(self, digit: int) -> float:
        sign = 1.0 if self.rng.random() < 0.5 else -1.0
        return 30.0 * digit + sign * self.rng.uniform(10.0, 20.0)

    def build(self) -> None:
        p, rng = self.p, self.rng

        # Clockface: a single elliptical arc, clockwise from a random start.
        # The gap draw is exponential: mostly small with a heavy tail, so
        # groups overlap instead of separating on one deterministic value.
        gap = 0.0
        if p.clockface_gap_deg > 0:
            gap = float(min(rng.exponential(p.clockface_gap_deg), 350.0))
        ax = self.radius
        by = ax * math.sqrt(1.0 - p.clockface_eccentricity**2)
        start = rng.uniform(0.0, 360.0)
        self._add(
            SymbolKind.CLOCKFACE,
            _ellipse_arc(self.cx, self.cy, ax, by, start, 360.0 - gap, self.step),
        )
        self._symbol_pause()

        # Digits in drawing order 12, 1, 2, ..., 11.
        for digit in (12, *range(1, 12)):
            if rng.random() < p.digit_omission_prob:
                continue
            jitter = rng.normal(0.0, p.digit_angle_jitter_deg) if p.digit_angle_jitter_deg > 0 else 0.0
            x, y = self._digit_pos(digit, jitter)
            box = self._glyph(digit, x, y)
            crossed = rng.random() < p.crossed_out_digit_prob
            repeated = rng.random() < p.digit_repetition_prob
            if crossed:
                self._short_pause()
                self._slash(box)
            if crossed or repeated:
                # Second instance strictly outside the digit ring: far
                # enough that the census never fuses it with the first
                # glyph, and clear of the hands' reach.
                self._short_pause()
                ang = math.radians(self._offset_digit_angle(digit))
                rr = DIGIT_RING_FACTOR * self.radius * rng.uniform(1.32, 1.45)
                self._glyph(digit, self.cx + rr * math.sin(ang), self.cy + rr * math.cos(ang))
            self._short_pause()
        self._symbol_pause()

        # Hands from the center, hour first, each with an arrowhead.
        minute_len = MINUTE_HAND_FACTOR * self.radius
        hands = (
            (SymbolKind.HOUR_HAND, SymbolKind.ARROWHEAD_HOUR, HOUR_HAND_TARGET_DEG, minute_len * HOUR_TO_MINUTE_RATIO),
            (SymbolKind.MINUTE_HAND, SymbolKind.ARROWHEAD_MINUTE, MINUTE_HAND_TARGET_DEG, minute_len),
        )
        for kind, arrow_kind, target, length in hands:
            if rng.random() < p.hand_omission_prob:
                continue
            if kind is SymbolKind.MINUTE_HAND and rng.random() < p.minute_to_10_error_prob:
                target = MINUTE_AT_10_DEG
            err = rng.normal(0.0, p.hand_angle_error_deg) if p.hand_angle_error_deg > 0 else 0.0
            ang = math.radians(target + err)
            ux, uy = math.sin(ang), math.cos(ang)
            tip = (self.cx + length * ux, self.cy + length * uy)
            way = np.array([(self.cx, self.cy), tip])
            self._add(kind, _resample_polyline(way, self.step))
            self._symbol_pause()
            arm = 0.18 * length
            left = math.radians(target + err + 153.0)
            right = math.radians(target + err - 153.0)
            vway = np.array(
                [
                    (tip[0] + arm * math.sin(left), tip[1] + arm * math.cos(left)),
                    tip,
                    (tip[0] + arm * math.sin(right), tip[1] + arm * math.cos(right)),
                ]
            )
            self._add(arrow_kind, _resample_polyline(vway, self.step))
            self._symbol_pause()

        # Stray marks.
        for _ in range(rng.poisson(p.noise_stroke_rate)):
            r = 0.95 * self.radius * math.sqrt(rng.uniform())
            theta = rng.uniform(0.0, 2 * math.pi)
            pos = np.array([self.cx + r * math.sin(theta), self.cy + r * math.cos(theta)])
            way = pos + np.vstack([[0.0, 0.0], np.cumsum(rng.normal(0.0, 0.2, size=(3, 2)), axis=0)])
            self._add(SymbolKind.NOISE, _resample_polyline(way, self.step))
            self._short_pause()


def generate_test(
    params: PhenotypeParams,
    subject_id: str,
    seed: Union[int, np.random.SeedSequence],
    *,
    canvas_radius_cm: float = 4.0,
    sample_period_ms: int = 13,
) -> ClockTest:
    """Generate one subject's test; identical inputs give identical output."""
    rng = np.random.default_rng(seed)
    params = _effective_params(params, rng)
    r = canvas_radius_cm
    cmd_center = (r + 1.0, r + 1.0)
    copy_center = (r + 1.0, 3.0 * r + 3.0)

    cmd = _DrawingBuilder(rng, params, cmd_center, r, sample_period_ms, 0)
    cmd.build()

    between = 1500 + int(round(rng.exponential(2.0 * params.inter_symbol_latency_ms)))
    cpy = _DrawingBuilder(rng, params, copy_center, r, sample_period_ms, cmd.t + between)
    cpy.build()

    return ClockTest(
        subject_id,
        ClockDrawing(ClockKind.COMMAND, cmd.strokes),
        ClockDrawing(ClockKind.COPY, cpy.strokes),
        group=params.group,
    )


def generate_dataset(
    cfg: GeneratorConfig,
    phenotypes: Optional[Mapping[Group, PhenotypeParams]] = None,
) -> list:
    """Generate the requested count of tests per group, in group order.

    Subject seeds derive from ``(cfg.seed, group_index, subject_index)``,
    so changing one group's count never perturbs another group's tests.
    """
    phenotypes = dict(DEFAULT_PHENOTYPES) if phenotypes is None else dict(phenotypes)
    tests = []
    for gi, group in enumerate(GROUP_ORDER):
        count = cfg.counts.get(group, 0)
        if count == 0:
            continue
        params = phenotypes[group]
        if params.group is not group:
            raise ValueError(f"phenotype for {group.value} carries group {params.group.value}")
        for i in range(count):
            ss = np.random.SeedSequence(cfg.seed, spawn_key=(gi, i))
            sid = f"{group.value}-{i:04d}"
            tests.append(
                generate_test(
                    params,
                    sid,
                    ss,
                    canvas_radius_cm=cfg.canvas_radius_cm,
                    sample_period_ms=cfg.sample_period_ms,
                )
            )
    return tests
