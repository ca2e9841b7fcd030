import numpy as np
import pytest

from dcdt.stroke_model import (
    ClockDrawing,
    ClockKind,
    ClockTest,
    Group,
    Stroke,
    SymbolKind,
    SymbolLabel,
)
from dcdt.synthgen import PhenotypeParams, generate_test


def make_stroke(sid, kind, xy, t0=0, dt=13, digit=None):
    """Stroke from a coordinate list with evenly spaced timestamps."""
    xy = np.asarray(xy, dtype=float)
    t = t0 + dt * np.arange(len(xy))
    return Stroke(sid, SymbolLabel(kind, digit), xy=xy, t_ms=t)


def make_test(command_strokes=(), copy_strokes=(), subject="t", group=None):
    return ClockTest(
        subject,
        ClockDrawing(ClockKind.COMMAND, command_strokes),
        ClockDrawing(ClockKind.COPY, copy_strokes),
        group,
    )


def ideal_params(group=Group.HC, **overrides):
    """All error probabilities and jitters zero: the noiseless drawing."""
    return PhenotypeParams(group, **overrides)


def fast(params, speed=25.0):
    """Crank the pen speed so generated tests stay small in tests."""
    from dataclasses import replace

    return replace(params, draw_speed_cm_per_s=speed)


@pytest.fixture(scope="session")
def ideal_test():
    return generate_test(ideal_params(), "IDEAL", 42)


@pytest.fixture(scope="session")
def ideal_fv(ideal_test):
    from dcdt.features import extract

    return extract(ideal_test)
