"""Data model and interchange formats for digitized clock-drawing tests.

A test is two drawings (the command clock and the copy clock), each a
sequence of symbol-labeled pen strokes sampled by a digitizing pen.
Coordinates are centimeters on the page; timestamps are integer
milliseconds on a single axis whose origin is the first sample of the
command clock (copy-clock timestamps continue the same axis, so the
pause between clocks is measurable).

Stroke file format (``dcdt-strokes v1``), line-oriented CSV::

    dcdt-strokes v1
    subject_id,clock,stroke_id,symbol,digit_value,point_idx,x_cm,y_cm,t_ms
    S-0001,command,0,clockface,,0,6.2000,5.0000,0
    ...

``clock`` is ``command`` or ``copy``; ``symbol`` is one of ``clockface``,
``digit``, ``hourhand``, ``minutehand``, ``arrowhead_hour``,
``arrowhead_minute``, ``noise``; ``digit_value`` is 1..12 and present
exactly when ``symbol`` is ``digit``.  Coordinates are written with four
decimal places; timestamps are plain integers.  Rows of one stroke must
be contiguous with ``point_idx`` counting from 0.

Labels file::

    subject_id,group
    S-0001,HC
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

import numpy as np

STROKES_MAGIC = "dcdt-strokes v1"
STROKES_HEADER = "subject_id,clock,stroke_id,symbol,digit_value,point_idx,x_cm,y_cm,t_ms"
LABELS_HEADER = "subject_id,group"

# The drawn time is 11:10.  The minute hand sits on the 2; the hour hand
# has advanced 10/60 of the way from 11 toward 12 (not flat on the 11).
HOUR_HAND_TARGET_DEG = 335.0
MINUTE_HAND_TARGET_DEG = 60.0


class DataFormatError(ValueError):
    """Malformed stroke/labels data.  Carries file path and 1-based line."""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.message = message
        self.line = line
        self.path = path
        loc = path if path is not None else "<input>"
        if line is not None:
            loc = f"{loc}:{line}"
        super().__init__(f"{loc}: {message}")


class SymbolKind(enum.Enum):
    CLOCKFACE = "clockface"
    DIGIT = "digit"
    HOUR_HAND = "hourhand"
    MINUTE_HAND = "minutehand"
    ARROWHEAD_HOUR = "arrowhead_hour"
    ARROWHEAD_MINUTE = "arrowhead_minute"
    NOISE = "noise"


class ClockKind(enum.Enum):
    COMMAND = "command"
    COPY = "copy"


class Group(enum.Enum):
    HC = "HC"
    MID = "MID"
    VCD = "VCD"
    PD = "PD"


GROUP_ORDER = (Group.HC, Group.MID, Group.VCD, Group.PD)


@dataclass(frozen=True)
class PenPoint:
    """One pen sample: page position in cm, time in ms since test start."""

    x: float
    y: float
    t: int

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"pen point timestamp must be >= 0, got {self.t}")


@dataclass(frozen=True)
class SymbolLabel:
    kind: SymbolKind
    digit_value: Optional[int] = None

    def __post_init__(self):
        if self.kind is SymbolKind.DIGIT:
            if self.digit_value is None or not (1 <= self.digit_value <= 12):
                raise ValueError(f"digit label needs digit_value in 1..12, got {self.digit_value}")
        elif self.digit_value is not None:
            raise ValueError(f"digit_value given for non-digit symbol {self.kind.value}")


class Stroke:
    """An ordered run of pen samples sharing one symbol label.

    Point storage is array-based for speed: ``xy`` is an (n, 2) float64
    array of centimeters, ``t_ms`` an (n,) int64 array of strictly
    increasing timestamps.  The ``points`` property materializes
    :class:`PenPoint` objects on demand.  Instances are immutable.
    """

    __slots__ = ("id", "label", "xy", "t_ms")

    def __init__(
        self,
        id: int,
        label: SymbolLabel,
        points: Optional[Iterable[Union[PenPoint, tuple]]] = None,
        *,
        xy: Optional[np.ndarray] = None,
        t_ms: Optional[np.ndarray] = None,
    ):
        if points is not None:
            pts = [(p.x, p.y, p.t) if isinstance(p, PenPoint) else tuple(p) for p in points]
            xy = np.array([(x, y) for x, y, _ in pts], dtype=np.float64).reshape(-1, 2)
            t_ms = np.array([t for _, _, t in pts], dtype=np.int64)
        else:
            xy = np.ascontiguousarray(np.asarray(xy, dtype=np.float64)).reshape(-1, 2)
            t_ms = np.ascontiguousarray(np.asarray(t_ms, dtype=np.int64)).reshape(-1)
        if xy.shape[0] != t_ms.shape[0]:
            raise ValueError(f"stroke {id}: {xy.shape[0]} coordinates but {t_ms.shape[0]} timestamps")
        if xy.shape[0] < 2:
            raise ValueError(f"stroke {id}: a stroke needs at least 2 points, got {xy.shape[0]}")
        if t_ms[0] < 0:
            raise ValueError(f"stroke {id}: negative timestamp {t_ms[0]}")
        if np.any(np.diff(t_ms) <= 0):
            raise ValueError(f"stroke {id}: timestamps must be strictly increasing")
        xy.setflags(write=False)
        t_ms.setflags(write=False)
        object.__setattr__(self, "id", int(id))
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "xy", xy)
        object.__setattr__(self, "t_ms", t_ms)

    def __setattr__(self, name, value):
        raise AttributeError("Stroke is immutable")

    @property
    def n_points(self) -> int:
        return self.xy.shape[0]

    @property
    def points(self) -> tuple:
        return tuple(
            PenPoint(float(x), float(y), int(t))
            for (x, y), t in zip(self.xy, self.t_ms)
        )

    @property
    def kind(self) -> SymbolKind:
        return self.label.kind

    @property
    def start_t(self) -> int:
        return int(self.t_ms[0])

    @property
    def end_t(self) -> int:
        return int(self.t_ms[-1])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Stroke):
            return NotImplemented
        return (
            self.id == other.id
            and self.label == other.label
            and self.xy.shape == other.xy.shape
            and bool(np.all(self.xy == other.xy))
            and bool(np.all(self.t_ms == other.t_ms))
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"Stroke(id={self.id}, {self.label.kind.value}, n={self.n_points})"


def stroke_length(s: Stroke) -> float:
    """Ink length of a stroke: sum of consecutive point distances, in cm."""
    d = np.diff(s.xy, axis=0)
    return float(np.hypot(d[:, 0], d[:, 1]).sum())


def stroke_duration(s: Stroke) -> int:
    """Elapsed drawing time of a stroke in ms (last minus first sample)."""
    return int(s.t_ms[-1] - s.t_ms[0])


class ClockDrawing:
    """One clock drawing: a command or copy clock with its strokes."""

    __slots__ = ("kind", "strokes")

    def __init__(self, kind: ClockKind, strokes: Sequence[Stroke] = ()):
        strokes = tuple(strokes)
        ids = [s.id for s in strokes]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate stroke ids in {kind.value} drawing")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "strokes", strokes)

    def __setattr__(self, name, value):
        raise AttributeError("ClockDrawing is immutable")

    def __iter__(self) -> Iterator[Stroke]:
        return iter(self.strokes)

    def __len__(self) -> int:
        return len(self.strokes)

    def of_kind(self, *kinds: SymbolKind) -> tuple:
        return tuple(s for s in self.strokes if s.label.kind in kinds)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClockDrawing):
            return NotImplemented
        return self.kind is other.kind and self.strokes == other.strokes

    __hash__ = None

    def __repr__(self) -> str:
        return f"ClockDrawing({self.kind.value}, {len(self.strokes)} strokes)"


class ClockTest:
    """A subject's full test: command clock plus copy clock."""

    __slots__ = ("subject_id", "command", "copy", "group")

    def __init__(
        self,
        subject_id: str,
        command: ClockDrawing,
        copy: ClockDrawing,
        group: Optional[Group] = None,
    ):
        if command.kind is not ClockKind.COMMAND:
            raise ValueError("command drawing must have kind COMMAND")
        if copy.kind is not ClockKind.COPY:
            raise ValueError("copy drawing must have kind COPY")
        object.__setattr__(self, "subject_id", str(subject_id))
        object.__setattr__(self, "command", command)
        object.__setattr__(self, "copy", copy)
        object.__setattr__(self, "group", group)

    def __setattr__(self, name, value):
        raise AttributeError("ClockTest is immutable")

    def with_group(self, group: Optional[Group]) -> "ClockTest":
        return ClockTest(self.subject_id, self.command, self.copy, group)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClockTest):
            return NotImplemented
        return (
            self.subject_id == other.subject_id
            and self.group == other.group
            and self.command == other.command
            and self.copy == other.copy
        )

    __hash__ = None

    def __repr__(self) -> str:
        g = self.group.value if self.group else "?"
        return f"ClockTest({self.subject_id!r}, group={g})"


_SYMBOL_BY_TOKEN = {k.value: k for k in SymbolKind}
_CLOCK_BY_TOKEN = {k.value: k for k in ClockKind}
_GROUP_BY_TOKEN = {g.value: g for g in Group}


def parse_strokes(text: str, path: str = "<strokes>") -> list:
    """Parse a ``dcdt-strokes v1`` file into one ClockTest per subject.

    Raises :class:`DataFormatError` with the offending line number for any
    contract violation (bad field counts, unknown tokens, out-of-range
    digit values, non-contiguous stroke rows, non-monotone timestamps).
    """
    lines = text.split("\n")
    if not lines or lines[0].rstrip("\r") != STROKES_MAGIC:
        raise DataFormatError(f"first line must be '{STROKES_MAGIC}'", 1, path)
    if len(lines) < 2 or lines[1].rstrip("\r") != STROKES_HEADER:
        raise DataFormatError(f"second line must be '{STROKES_HEADER}'", 2, path)

    subjects: dict = {}  # sid -> {ClockKind: [Stroke]}
    finished: set = set()
    cur_key = None
    cur_label: Optional[SymbolLabel] = None
    cur_rows: list = []  # (line_no, point_idx, x, y, t)

    def finish():
        if cur_key is None:
            return
        sid, clock, stroke_id = cur_key
        for j, row in enumerate(cur_rows):
            if row[1] != j:
                raise DataFormatError(
                    f"point_idx must count 0,1,2,... within stroke {stroke_id}, got {row[1]}",
                    row[0], path,
                )
        if len(cur_rows) < 2:
            raise DataFormatError(
                f"stroke {stroke_id} of {sid}/{clock.value} has fewer than 2 points",
                cur_rows[-1][0], path,
            )
        for prev, row in zip(cur_rows, cur_rows[1:]):
            if row[4] <= prev[4]:
                raise DataFormatError(
                    f"non-monotone timestamps in stroke {stroke_id} of {sid}/{clock.value}",
                    row[0], path,
                )
        xy = np.array([(r[2], r[3]) for r in cur_rows], dtype=np.float64)
        t = np.array([r[4] for r in cur_rows], dtype=np.int64)
        try:
            stroke = Stroke(stroke_id, cur_label, xy=xy, t_ms=t)
        except ValueError as exc:
            raise DataFormatError(str(exc), cur_rows[0][0], path) from exc
        subjects.setdefault(sid, {ClockKind.COMMAND: [], ClockKind.COPY: []})[clock].append(stroke)
        finished.add(cur_key)

    for i, raw in enumerate(lines[2:], start=3):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 9:
            raise DataFormatError(f"expected 9 comma-separated fields, got {len(parts)}", i, path)
        sid, clock_s, stroke_s, symbol_s, dv_s, pidx_s, x_s, y_s, t_s = parts
        if not sid:
            raise DataFormatError("empty subject_id", i, path)
        clock = _CLOCK_BY_TOKEN.get(clock_s)
        if clock is None:
            raise DataFormatError(f"unknown clock '{clock_s}' (expected command or copy)", i, path)
        symbol = _SYMBOL_BY_TOKEN.get(symbol_s)
        if symbol is None:
            raise DataFormatError(f"unknown symbol '{symbol_s}'", i, path)
        try:
            stroke_id = int(stroke_s)
            point_idx = int(pidx_s)
            x = float(x_s)
            y = float(y_s)
            t = int(t_s)
        except ValueError:
            raise DataFormatError("malformed numeric field", i, path) from None
        if t < 0:
            raise DataFormatError(f"negative timestamp {t}", i, path)
        if symbol is SymbolKind.DIGIT:
            try:
                dv = int(dv_s)
            except ValueError:
                raise DataFormatError(f"digit rows need an integer digit_value, got '{dv_s}'", i, path) from None
            if not (1 <= dv <= 12):
                raise DataFormatError(f"digit_value must be 1..12, got {dv}", i, path)
            label = SymbolLabel(symbol, dv)
        else:
            if dv_s != "":
                raise DataFormatError(f"digit_value must be empty for symbol '{symbol_s}'", i, path)
            label = SymbolLabel(symbol)

        key = (sid, clock, stroke_id)
        if key != cur_key:
            finish()
            if key in finished:
                raise DataFormatError(
                    f"rows of stroke {stroke_id} ({sid}/{clock.value}) are not contiguous", i, path
                )
            cur_key = key
            cur_label = label
            cur_rows = []
        elif label != cur_label:
            raise DataFormatError(f"symbol label changed mid-stroke {stroke_id}", i, path)
        cur_rows.append((i, point_idx, x, y, t))

    finish()

    tests = []
    for sid, clocks in subjects.items():
        tests.append(
            ClockTest(
                sid,
                ClockDrawing(ClockKind.COMMAND, clocks[ClockKind.COMMAND]),
                ClockDrawing(ClockKind.COPY, clocks[ClockKind.COPY]),
            )
        )
    return tests


def serialize_strokes(tests: Iterable[ClockTest]) -> str:
    """Render tests in the v1 stroke format (4-decimal coords, int ms)."""
    out = [STROKES_MAGIC, STROKES_HEADER]
    for test in tests:
        for drawing in (test.command, test.copy):
            clock = drawing.kind.value
            for s in drawing:
                dv = str(s.label.digit_value) if s.label.kind is SymbolKind.DIGIT else ""
                sym = s.label.kind.value
                for k in range(s.n_points):
                    x, y = s.xy[k]
                    out.append(
                        f"{test.subject_id},{clock},{s.id},{sym},{dv},{k},{x:.4f},{y:.4f},{int(s.t_ms[k])}"
                    )
    return "\n".join(out) + "\n"


def parse_labels(text: str, path: str = "<labels>") -> dict:
    """Parse a labels file into ``{subject_id: Group}``."""
    lines = text.split("\n")
    if not lines or lines[0].rstrip("\r") != LABELS_HEADER:
        raise DataFormatError(f"first line must be '{LABELS_HEADER}'", 1, path)
    groups = {}
    for i, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise DataFormatError(f"expected 2 comma-separated fields, got {len(parts)}", i, path)
        sid, group_s = parts
        group = _GROUP_BY_TOKEN.get(group_s)
        if group is None:
            raise DataFormatError(f"unknown group '{group_s}'", i, path)
        if sid in groups:
            raise DataFormatError(f"duplicate subject_id '{sid}'", i, path)
        groups[sid] = group
    return groups


def serialize_labels(tests: Iterable[ClockTest]) -> str:
    out = [LABELS_HEADER]
    for test in tests:
        if test.group is None:
            raise ValueError(f"test {test.subject_id} has no group label")
        out.append(f"{test.subject_id},{test.group.value}")
    return "\n".join(out) + "\n"


def attach_groups(tests: Sequence[ClockTest], groups: Mapping[str, Group]) -> list:
    """Return new tests with group labels joined in from a labels mapping."""
    out = []
    for test in tests:
        if test.subject_id not in groups:
            raise ValueError(f"no group label for subject '{test.subject_id}'")
        out.append(test.with_group(groups[test.subject_id]))
    return out
