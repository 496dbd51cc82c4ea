"""Vector-sketch data model and the 12-step cumulative decomposition.

A sketch is an ordered list of timestamped, colored strokes on a fixed
512x512 logical canvas.  Decomposition turns one sketch into 12 cumulative
sub-sketches whose stroke counts follow a fixed piecewise rule, so that the
drawing process (not just the final picture) is visible to downstream
encoders.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import EmptySketch, SchemaError

CANVAS_SIZE = 512
NUM_SUB_SKETCHES = 12


@dataclass(frozen=True)
class Stroke:
    """One pen-down..pen-up segment: points in canvas units, RGB color,
    width in canvas units, and millisecond timestamps."""

    points: tuple[tuple[float, float], ...]
    color: tuple[int, int, int]
    width: float
    t_start: int
    t_end: int

    def __post_init__(self):
        if len(self.points) < 1:
            raise SchemaError("points", "a stroke needs at least one point")
        for i, (x, y) in enumerate(self.points):
            if not (0 <= x <= CANVAS_SIZE and 0 <= y <= CANVAS_SIZE):
                raise SchemaError(
                    f"points[{i}]", f"coordinate ({x}, {y}) outside [0, {CANVAS_SIZE}]"
                )
        if len(self.color) != 3 or any(
            not isinstance(c, int) or not (0 <= c <= 255) for c in self.color
        ):
            raise SchemaError("color", "color must be three integers in 0..255")
        if not self.width > 0:
            raise SchemaError("width", "width must be > 0")
        if self.t_start > self.t_end:
            raise SchemaError("t_start", "t_start must be <= t_end")


@dataclass(frozen=True)
class Sketch:
    """An ordered, non-empty stroke list plus an opaque identifier."""

    sketch_id: str
    strokes: tuple[Stroke, ...]
    canvas_size: int = CANVAS_SIZE

    def __post_init__(self):
        if self.canvas_size != CANVAS_SIZE:
            raise SchemaError("canvas_size", f"canvas_size must be {CANVAS_SIZE}")
        if len(self.strokes) == 0:
            raise EmptySketch(f"sketch {self.sketch_id!r} has no strokes")
        for i in range(1, len(self.strokes)):
            if self.strokes[i].t_start < self.strokes[i - 1].t_start:
                raise SchemaError(
                    f"strokes[{i}].t_start",
                    "stroke start times must be non-decreasing",
                )

    @property
    def stroke_count(self) -> int:
        return len(self.strokes)

    def prefix(self, n: int, suffix: str = "") -> "Sketch":
        """Sub-sketch holding the first n strokes."""
        return Sketch(
            sketch_id=self.sketch_id + suffix,
            strokes=self.strokes[:n],
            canvas_size=self.canvas_size,
        )


@dataclass(frozen=True)
class SubSketchSequence:
    """The 12 cumulative sub-sketches of a parent sketch."""

    parent_id: str
    cumulative_counts: tuple[int, ...]
    sub_sketches: tuple[Sketch, ...] = field(repr=False)

    def __post_init__(self):
        if len(self.cumulative_counts) != NUM_SUB_SKETCHES:
            raise SchemaError("cumulative_counts", "exactly 12 entries required")
        if len(self.sub_sketches) != NUM_SUB_SKETCHES:
            raise SchemaError("sub_sketches", "exactly 12 entries required")


def cumulative_stroke_counts(total_strokes: int) -> tuple[int, ...]:
    """Cumulative stroke count for each of the 12 sub-sketches.

    With step = total/12: if floor(step) < 1 the j-th count is min(j, total);
    otherwise it is j*floor(step) for j < 12 and exactly total at j = 12.
    The last branch deliberately jumps (e.g. 30 strokes -> ..., 22, 30): the
    decomposition is by whole-stroke steps, not an even re-partition.
    """
    if total_strokes < 1:
        raise EmptySketch("cannot decompose a sketch with zero strokes")
    step = total_strokes // NUM_SUB_SKETCHES
    counts = []
    for j in range(1, NUM_SUB_SKETCHES + 1):
        if step < 1:
            counts.append(min(j, total_strokes))
        elif j < NUM_SUB_SKETCHES:
            counts.append(j * step)
        else:
            counts.append(total_strokes)
    return tuple(counts)


def decompose(sketch: Sketch) -> SubSketchSequence:
    """Split a sketch into its 12 cumulative sub-sketches.

    Sub-sketch j holds the first cumulative_counts[j-1] strokes of the
    parent, so each sub-sketch is a prefix of the next.
    """
    counts = cumulative_stroke_counts(sketch.stroke_count)
    subs = tuple(sketch.prefix(n, suffix=f"#{j + 1:02d}") for j, n in enumerate(counts))
    return SubSketchSequence(
        parent_id=sketch.sketch_id,
        cumulative_counts=counts,
        sub_sketches=subs,
    )


# --- JSON (de)serialization -------------------------------------------------
#
# Schema:
#   {"sketch_id": str, "canvas_size": 512,
#    "strokes": [{"points": [[x, y], ...], "color": [r, g, b],
#                 "width": number, "t_start": int, "t_end": int}]}


def _expect(obj, key, kind, path):
    if not isinstance(obj, dict):
        raise SchemaError(path or "<root>", "expected a JSON object")
    if key not in obj:
        raise SchemaError(f"{path}{key}", "missing required field")
    value = obj[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"{path}{key}", "expected a number")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(f"{path}{key}", "expected an integer")
        return value
    if not isinstance(value, kind):
        raise SchemaError(f"{path}{key}", f"expected {kind.__name__}")
    return value


def _parse_stroke(obj, path: str) -> Stroke:
    points = _expect(obj, "points", list, path)
    parsed_points = []
    for i, pt in enumerate(points):
        if (
            not isinstance(pt, list)
            or len(pt) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in pt)
        ):
            raise SchemaError(f"{path}points[{i}]", "expected a [x, y] number pair")
        parsed_points.append((float(pt[0]), float(pt[1])))
    color = _expect(obj, "color", list, path)
    if len(color) != 3:
        raise SchemaError(f"{path}color", "expected [r, g, b]")
    width = _expect(obj, "width", float, path)
    t_start = _expect(obj, "t_start", int, path)
    t_end = _expect(obj, "t_end", int, path)
    try:
        return Stroke(
            points=tuple(parsed_points),
            color=tuple(color),
            width=width,
            t_start=t_start,
            t_end=t_end,
        )
    except SchemaError as err:
        # Stroke validation reports bare field names; qualify with the path
        raise SchemaError(f"{path}{err.field}", err.message) from None


def sketch_from_dict(obj: dict) -> Sketch:
    sketch_id = _expect(obj, "sketch_id", str, "")
    canvas = _expect(obj, "canvas_size", int, "")
    strokes_raw = _expect(obj, "strokes", list, "")
    if len(strokes_raw) == 0:
        raise EmptySketch(f"sketch {sketch_id!r} has no strokes")
    strokes = tuple(
        _parse_stroke(s, f"strokes[{i}].") for i, s in enumerate(strokes_raw)
    )
    return Sketch(sketch_id=sketch_id, strokes=strokes, canvas_size=canvas)


def parse_sketch_json(text: str | bytes) -> Sketch:
    """Parse one sketch document; raises SchemaError with a field path,
    or EmptySketch for a zero-stroke document."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as err:
            raise SchemaError("<root>", f"not valid UTF-8: {err}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as err:
        raise SchemaError("<root>", f"not valid JSON: {err}") from None
    return sketch_from_dict(obj)


def sketch_to_dict(sketch: Sketch) -> dict:
    return {
        "sketch_id": sketch.sketch_id,
        "canvas_size": sketch.canvas_size,
        "strokes": [
            {
                "points": [[x, y] for x, y in s.points],
                "color": list(s.color),
                "width": s.width,
                "t_start": s.t_start,
                "t_end": s.t_end,
            }
            for s in sketch.strokes
        ],
    }


def serialize_sketch(sketch: Sketch) -> str:
    return json.dumps(sketch_to_dict(sketch), sort_keys=True, separators=(",", ":"))


def read_sketch_corpus(path) -> list[Sketch]:
    """Read a newline-delimited file of sketch documents."""
    sketches = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                sketches.append(parse_sketch_json(line))
            except SchemaError as err:
                raise SchemaError(f"line {line_no}: {err.field}", err.message) from None
    return sketches
