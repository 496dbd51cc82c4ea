"""Deterministic rasterizer for vector sketches.

Strokes are drawn in order as Bresenham polylines thickened by stamping a
disc at every rasterized point; later strokes overdraw earlier ones.  There
is no anti-aliasing, so equal inputs always produce byte-identical buffers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .sketch import CANVAS_SIZE, Sketch, SubSketchSequence

MIN_RASTER_SIZE = 16
DEFAULT_RASTER_SIZE = 96
_WHITE = (255, 255, 255)


@dataclass(frozen=True)
class RasterImage:
    """Row-major RGB byte buffer with a white background."""

    width: int
    height: int
    pixels: bytes
    channels: int = 3

    def __post_init__(self):
        if len(self.pixels) != self.width * self.height * self.channels:
            raise ValueError(
                f"buffer length {len(self.pixels)} != "
                f"{self.width}x{self.height}x{self.channels}"
            )

    def to_array(self) -> np.ndarray:
        """(height, width, 3) uint8 view of the buffer."""
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(
            self.height, self.width, self.channels
        )

    def ink_coverage(self) -> float:
        """Fraction of pixels that are not background white."""
        arr = self.to_array()
        return float(np.any(arr != 255, axis=2).mean())


def _bresenham(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """All integer grid points of the segment, endpoints included."""
    points = []
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x, y = x0, y0
    while True:
        points.append((x, y))
        if x == x1 and y == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy
    return points


def _disc_offsets(radius: int) -> list[tuple[int, int]]:
    offsets = []
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dx * dx + dy * dy <= radius * radius:
                offsets.append((dx, dy))
    return offsets


def _draw_stroke(buf: np.ndarray, stroke, sx: float, sy: float) -> None:
    height, width = buf.shape[:2]
    pts = [
        (
            min(width - 1, max(0, int(round(x * sx)))),
            min(height - 1, max(0, int(round(y * sy)))),
        )
        for x, y in stroke.points
    ]
    if len(pts) == 1:
        pixels = pts
    else:
        pixels = []
        for (ax, ay), (bx, by) in zip(pts, pts[1:]):
            pixels.extend(_bresenham(ax, ay, bx, by))
    radius = int(round(stroke.width * sx / 2))
    xs = np.array([p[0] for p in pixels], dtype=np.int64)
    ys = np.array([p[1] for p in pixels], dtype=np.int64)
    color = np.array(stroke.color, dtype=np.uint8)
    if radius == 0:
        buf[ys, xs] = color
        return
    for dx, dy in _disc_offsets(radius):
        x2 = xs + dx
        y2 = ys + dy
        mask = (x2 >= 0) & (x2 < width) & (y2 >= 0) & (y2 < height)
        buf[y2[mask], x2[mask]] = color


def rasterize(
    sketch: Sketch,
    width: int = DEFAULT_RASTER_SIZE,
    height: int = DEFAULT_RASTER_SIZE,
) -> RasterImage:
    """Render a sketch to an RGB buffer.  Pure: equal inputs give
    byte-identical outputs."""
    if width < MIN_RASTER_SIZE or height < MIN_RASTER_SIZE:
        raise ValueError(f"raster size must be >= {MIN_RASTER_SIZE}")
    buf = np.full((height, width, 3), 255, dtype=np.uint8)
    sx = width / CANVAS_SIZE
    sy = height / CANVAS_SIZE
    for stroke in sketch.strokes:
        _draw_stroke(buf, stroke, sx, sy)
    return RasterImage(width=width, height=height, pixels=buf.tobytes())


def rasterize_sequence(
    seq: SubSketchSequence,
    width: int = DEFAULT_RASTER_SIZE,
    height: int = DEFAULT_RASTER_SIZE,
) -> list[RasterImage]:
    """Render the 12 cumulative frames.

    Because frame j is a stroke prefix of frame j+1 and drawing is
    order-sequential overdraw, each frame extends the previous buffer; the
    result is identical to rasterizing every sub-sketch independently.
    """
    if width < MIN_RASTER_SIZE or height < MIN_RASTER_SIZE:
        raise ValueError(f"raster size must be >= {MIN_RASTER_SIZE}")
    buf = np.full((height, width, 3), 255, dtype=np.uint8)
    sx = width / CANVAS_SIZE
    sy = height / CANVAS_SIZE
    strokes = seq.sub_sketches[-1].strokes
    frames = []
    drawn = 0
    for count in seq.cumulative_counts:
        for stroke in strokes[drawn:count]:
            _draw_stroke(buf, stroke, sx, sy)
        drawn = max(drawn, count)
        frames.append(RasterImage(width=width, height=height, pixels=buf.tobytes()))
    return frames


# --- raw container ----------------------------------------------------------
#
# Normative on-disk format: 8-byte header of two little-endian uint32
# (width, height) followed by the row-major RGB bytes.

_HEADER = struct.Struct("<II")


def write_raw_image(image: RasterImage, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(image.width, image.height))
        fh.write(image.pixels)


def read_raw_image(path) -> RasterImage:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        width, height = _HEADER.unpack(header)
        pixels = fh.read()
    return RasterImage(width=width, height=height, pixels=pixels)
