// Pointer capture semantics: commit on release, undo exactly one stroke,
// monotone timestamps, schema-valid export.

import { describe, expect, it } from "vitest";
import { validateSketch } from "../src/schema.js";
import { CanvasStrokeBuffer, mapToCanvas } from "../src/strokeBuffer.js";

function drawStroke(
  buffer: CanvasStrokeBuffer,
  points: [number, number][],
  t0: number,
  dt = 10,
) {
  const [first, ...rest] = points;
  buffer.pointerDown(first![0], first![1], t0);
  rest.forEach(([x, y], i) => buffer.pointerMove(x, y, t0 + (i + 1) * dt));
  return buffer.pointerUp(t0 + points.length * dt);
}

function freshBuffer(): CanvasStrokeBuffer {
  const buffer = new CanvasStrokeBuffer();
  buffer.startSession(1000);
  return buffer;
}

describe("CanvasStrokeBuffer", () => {
  it("turns down-move-up into one committed stroke", () => {
    const buffer = freshBuffer();
    const stroke = drawStroke(buffer, [[10, 10], [20, 30], [40, 50]], 1000);
    expect(buffer.strokeCount).toBe(1);
    expect(stroke!.points).toEqual([[10, 10], [20, 30], [40, 50]]);
    expect(stroke!.t_start).toBe(0);
    expect(stroke!.t_end).toBe(30);
  });

  it("applies the active color and width at commit time", () => {
    const buffer = freshBuffer();
    buffer.color = [200, 30, 30];
    buffer.width = 9;
    const stroke = drawStroke(buffer, [[5, 5], [6, 6]], 1100);
    expect(stroke!.color).toEqual([200, 30, 30]);
    expect(stroke!.width).toBe(9);
    buffer.color[0] = 0; // later mutation must not reach the committed stroke
    expect(buffer.committed()[0]!.color).toEqual([200, 30, 30]);
  });

  it("commits a single-point dot for a press-release with no movement", () => {
    const buffer = freshBuffer();
    buffer.pointerDown(100, 200, 1500);
    const stroke = buffer.pointerUp(1500);
    expect(stroke!.points).toEqual([[100, 200]]);
    expect(stroke!.t_start).toBe(stroke!.t_end);
  });

  it("draw 3, undo 1 leaves 2 in drawing order", () => {
    const buffer = freshBuffer();
    drawStroke(buffer, [[1, 1], [2, 2]], 1000);
    drawStroke(buffer, [[3, 3], [4, 4]], 1100);
    drawStroke(buffer, [[5, 5], [6, 6]], 1200);
    buffer.undo();
    expect(buffer.strokeCount).toBe(2);
    expect(buffer.committed().map((s) => s.points[0])).toEqual([[1, 1], [3, 3]]);
  });

  it("undo on an empty buffer is a no-op", () => {
    const buffer = freshBuffer();
    expect(buffer.undo()).toBeNull();
    expect(buffer.strokeCount).toBe(0);
  });

  it("keeps timestamps monotone even with a jittery clock", () => {
    const buffer = freshBuffer();
    buffer.pointerDown(0, 0, 1050);
    buffer.pointerMove(1, 1, 1040); // clock stepped backwards
    const first = buffer.pointerUp(1030);
    expect(first!.t_end).toBeGreaterThanOrEqual(first!.t_start);
    const second = drawStroke(buffer, [[2, 2], [3, 3]], 1020);
    expect(second!.t_start).toBeGreaterThanOrEqual(first!.t_end);
  });

  it("clamps out-of-canvas coordinates", () => {
    const buffer = freshBuffer();
    const stroke = drawStroke(buffer, [[-40, 600], [550, -9]], 1000);
    expect(stroke!.points).toEqual([[0, 512], [512, 0]]);
  });

  it("ignores moves and releases with no pointer down", () => {
    const buffer = freshBuffer();
    buffer.pointerMove(5, 5, 1000);
    expect(buffer.pointerUp(1001)).toBeNull();
    expect(buffer.strokeCount).toBe(0);
  });

  it("ignores input before the session starts", () => {
    const buffer = new CanvasStrokeBuffer();
    buffer.pointerDown(1, 1, 0);
    expect(buffer.pointerUp(1)).toBeNull();
    expect(buffer.strokeCount).toBe(0);
  });

  it("exports schema-valid sketch JSON with drawing order preserved", () => {
    const buffer = freshBuffer();
    for (let i = 0; i < 5; i++) {
      drawStroke(buffer, [[i * 10, 5], [i * 10 + 4, 9]], 1000 + i * 100);
    }
    const sketch = buffer.toSketch("session-1");
    const parsed = validateSketch(JSON.parse(JSON.stringify(sketch)));
    expect(parsed.strokes).toHaveLength(5);
    expect(parsed.strokes.map((s) => s.points[0]![0])).toEqual([0, 10, 20, 30, 40]);
  });

  it("restarting a session clears committed strokes and rebases time", () => {
    const buffer = freshBuffer();
    drawStroke(buffer, [[1, 1], [2, 2]], 5000);
    buffer.startSession(9000);
    expect(buffer.strokeCount).toBe(0);
    const stroke = drawStroke(buffer, [[1, 1], [2, 2]], 9400);
    expect(stroke!.t_start).toBe(400);
  });
});

describe("mapToCanvas", () => {
  it("maps element corners to canvas corners", () => {
    const rect = { left: 100, top: 50, width: 256, height: 256 };
    expect(mapToCanvas(rect, 100, 50)).toEqual([0, 0]);
    expect(mapToCanvas(rect, 356, 306)).toEqual([512, 512]);
    expect(mapToCanvas(rect, 228, 178)).toEqual([256, 256]);
  });

  it("handles a zero-sized rect without dividing by zero", () => {
    const rect = { left: 0, top: 0, width: 0, height: 0 };
    expect(mapToCanvas(rect, 7, 9)).toEqual([7, 9]);
  });
});
