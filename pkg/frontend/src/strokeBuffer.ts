// Pointer-capture buffer: pointer-down..move..up becomes one committed
// stroke. Committed strokes are append-only during a session; undo removes
// exactly the last one; timestamps are monotone milliseconds since the
// session started.

import { CANVAS_SIZE, type Sketch, type Stroke } from "./schema.js";

export type Rgb = [number, number, number];

export class CanvasStrokeBuffer {
  private strokes: Stroke[] = [];
  private pending: [number, number][] | null = null;
  private pendingStart = 0;
  private lastTime = 0;
  private sessionStart: number | null = null;

  color: Rgb = [0, 0, 0];
  width = 3;

  startSession(nowMs: number): void {
    this.sessionStart = nowMs;
    this.strokes = [];
    this.pending = null;
    this.lastTime = 0;
  }

  get active(): boolean {
    return this.sessionStart !== null;
  }

  get drawing(): boolean {
    return this.pending !== null;
  }

  // Clamp to the canvas and to monotone time so a jittery clock or a pointer
  // leaving the element can never produce an invalid stroke.
  private clampPoint(x: number, y: number): [number, number] {
    return [
      Math.min(Math.max(x, 0), CANVAS_SIZE),
      Math.min(Math.max(y, 0), CANVAS_SIZE),
    ];
  }

  private elapsed(nowMs: number): number {
    if (this.sessionStart === null) throw new Error("session not started");
    const t = Math.max(0, Math.round(nowMs - this.sessionStart));
    this.lastTime = Math.max(this.lastTime, t);
    return this.lastTime;
  }

  pointerDown(x: number, y: number, nowMs: number): void {
    if (!this.active || this.pending) return;
    this.pendingStart = this.elapsed(nowMs);
    this.pending = [this.clampPoint(x, y)];
  }

  pointerMove(x: number, y: number, nowMs: number): void {
    if (!this.pending) return;
    this.elapsed(nowMs);
    this.pending.push(this.clampPoint(x, y));
  }

  // A press-release with no movement commits a single-point dot.
  pointerUp(nowMs: number): Stroke | null {
    if (!this.pending) return null;
    const stroke: Stroke = {
      points: this.pending,
      color: [...this.color],
      width: this.width,
      t_start: this.pendingStart,
      t_end: this.elapsed(nowMs),
    };
    this.pending = null;
    this.strokes.push(stroke);
    return stroke;
  }

  undo(): Stroke | null {
    return this.strokes.pop() ?? null;
  }

  committed(): readonly Stroke[] {
    return this.strokes;
  }

  get strokeCount(): number {
    return this.strokes.length;
  }

  toSketch(sketchId: string): Sketch {
    return {
      sketch_id: sketchId,
      canvas_size: CANVAS_SIZE,
      strokes: this.strokes.map((s) => ({ ...s, points: [...s.points] })),
    };
  }
}

// Map a client-space position inside the element to 512-unit canvas space.
export function mapToCanvas(
  rect: { left: number; top: number; width: number; height: number },
  clientX: number,
  clientY: number,
): [number, number] {
  const scaleX = rect.width > 0 ? CANVAS_SIZE / rect.width : 1;
  const scaleY = rect.height > 0 ? CANVAS_SIZE / rect.height : 1;
  return [(clientX - rect.left) * scaleX, (clientY - rect.top) * scaleY];
}
