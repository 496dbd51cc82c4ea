// The 12-frame strip: client-side frame models computed from the committed
// strokes (live preview while drawing), and painting of either those models
// or the server's rendered frames onto small canvases.

import { cumulativeStrokeCounts, NUM_FRAMES } from "./decompose.js";
import type { PreviewFrame } from "./api.js";
import { CANVAS_SIZE, type Sketch, type Stroke } from "./schema.js";

export interface FrameModel {
  index: number; // 1-based, displayed left-to-right, top-to-bottom
  count: number;
  strokes: readonly Stroke[];
}

export function buildFrameModels(sketch: Sketch): FrameModel[] {
  const counts = cumulativeStrokeCounts(sketch.strokes.length);
  return counts.map((count, i) => ({
    index: i + 1,
    count,
    strokes: sketch.strokes.slice(0, count),
  }));
}

function toCss([r, g, b]: readonly number[]): string {
  return `rgb(${r}, ${g}, ${b})`;
}

// Paint one frame model onto a canvas; no-op where 2D contexts are
// unavailable (non-browser DOM), keeping the data path testable.
export function paintFrame(canvas: HTMLCanvasElement, strokes: readonly Stroke[]): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const scale = canvas.width / CANVAS_SIZE;
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  ctx.lineCap = "round";
  ctx.lineJoin = "round";
  for (const stroke of strokes) {
    ctx.strokeStyle = toCss(stroke.color);
    ctx.fillStyle = toCss(stroke.color);
    ctx.lineWidth = Math.max(1, stroke.width * scale);
    const [first, ...rest] = stroke.points;
    if (!first) continue;
    if (rest.length === 0) {
      ctx.beginPath();
      ctx.arc(first[0] * scale, first[1] * scale, Math.max(1, (stroke.width * scale) / 2), 0, 2 * Math.PI);
      ctx.fill();
      continue;
    }
    ctx.beginPath();
    ctx.moveTo(first[0] * scale, first[1] * scale);
    for (const [x, y] of rest) ctx.lineTo(x * scale, y * scale);
    ctx.stroke();
  }
}

// Paint a server-rendered RGB frame (base64) onto a canvas.
export function paintServerFrame(canvas: HTMLCanvasElement, frame: PreviewFrame): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const raw = atob(frame.pixels_b64);
  const image = ctx.createImageData(frame.width, frame.height);
  for (let i = 0, j = 0; i < raw.length; i += 3, j += 4) {
    image.data[j] = raw.charCodeAt(i);
    image.data[j + 1] = raw.charCodeAt(i + 1);
    image.data[j + 2] = raw.charCodeAt(i + 2);
    image.data[j + 3] = 255;
  }
  canvas.width = frame.width;
  canvas.height = frame.height;
  ctx.putImageData(image, 0, 0);
}

export function placeholderModels(): FrameModel[] {
  return Array.from({ length: NUM_FRAMES }, (_, i) => ({
    index: i + 1,
    count: 0,
    strokes: [],
  }));
}

// Cross-component consistency: the live client strip must agree with the
// server's decomposition for the submitted sketch.
export function countsMatch(client: number[], server: number[]): boolean {
  return client.length === server.length && client.every((c, i) => c === server[i]);
}
