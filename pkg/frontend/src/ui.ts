// DOM wiring kept separate from app assembly so a scripted session can
// drive the same listeners the browser does.

import { CanvasStrokeBuffer, mapToCanvas } from "./strokeBuffer.js";
import { buildFrameModels, paintFrame, placeholderModels, type FrameModel } from "./preview.js";
import type { Sketch } from "./schema.js";

export interface PointerLike {
  clientX: number;
  clientY: number;
}

// Attach pointer listeners that feed the buffer in 512-unit canvas space.
// Returns the handlers for direct invocation in tests.
export function wireCanvas(
  canvas: HTMLElement,
  buffer: CanvasStrokeBuffer,
  now: () => number = () => performance.now(),
  onChange: () => void = () => {},
) {
  const toCanvas = (ev: PointerLike): [number, number] =>
    mapToCanvas(canvas.getBoundingClientRect(), ev.clientX, ev.clientY);

  const down = (ev: Event) => {
    const [x, y] = toCanvas(ev as unknown as PointerLike);
    buffer.pointerDown(x, y, now());
  };
  const move = (ev: Event) => {
    const [x, y] = toCanvas(ev as unknown as PointerLike);
    buffer.pointerMove(x, y, now());
  };
  const up = () => {
    if (buffer.pointerUp(now())) onChange();
  };

  canvas.addEventListener("pointerdown", down);
  canvas.addEventListener("pointermove", move);
  canvas.addEventListener("pointerup", up);
  canvas.addEventListener("pointerleave", up);
  return { down, move, up };
}

// Render the 12-frame strip into a container; placeholder frames when the
// sketch is empty or a fetch failed.
export function renderStrip(container: HTMLElement, sketch: Sketch | null): FrameModel[] {
  const models = sketch && sketch.strokes.length >= 1
    ? buildFrameModels(sketch)
    : placeholderModels();
  container.textContent = "";
  for (const model of models) {
    const cell = container.ownerDocument.createElement("figure");
    cell.className = "frame";
    const canvas = container.ownerDocument.createElement("canvas");
    canvas.width = 96;
    canvas.height = 96;
    paintFrame(canvas, model.strokes);
    const label = container.ownerDocument.createElement("figcaption");
    label.textContent = model.count > 0 ? `${model.index} (${model.count})` : `${model.index}`;
    cell.append(canvas, label);
    container.append(cell);
  }
  return models;
}
