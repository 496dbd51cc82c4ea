// App assembly: practice stage, then the formal drawing task with a fixed
// task sentence (no other hints during drawing), the questionnaire, live
// 12-frame preview, and submission + assessment display.

import { ApiClient } from "./api.js";
import { Phq9Form, PHQ9_CHOICES, PHQ9_ITEMS } from "./phq9.js";
import { paintFrame, paintServerFrame } from "./preview.js";
import { submissionSchema } from "./schema.js";
import { CanvasStrokeBuffer, type Rgb } from "./strokeBuffer.js";
import { renderStrip, wireCanvas } from "./ui.js";

interface AppConfig {
  serviceBaseUrl: string;
  timerSeconds: number; // 0 disables the countdown
  palette: Rgb[];
  widths: number[];
}

const TASK_SENTENCE = "Draw a person picking an apple from a tree.";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function loadConfig(): Promise<AppConfig> {
  const resp = await fetch("./config.json");
  return (await resp.json()) as AppConfig;
}

function buildPalette(config: AppConfig, buffer: CanvasStrokeBuffer) {
  const palette = el<HTMLDivElement>("palette");
  for (const color of config.palette) {
    const button = document.createElement("button");
    button.className = "swatch";
    button.style.background = `rgb(${color[0]}, ${color[1]}, ${color[2]})`;
    button.addEventListener("click", () => {
      buffer.color = [...color];
      palette.querySelectorAll(".swatch").forEach((b) => b.classList.remove("active"));
      button.classList.add("active");
    });
    palette.append(button);
  }
  const width = el<HTMLInputElement>("width");
  width.addEventListener("input", () => {
    buffer.width = Number(width.value);
  });
}

function buildPhq9(form: Phq9Form, onChange: () => void) {
  const root = el<HTMLDivElement>("phq9");
  PHQ9_ITEMS.forEach((question, i) => {
    const row = document.createElement("fieldset");
    const legend = document.createElement("legend");
    legend.textContent = `${i + 1}. ${question}`;
    row.append(legend);
    PHQ9_CHOICES.forEach((choice, value) => {
      const label = document.createElement("label");
      const input = document.createElement("input");
      input.type = "radio";
      input.name = `item-${i}`;
      input.value = String(value);
      input.addEventListener("change", () => {
        form.setAnswer(i, value);
        onChange();
      });
      label.append(input, ` ${choice}`);
      row.append(label);
    });
    root.append(row);
  });
}

function startTimer(seconds: number, onExpire: () => void) {
  if (seconds <= 0) return;
  const display = el<HTMLSpanElement>("timer");
  let remaining = seconds;
  display.textContent = `${remaining}s`;
  const tick = setInterval(() => {
    remaining -= 1;
    display.textContent = `${remaining}s`;
    if (remaining <= 0) {
      clearInterval(tick);
      onExpire();
    }
  }, 1000);
}

async function boot() {
  const config = await loadConfig();
  const api = new ApiClient(config.serviceBaseUrl);
  const buffer = new CanvasStrokeBuffer();
  const phq9 = new Phq9Form();
  let stage: "practice" | "formal" = "practice";

  el<HTMLParagraphElement>("task").textContent =
    stage === "practice" ? "Practice canvas: try the pen, then continue." : TASK_SENTENCE;

  const board = el<HTMLCanvasElement>("board");
  const strip = el<HTMLDivElement>("strip");
  const status = el<HTMLParagraphElement>("status");
  const submit = el<HTMLButtonElement>("submit");

  const refresh = () => {
    const ready = stage === "formal" && buffer.strokeCount >= 1 && phq9.isComplete;
    submit.disabled = !ready;
    el<HTMLSpanElement>("phq9-total").textContent = String(phq9.total);
    const ctx = board.getContext("2d");
    if (ctx) {
      ctx.fillStyle = "#ffffff";
      ctx.fillRect(0, 0, board.width, board.height);
      paintFrame(board, buffer.committed());
    }
    renderStrip(strip, buffer.strokeCount >= 1 ? buffer.toSketch("live") : null);
  };

  buffer.startSession(performance.now());
  wireCanvas(board, buffer, () => performance.now(), refresh);
  buildPalette(config, buffer);
  buildPhq9(phq9, refresh);

  el<HTMLButtonElement>("undo").addEventListener("click", () => {
    buffer.undo();
    refresh();
  });

  el<HTMLButtonElement>("continue").addEventListener("click", () => {
    // Leaving practice clears the canvas and starts the formal task (and
    // its countdown, when configured).
    stage = "formal";
    buffer.startSession(performance.now());
    el<HTMLParagraphElement>("task").textContent = TASK_SENTENCE;
    el<HTMLButtonElement>("continue").hidden = true;
    startTimer(config.timerSeconds, () => {
      status.textContent = "Time is up; please submit.";
    });
    refresh();
  });

  submit.addEventListener("click", async () => {
    submit.disabled = true;
    status.textContent = "Submitting…";
    try {
      const body = submissionSchema.parse({
        participant_ref: `web-${Date.now().toString(36)}`,
        sketch: buffer.toSketch(`web-${Date.now().toString(36)}`),
        phq9: phq9.toResponse() ?? undefined,
        client_version: "ppat-frontend/0.1.0",
      });
      const { record_id } = await api.submit(body);
      status.textContent = `Stored as record ${record_id}. Assessing…`;

      const assessment = await api.assess(record_id);
      status.textContent =
        `Assessment: ${assessment.predicted_label} ` +
        `(p=${assessment.probability_depressed.toFixed(3)})`;

      try {
        const preview = await api.preview(record_id);
        const cells = strip.querySelectorAll("canvas");
        preview.frames.forEach((frame, i) => {
          const cell = cells[i];
          if (cell) paintServerFrame(cell as HTMLCanvasElement, frame);
        });
      } catch {
        status.textContent += " (preview unavailable, showing local frames)";
      }
    } catch (err) {
      status.textContent = `Submission failed: ${(err as Error).message}`;
      submit.disabled = false;
    }
  });

  refresh();
}

boot().catch((err) => {
  document.body.textContent = `Failed to start: ${err}`;
});
