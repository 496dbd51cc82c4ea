// Sketch and questionnaire schemas mirroring the service's validation, so a
// payload that passes here is accepted by the server verbatim.

import { z } from "zod";

export const CANVAS_SIZE = 512;

export const pointSchema = z.tuple([
  z.number().finite().min(0).max(CANVAS_SIZE),
  z.number().finite().min(0).max(CANVAS_SIZE),
]);

export const strokeSchema = z.object({
  points: z.array(pointSchema).min(1),
  color: z.tuple([
    z.number().int().min(0).max(255),
    z.number().int().min(0).max(255),
    z.number().int().min(0).max(255),
  ]),
  width: z.number().positive(),
  t_start: z.number().int().min(0),
  t_end: z.number().int().min(0),
}).refine((s) => s.t_start <= s.t_end, {
  message: "t_start must be <= t_end",
  path: ["t_start"],
});

export const sketchSchema = z.object({
  sketch_id: z.string().min(1),
  canvas_size: z.literal(CANVAS_SIZE),
  strokes: z.array(strokeSchema).min(1),
}).refine(
  (s) => s.strokes.every((st, i) => i === 0 || st.t_start >= s.strokes[i - 1]!.t_start),
  { message: "stroke start times must be non-decreasing", path: ["strokes"] },
);

export const phq9Schema = z.object({
  items: z.array(z.number().int().min(0).max(3)).length(9),
});

export const submissionSchema = z.object({
  participant_ref: z.string().min(1),
  sketch: sketchSchema,
  phq9: phq9Schema.optional(),
  client_version: z.string().optional(),
});

export type Point = z.infer<typeof pointSchema>;
export type Stroke = z.infer<typeof strokeSchema>;
export type Sketch = z.infer<typeof sketchSchema>;
export type Phq9Response = z.infer<typeof phq9Schema>;
export type SubmissionBody = z.infer<typeof submissionSchema>;

export function validateSketch(value: unknown): Sketch {
  return sketchSchema.parse(value);
}
