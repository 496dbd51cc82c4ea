// Frame models for the 12-thumbnail strip: prefix slices at the cumulative
// counts, left-to-right indexing, placeholders, and the client/server
// count comparison.

import { describe, expect, it } from "vitest";
import { buildFrameModels, countsMatch, placeholderModels } from "../src/preview.js";
import type { Sketch, Stroke } from "../src/schema.js";

function sketchWith(n: number): Sketch {
  const strokes: Stroke[] = Array.from({ length: n }, (_, i) => ({
    points: [[i, i], [i + 1, i + 1]],
    color: [0, 0, 0],
    width: 2,
    t_start: i * 10,
    t_end: i * 10 + 5,
  }));
  return { sketch_id: "s", canvas_size: 512, strokes };
}

describe("buildFrameModels", () => {
  it("slices 24 strokes at counts 2,4,...,24", () => {
    const models = buildFrameModels(sketchWith(24));
    expect(models.map((m) => m.count)).toEqual([2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24]);
    expect(models.map((m) => m.index)).toEqual([1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]);
    models.forEach((m) => expect(m.strokes).toHaveLength(m.count));
  });

  it("frame 12 holds the full drawing", () => {
    const sketch = sketchWith(17);
    const models = buildFrameModels(sketch);
    expect(models[11]!.strokes).toEqual(sketch.strokes);
  });

  it("frames 7..12 of a 7-stroke sketch are identical", () => {
    const models = buildFrameModels(sketchWith(7));
    for (let i = 6; i < 12; i++) {
      expect(models[i]!.strokes).toEqual(models[6]!.strokes);
    }
  });

  it("each frame is a prefix of the next", () => {
    const models = buildFrameModels(sketchWith(30));
    for (let i = 1; i < models.length; i++) {
      const prev = models[i - 1]!.strokes;
      expect(models[i]!.strokes.slice(0, prev.length)).toEqual(prev);
    }
  });
});

describe("placeholders and count comparison", () => {
  it("renders 12 empty placeholder frames", () => {
    const models = placeholderModels();
    expect(models).toHaveLength(12);
    models.forEach((m, i) => {
      expect(m.index).toBe(i + 1);
      expect(m.strokes).toHaveLength(0);
    });
  });

  it("countsMatch compares element-wise", () => {
    expect(countsMatch([1, 2, 3], [1, 2, 3])).toBe(true);
    expect(countsMatch([1, 2, 3], [1, 2, 4])).toBe(false);
    expect(countsMatch([1, 2], [1, 2, 3])).toBe(false);
  });
});
