// Questionnaire form state: completion gating, display total, and the
// absence of any client-side interpretation.

import { describe, expect, it } from "vitest";
import { Phq9Form, PHQ9_CHOICES, PHQ9_ITEMS } from "../src/phq9.js";

describe("Phq9Form", () => {
  it("has nine items and four choices", () => {
    expect(PHQ9_ITEMS).toHaveLength(9);
    expect(PHQ9_CHOICES).toHaveLength(4);
  });

  it("is incomplete until every item is answered", () => {
    const form = new Phq9Form();
    expect(form.isComplete).toBe(false);
    for (let i = 0; i < 8; i++) form.setAnswer(i, 1);
    expect(form.isComplete).toBe(false);
    expect(form.toResponse()).toBeNull();
    form.setAnswer(8, 1);
    expect(form.isComplete).toBe(true);
  });

  it("computes the display total, including all zeros", () => {
    const form = new Phq9Form();
    for (let i = 0; i < 9; i++) form.setAnswer(i, 0);
    expect(form.total).toBe(0);
    form.setAnswer(0, 3);
    form.setAnswer(1, 2);
    expect(form.total).toBe(5);
  });

  it("re-answering an item replaces the previous value", () => {
    const form = new Phq9Form();
    form.setAnswer(4, 3);
    form.setAnswer(4, 1);
    expect(form.answer(4)).toBe(1);
    expect(form.total).toBe(1);
  });

  it("exports items only, no client-side label at any total", () => {
    const form = new Phq9Form();
    const answers = [2, 1, 2, 1, 0, 1, 1, 1, 1]; // total 10, the usual threshold
    answers.forEach((v, i) => form.setAnswer(i, v));
    const response = form.toResponse();
    expect(response).toEqual({ items: answers });
    expect(Object.keys(response!)).toEqual(["items"]);
  });

  it("rejects out-of-range items and values", () => {
    const form = new Phq9Form();
    expect(() => form.setAnswer(9, 0)).toThrow(RangeError);
    expect(() => form.setAnswer(-1, 0)).toThrow(RangeError);
    expect(() => form.setAnswer(0, 4)).toThrow(RangeError);
    expect(() => form.setAnswer(0, 1.5)).toThrow(RangeError);
  });
});
