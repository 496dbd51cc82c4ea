// Nine-item questionnaire state. The client computes the total for display
// only; the server remains authoritative for any labeling, so nothing here
// interprets the score.

import type { Phq9Response } from "./schema.js";

export const PHQ9_ITEMS: readonly string[] = [
  "Little interest or pleasure in doing things",
  "Feeling down, depressed, or hopeless",
  "Trouble falling or staying asleep, or sleeping too much",
  "Feeling tired or having little energy",
  "Poor appetite or overeating",
  "Feeling bad about yourself, or that you are a failure",
  "Trouble concentrating on things",
  "Moving or speaking noticeably slowly, or the opposite",
  "Thoughts that you would be better off dead or of hurting yourself",
];

export const PHQ9_CHOICES: readonly string[] = [
  "Not at all",
  "Several days",
  "More than half the days",
  "Nearly every day",
];

export class Phq9Form {
  private answers: (number | null)[] = Array(PHQ9_ITEMS.length).fill(null);

  setAnswer(item: number, value: number): void {
    if (item < 0 || item >= PHQ9_ITEMS.length) {
      throw new RangeError(`item index ${item} out of range`);
    }
    if (!Number.isInteger(value) || value < 0 || value > 3) {
      throw new RangeError(`answer must be an integer 0..3, got ${value}`);
    }
    this.answers[item] = value;
  }

  answer(item: number): number | null {
    return this.answers[item] ?? null;
  }

  get isComplete(): boolean {
    return this.answers.every((a) => a !== null);
  }

  // Display-only running total over the answered items.
  get total(): number {
    return this.answers.reduce<number>((sum, a) => sum + (a ?? 0), 0);
  }

  toResponse(): Phq9Response | null {
    if (!this.isComplete) return null;
    return { items: this.answers.map((a) => a as number) };
  }
}
