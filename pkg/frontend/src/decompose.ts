// Client-side copy of the 12-step cumulative decomposition rule. Must stay
// in lockstep with the server; the integration test compares both outputs.

export const NUM_FRAMES = 12;

export function cumulativeStrokeCounts(totalStrokes: number): number[] {
  if (!Number.isInteger(totalStrokes) || totalStrokes < 1) {
    throw new RangeError(`need a positive stroke count, got ${totalStrokes}`);
  }
  const step = Math.floor(totalStrokes / NUM_FRAMES);
  const counts: number[] = [];
  for (let j = 1; j <= NUM_FRAMES; j++) {
    if (step < 1) {
      counts.push(Math.min(j, totalStrokes));
    } else if (j < NUM_FRAMES) {
      counts.push(j * step);
    } else {
      counts.push(totalStrokes);
    }
  }
  return counts;
}
