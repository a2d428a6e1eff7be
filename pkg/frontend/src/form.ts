/** Likert form state machine.
 *
 * Selections only ever hold integers in SCORE_MIN..SCORE_MAX for known
 * aspect keys; anything else is rejected before it is stored, so no
 * reachable state can produce an out-of-range submission. Submissions
 * are only built from a complete form. Errors during submission leave
 * the state untouched; only an explicit reset clears it.
 */

import { ASPECT_KEYS, SCORE_MAX, SCORE_MIN } from "./aspects.js";
import type { RatingSubmission } from "./api.js";

export class IncompleteFormError extends Error {
  constructor(missing: readonly string[]) {
    super(`form incomplete: no score for aspect ${missing.join(", ")}`);
    this.name = "IncompleteFormError";
  }
}

export class FormState {
  private readonly selections = new Map<string, number>();

  select(aspectKey: string, score: number): void {
    if (!ASPECT_KEYS.includes(aspectKey)) {
      throw new RangeError(`unknown aspect ${JSON.stringify(aspectKey)}`);
    }
    if (!Number.isInteger(score) || score < SCORE_MIN || score > SCORE_MAX) {
      throw new RangeError(
        `score for aspect ${aspectKey} must be an integer in ${SCORE_MIN}..${SCORE_MAX}, got ${String(score)}`,
      );
    }
    this.selections.set(aspectKey, score);
  }

  selected(aspectKey: string): number | undefined {
    return this.selections.get(aspectKey);
  }

  missing(): string[] {
    return ASPECT_KEYS.filter((key) => !this.selections.has(key));
  }

  isComplete(): boolean {
    return this.missing().length === 0;
  }

  snapshot(): Record<string, number> {
    return Object.fromEntries(this.selections);
  }

  toSubmission(taskId: string, raterId: string): RatingSubmission {
    const missing = this.missing();
    if (missing.length > 0) {
      throw new IncompleteFormError(missing);
    }
    const scores: Record<string, number> = {};
    for (const key of ASPECT_KEYS) {
      scores[key] = this.selections.get(key)!;
    }
    return { task_id: taskId, rater_id: raterId, scores };
  }

  reset(): void {
    this.selections.clear();
  }
}
