import { describe, expect, it } from "vitest";

import { ASPECT_KEYS, ASPECTS } from "../src/aspects.js";
import { FormState, IncompleteFormError } from "../src/form.js";

const EXPECTED_LABELS = [
  "the story is focused",
  "the story has good structure and coherence",
  "would you share this story",
  "do you think this story was written by a human",
  "the story is visually grounded",
  "the story is detailed",
];

describe("aspect constants", () => {
  it("carries the six labels verbatim in order", () => {
    expect(ASPECTS.map((a) => a.label)).toEqual(EXPECTED_LABELS);
    expect(ASPECT_KEYS).toEqual(["a", "b", "c", "d", "e", "f"]);
  });
});

describe("FormState completeness gate", () => {
  it("blocks submission until all six aspects are selected", () => {
    const form = new FormState();
    expect(form.isComplete()).toBe(false);
    for (const key of ["a", "b", "c", "d", "e"]) {
      form.select(key, 3);
    }
    expect(form.isComplete()).toBe(false);
    expect(form.missing()).toEqual(["f"]);
    expect(() => form.toSubmission("t1", "r1")).toThrow(IncompleteFormError);
    expect(() => form.toSubmission("t1", "r1")).toThrow(/aspect f/);

    form.select("f", 5);
    expect(form.isComplete()).toBe(true);
    const submission = form.toSubmission("t1", "r1");
    expect(submission).toEqual({
      task_id: "t1",
      rater_id: "r1",
      scores: { a: 3, b: 3, c: 3, d: 3, e: 3, f: 5 },
    });
  });

  it("reselecting an aspect overwrites the previous score", () => {
    const form = new FormState();
    form.select("a", 2);
    form.select("a", 4);
    expect(form.selected("a")).toBe(4);
  });

  it("reset clears every selection", () => {
    const form = new FormState();
    for (const key of ASPECT_KEYS) {
      form.select(key, 1);
    }
    form.reset();
    expect(form.isComplete()).toBe(false);
    expect(form.snapshot()).toEqual({});
  });
});

describe("FormState range guard", () => {
  it("rejects out-of-range and non-integer scores without storing them", () => {
    const form = new FormState();
    for (const bad of [0, 6, -1, 2.5, Number.NaN, Number.POSITIVE_INFINITY]) {
      expect(() => form.select("a", bad)).toThrow(RangeError);
      expect(form.selected("a")).toBeUndefined();
    }
    expect(() => form.select("a", "3" as unknown as number)).toThrow(RangeError);
    expect(form.selected("a")).toBeUndefined();
  });

  it("rejects unknown aspect keys", () => {
    const form = new FormState();
    expect(() => form.select("g", 3)).toThrow(RangeError);
    expect(() => form.select("", 3)).toThrow(RangeError);
    expect(form.snapshot()).toEqual({});
  });

  it("never lets an out-of-range value reach a submission", () => {
    const form = new FormState();
    const candidates = [-3, 0, 1, 2, 2.5, 3, 4, 5, 6, 17, Number.NaN];
    let step = 0;
    for (let round = 0; round < 40; round += 1) {
      for (const key of ASPECT_KEYS) {
        const value = candidates[(step * 7 + round) % candidates.length]!;
        step += 1;
        try {
          form.select(key, value);
        } catch (err) {
          expect(err).toBeInstanceOf(RangeError);
        }
      }
    }
    for (const key of ASPECT_KEYS) {
      form.select(key, 1 + (step++ % 5));
    }
    const scores = form.toSubmission("t", "r").scores;
    for (const key of ASPECT_KEYS) {
      const value = scores[key]!;
      expect(Number.isInteger(value)).toBe(true);
      expect(value).toBeGreaterThanOrEqual(1);
      expect(value).toBeLessThanOrEqual(5);
    }
  });
});
