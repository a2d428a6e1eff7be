/** The six rated aspects, in display order.
 *
 * The labels are part of the wire contract with the rating service and
 * must match it verbatim; the tests pin them.
 */

export interface AspectLabel {
  readonly key: string;
  readonly label: string;
}

export const ASPECTS: readonly AspectLabel[] = [
  { key: "a", label: "the story is focused" },
  { key: "b", label: "the story has good structure and coherence" },
  { key: "c", label: "would you share this story" },
  { key: "d", label: "do you think this story was written by a human" },
  { key: "e", label: "the story is visually grounded" },
  { key: "f", label: "the story is detailed" },
];

export const ASPECT_KEYS: readonly string[] = ASPECTS.map((a) => a.key);

export const SCORE_MIN = 1;
export const SCORE_MAX = 5;
