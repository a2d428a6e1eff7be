/** Pure HTML builders.
 *
 * Everything interpolated into markup is escaped here; these functions
 * are the only place the app turns data into HTML, which keeps the
 * escaping auditable and lets the tests run without a DOM.
 */

import { SCORE_MAX, SCORE_MIN, type AspectLabel } from "./aspects.js";
import type { FormState } from "./form.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function renderSegments(segments: readonly string[]): string {
  const items = segments
    .map(
      (text, i) => `
  <li class="segment" data-position="${i + 1}">
    <div class="image-placeholder" aria-hidden="true">image ${i + 1}</div>
    <p>${escapeHtml(text)}</p>
  </li>`,
    )
    .join("");
  return `<ol class="segments">${items}\n</ol>`;
}

export function renderAspectsForm(aspects: readonly AspectLabel[], state: FormState): string {
  const fields = aspects
    .map((aspect) => {
      const inputs = [];
      for (let score = SCORE_MIN; score <= SCORE_MAX; score += 1) {
        const checked = state.selected(aspect.key) === score ? " checked" : "";
        inputs.push(
          `<label class="score"><input type="radio" name="aspect-${escapeHtml(aspect.key)}" ` +
            `value="${score}"${checked}> ${score}</label>`,
        );
      }
      return `
  <fieldset class="aspect" data-aspect="${escapeHtml(aspect.key)}">
    <legend>${escapeHtml(aspect.key)}) ${escapeHtml(aspect.label)}</legend>
    ${inputs.join("\n    ")}
  </fieldset>`;
    })
    .join("");
  return `<div class="aspects">${fields}\n</div>`;
}

export function renderCompletion(reason: string): string {
  const text =
    reason === "rater_complete"
      ? "You have rated every available story. Thank you!"
      : "All stories have received enough ratings. Thank you!";
  return `<div class="completion"><h2>Done</h2><p>${escapeHtml(text)}</p></div>`;
}

export function renderMessage(kind: "error" | "info", text: string): string {
  return `<p class="message ${kind}">${escapeHtml(text)}</p>`;
}
