/** Browser bootstrap: wires the client, form state, and renderers to the
 * page. This is the only module that touches the DOM.
 */

import { ApiError, NetworkError, RatingsClient, type TaskPayload } from "./api.js";
import { FormState } from "./form.js";
import { renderAspectsForm, renderCompletion, renderMessage, renderSegments } from "./render.js";

const client = new RatingsClient("", (url, init) => fetch(url, init));

let raterId = "";
let current: TaskPayload | null = null;
let form = new FormState();

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node;
}

function setMessage(kind: "error" | "info", text: string): void {
  el("message").innerHTML = text ? renderMessage(kind, text) : "";
}

function updateSubmitGate(): void {
  (el("submit") as HTMLButtonElement).disabled = !form.isComplete();
}

function wireRadios(): void {
  for (const input of el("task").querySelectorAll<HTMLInputElement>("input[type=radio]")) {
    input.addEventListener("change", () => {
      const aspectKey = input.name.replace(/^aspect-/, "");
      form.select(aspectKey, Number(input.value));
      updateSubmitGate();
    });
  }
}

function showTask(task: TaskPayload): void {
  current = task;
  form = new FormState();
  el("task").innerHTML =
    `<h2>Story ${escapeAttr(task.story_id)}</h2>` +
    renderSegments(task.segments) +
    renderAspectsForm(task.aspects, form);
  el("actions").hidden = false;
  wireRadios();
  updateSubmitGate();
  setMessage("info", "");
}

function escapeAttr(text: string): string {
  return text.replace(/[<>&"']/g, "");
}

async function loadNext(): Promise<void> {
  try {
    const result = await client.nextTask(raterId);
    if ("exhausted" in result) {
      current = null;
      el("task").innerHTML = renderCompletion(result.reason);
      el("actions").hidden = true;
      return;
    }
    showTask(result);
  } catch (err) {
    if (err instanceof NetworkError) {
      setMessage("error", "Could not reach the rating service. Check the connection and retry.");
      (el("retry") as HTMLButtonElement).hidden = false;
    } else {
      setMessage("error", String(err));
    }
  }
}

async function submit(): Promise<void> {
  if (!current || !form.isComplete()) {
    return;
  }
  try {
    await client.submit(form.toSubmission(current.task_id, raterId));
    await loadNext();
  } catch (err) {
    // On any failure the selections stay exactly as the rater left them.
    if (err instanceof ApiError) {
      setMessage("error", err.detail);
    } else if (err instanceof NetworkError) {
      setMessage("error", "Submission did not reach the service. Your selections are kept; retry.");
    } else {
      setMessage("error", String(err));
    }
  }
}

function start(): void {
  const input = el("rater-id") as HTMLInputElement;
  raterId = input.value.trim();
  if (!raterId) {
    setMessage("error", "Enter a rater id to begin.");
    return;
  }
  el("enter").hidden = true;
  void loadNext();
}

el("start").addEventListener("click", start);
el("submit").addEventListener("click", () => void submit());
el("retry").addEventListener("click", () => {
  (el("retry") as HTMLButtonElement).hidden = true;
  void loadNext();
});
