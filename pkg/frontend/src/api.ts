/** HTTP client for the rating service.
 *
 * The fetch implementation is injected so tests can script responses.
 * Every task payload passes through a blindness guard that rejects any
 * object carrying a "source" field anywhere: the rater must never be
 * able to learn whether a story is model output or human written.
 */

import type { AspectLabel } from "./aspects.js";

export interface TaskPayload {
  task_id: string;
  story_id: string;
  segments: string[];
  aspects: AspectLabel[];
}

export interface ExhaustedPayload {
  exhausted: true;
  reason: string;
}

export interface RatingSubmission {
  task_id: string;
  rater_id: string;
  scores: Record<string, number>;
}

export interface RatingAck {
  status: "ok";
  task_id: string;
  rater_id: string;
}

/** Response shape the client needs; satisfied by the browser Response. */
export interface ResponseLike {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<ResponseLike>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`request failed (${status}): ${detail}`);
    this.name = "ApiError";
  }
}

export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(`network failure: ${String(cause)}`);
    this.name = "NetworkError";
  }
}

export class BlindnessError extends Error {
  constructor(path: string) {
    super(`task payload leaks a source tag at ${path}`);
    this.name = "BlindnessError";
  }
}

export function assertBlind(value: unknown, path = "$"): void {
  if (Array.isArray(value)) {
    value.forEach((item, i) => assertBlind(item, `${path}[${i}]`));
    return;
  }
  if (value !== null && typeof value === "object") {
    for (const [key, child] of Object.entries(value)) {
      if (key === "source") {
        throw new BlindnessError(`${path}.${key}`);
      }
      assertBlind(child, `${path}.${key}`);
    }
  }
}

async function detailOf(response: ResponseLike): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") {
      return body.detail;
    }
    if (body.detail !== undefined) {
      return JSON.stringify(body.detail);
    }
  } catch {
    // fall through to the generic message
  }
  return `HTTP ${response.status}`;
}

export class RatingsClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike,
  ) {}

  private async request(url: string, init?: RequestInit): Promise<unknown> {
    let response: ResponseLike;
    try {
      response = await this.fetchImpl(url, init);
    } catch (cause) {
      throw new NetworkError(cause);
    }
    if (!response.ok) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return response.json();
  }

  async nextTask(raterId: string): Promise<TaskPayload | ExhaustedPayload> {
    const url = `${this.baseUrl}/task?rater=${encodeURIComponent(raterId)}`;
    const body = (await this.request(url)) as Record<string, unknown>;
    if (body.exhausted === true) {
      return { exhausted: true, reason: String(body.reason) };
    }
    assertBlind(body);
    const task = body as unknown as TaskPayload;
    if (!Array.isArray(task.segments) || task.segments.length !== 5) {
      throw new ApiError(200, "task payload must carry exactly 5 segments");
    }
    return task;
  }

  async submit(submission: RatingSubmission): Promise<RatingAck> {
    const body = (await this.request(`${this.baseUrl}/rating`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(submission),
    })) as RatingAck;
    return body;
  }
}
