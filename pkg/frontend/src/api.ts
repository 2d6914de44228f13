/**
 * Thin typed client for the annotation service.
 *
 * Submissions carry an idempotency token and retry on network failure, so a
 * flaky connection produces exactly one persisted record: a retried request
 * that already landed is acknowledged as a duplicate by the server and
 * treated as success here.
 */

import {
  AnnotationAck,
  AnnotationAckSchema,
  ExportPayload,
  ExportSchema,
  HitResponse,
  HitResponseSchema,
  MoreResponseSchema,
  RatingAckSchema,
} from "./schemas.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

const MAX_ATTEMPTS = 3;
const RETRY_DELAY_MS = 150;

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike,
  ) {}

  private async get(path: string): Promise<unknown> {
    const res = await this.fetchFn(this.base + path);
    if (!res.ok && res.status !== 403) {
      throw new ApiError(`GET ${path} failed`, res.status);
    }
    return res.json();
  }

  /** POST with network-level retries; the caller supplies the dedup token. */
  private async post(path: string, body: unknown): Promise<unknown> {
    let lastError: unknown;
    for (let attempt = 0; attempt < MAX_ATTEMPTS; attempt++) {
      try {
        const res = await this.fetchFn(this.base + path, {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify(body),
        });
        if (!res.ok) {
          const detail = await res.text();
          throw new ApiError(`POST ${path}: ${detail}`, res.status);
        }
        return res.json();
      } catch (err) {
        if (err instanceof ApiError) throw err; // server answered; don't retry
        lastError = err;
        await sleep(RETRY_DELAY_MS * (attempt + 1));
      }
    }
    throw lastError;
  }

  async getHit(workerId: string): Promise<HitResponse> {
    const raw = await this.get(`/hit?worker_id=${encodeURIComponent(workerId)}`);
    return HitResponseSchema.parse(raw);
  }

  async viewMore(itemId: string, workerId: string): Promise<string> {
    const raw = await this.get(
      `/more?item_id=${encodeURIComponent(itemId)}&worker_id=${encodeURIComponent(workerId)}`,
    );
    return MoreResponseSchema.parse(raw).full_text;
  }

  async submitAnnotation(
    workerId: string,
    itemId: string,
    chosenPos: number,
  ): Promise<AnnotationAck> {
    const raw = await this.post("/annotation", {
      worker_id: workerId,
      item_id: itemId,
      chosen_pos: chosenPos,
      token: `${workerId}:${itemId}`,
    });
    return AnnotationAckSchema.parse(raw);
  }

  async submitRating(
    workerId: string,
    docId: string,
    modelName: string,
    topicId: number,
    rating: number,
  ): Promise<void> {
    const raw = await this.post("/rating", {
      worker_id: workerId,
      doc_id: docId,
      model_name: modelName,
      topic_id: topicId,
      rating,
    });
    RatingAckSchema.parse(raw);
  }

  async exportRun(): Promise<ExportPayload> {
    return ExportSchema.parse(await this.get("/export"));
  }
}
