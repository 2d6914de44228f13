import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, FetchLike } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

const ack = { ok: true, duplicate: false, qc_state: "active" };

/** Records every request and replays a scripted list of outcomes. */
function scriptedFetch(
  outcomes: (Response | Error)[],
): { fetchFn: FetchLike; calls: { input: string; body: unknown }[] } {
  const calls: { input: string; body: unknown }[] = [];
  const fetchFn: FetchLike = async (input, init) => {
    calls.push({
      input,
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    });
    const outcome = outcomes.shift();
    if (!outcome) throw new Error("unexpected request");
    if (outcome instanceof Error) throw outcome;
    return outcome;
  };
  return { fetchFn, calls };
}

describe("ApiClient", () => {
  it("retries a submission after a network failure with the same token", async () => {
    const { fetchFn, calls } = scriptedFetch([
      new TypeError("network down"),
      jsonResponse(ack),
    ]);
    const client = new ApiClient("http://x", fetchFn);
    const result = await client.submitAnnotation("w1", "m:d01", 2);
    expect(result.ok).toBe(true);
    expect(calls).toHaveLength(2);
    expect(calls[0]?.body).toEqual(calls[1]?.body);
    expect(calls[1]?.body).toMatchObject({
      worker_id: "w1",
      item_id: "m:d01",
      chosen_pos: 2,
      token: "w1:m:d01",
    });
  });

  it("treats a duplicate acknowledgement as success", async () => {
    const { fetchFn } = scriptedFetch([
      jsonResponse({ ...ack, duplicate: true }),
    ]);
    const client = new ApiClient("http://x", fetchFn);
    const result = await client.submitAnnotation("w1", "m:d01", 2);
    expect(result.duplicate).toBe(true);
  });

  it("does not retry when the server rejects the submission", async () => {
    const { fetchFn, calls } = scriptedFetch([
      jsonResponse({ detail: "no active lease" }, 409),
    ]);
    const client = new ApiClient("http://x", fetchFn);
    await expect(client.submitAnnotation("w1", "m:d01", 2)).rejects.toThrow(
      ApiError,
    );
    expect(calls).toHaveLength(1);
  });

  it("gives up after repeated network failures", async () => {
    const { fetchFn, calls } = scriptedFetch([
      new TypeError("down"),
      new TypeError("down"),
      new TypeError("down"),
    ]);
    const client = new ApiClient("http://x", fetchFn);
    await expect(client.submitAnnotation("w1", "m:d01", 0)).rejects.toThrow(
      "down",
    );
    expect(calls).toHaveLength(3);
  });

  it("parses a blocked hit response delivered with status 403", async () => {
    const { fetchFn } = scriptedFetch([
      jsonResponse({ status: "blocked", qc_state: "failed" }, 403),
    ]);
    const client = new ApiClient("http://x", fetchFn);
    const response = await client.getHit("w1");
    expect(response.status).toBe("blocked");
  });

  it("rejects a hit payload that leaks the answer", async () => {
    const hit = {
      status: "ok",
      hit: {
        hit_id: "h",
        items: Array.from({ length: 5 }, (_, i) => ({
          item_id: `m:d${i}`,
          snippet: "s",
          topics: [["a"], ["b"], ["c"], ["d"]],
          intruder_pos: 1,
        })),
      },
    };
    const { fetchFn } = scriptedFetch([jsonResponse(hit)]);
    const client = new ApiClient("http://x", fetchFn);
    await expect(client.getHit("w1")).rejects.toThrow();
  });
});
