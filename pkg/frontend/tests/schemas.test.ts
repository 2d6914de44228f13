import { describe, expect, it } from "vitest";

import {
  AnnotationAckSchema,
  HitResponseSchema,
  ItemViewSchema,
} from "../src/schemas.js";

const validItem = {
  item_id: "m:d01",
  snippet: "A short snippet.",
  topics: [
    ["a", "b", "c"],
    ["d", "e", "f"],
    ["g", "h", "i"],
    ["j", "k", "l"],
  ],
};

function validHitResponse() {
  return {
    status: "ok",
    hit: {
      hit_id: "hit0",
      items: Array.from({ length: 5 }, (_, i) => ({
        ...validItem,
        item_id: `m:d0${i}`,
      })),
    },
  };
}

describe("payload schemas", () => {
  it("accepts a well-formed hit response", () => {
    const parsed = HitResponseSchema.parse(validHitResponse());
    if (parsed.status !== "ok") throw new Error("expected ok");
    expect(parsed.hit.items).toHaveLength(5);
  });

  it("accepts done and blocked responses", () => {
    expect(HitResponseSchema.parse({ status: "done" }).status).toBe("done");
    const blocked = HitResponseSchema.parse({
      status: "blocked",
      qc_state: "failed",
    });
    expect(blocked.status).toBe("blocked");
  });

  it("rejects an item that leaks the intruder position", () => {
    expect(() =>
      ItemViewSchema.parse({ ...validItem, intruder_pos: 2 }),
    ).toThrow();
  });

  it("rejects an item that leaks the control flag", () => {
    expect(() =>
      ItemViewSchema.parse({ ...validItem, is_control: true }),
    ).toThrow();
  });

  it("rejects a hit whose item carries an unexpected field", () => {
    const response = validHitResponse();
    (response.hit.items[0] as Record<string, unknown>)["answer"] = 1;
    expect(() => HitResponseSchema.parse(response)).toThrow();
  });

  it("rejects the wrong number of topic cards", () => {
    expect(() =>
      ItemViewSchema.parse({ ...validItem, topics: validItem.topics.slice(1) }),
    ).toThrow();
  });

  it("rejects unknown quality-control states", () => {
    expect(() =>
      AnnotationAckSchema.parse({ ok: true, duplicate: false, qc_state: "meh" }),
    ).toThrow();
  });
});
