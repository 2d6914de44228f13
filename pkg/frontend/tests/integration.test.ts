// @vitest-environment jsdom
/**
 * End-to-end run against a live annotation service (started by the global
 * setup): a scripted session works through a full HIT and the rating task in
 * the real DOM app, and the exported records must match the script exactly.
 */
import { describe, expect, inject, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { AnnotationApp, splitItemId } from "../src/app.js";
import { HitResponseSchema } from "../src/schemas.js";

const base = inject("annsvcUrl");
const realFetch = globalThis.fetch.bind(globalThis);
const client = new ApiClient(base, (input, init) => realFetch(input, init));

function progress(root: HTMLElement): string {
  return root.querySelector(".progress")?.textContent ?? "";
}

describe("live annotation session", () => {
  it("completes a HIT and a rating task; the export matches the script", async () => {
    // peek at the assignment first so the expected item order is known; the
    // lease makes the app's own request return the same HIT
    const assigned = await client.getHit("scripted-w");
    if (assigned.status !== "ok") throw new Error("expected an assignment");
    const itemIds = assigned.hit.items.map((item) => item.item_id);
    const choices = [1, 3, 0, 2, 0];
    const ratings = [3, 1, 0, 2];

    const root = document.createElement("main");
    document.body.replaceChildren(root);
    const app = new AnnotationApp(root, client, "scripted-w");
    await app.start();
    expect(progress(root)).toBe("Item 1 of 5");

    // the snippet expands to the full document on request
    root.querySelector<HTMLButtonElement>(".view-more")?.click();
    await vi.waitFor(() =>
      expect(root.querySelector(".snippet")?.textContent).toContain(
        "Full text",
      ),
    );

    for (let i = 0; i < 5; i++) {
      expect(progress(root)).toBe(`Item ${i + 1} of 5`);
      const cards = root.querySelectorAll<HTMLButtonElement>(".topic-card");
      expect(cards).toHaveLength(4);
      cards[choices[i] ?? 0]?.click();
      await vi.waitFor(() =>
        expect(progress(root)).toBe(
          i < 4 ? `Item ${i + 2} of 5` : "Rating task",
        ),
      );
    }

    ratings.forEach((value, cardIdx) => {
      document
        .querySelector<HTMLInputElement>(`#rate-${cardIdx}-${value}`)
        ?.click();
    });
    root.querySelector<HTMLButtonElement>(".submit-ratings")?.click();
    await vi.waitFor(() => expect(root.textContent).toContain("All done"));

    const exported = await client.exportRun();
    const mine = exported.annotations.filter(
      (a) => a.worker_id === "scripted-w",
    );
    expect(mine.map((a) => [a.item_id, a.chosen_pos])).toEqual(
      itemIds.map((id, i) => [id, choices[i]]),
    );

    const firstId = itemIds[0] ?? "";
    const myRatings = exported.ratings.filter(
      (r) => r.worker_id === "scripted-w",
    );
    expect(myRatings).toEqual(
      ratings.map((value, cardIdx) => ({
        worker_id: "scripted-w",
        doc_id: splitItemId(firstId).docId,
        model: splitItemId(firstId).model,
        topic_id: cardIdx,
        rating: value,
      })),
    );
  });

  it("serves hit payloads with no trace of the answer key", async () => {
    const res = await realFetch(`${base}/hit?worker_id=leak-check-w`);
    expect(res.ok).toBe(true);
    const text = await res.text();
    expect(text).not.toMatch(/intruder/);
    expect(text).not.toMatch(/is_control/);
    // strict parse: any field beyond the documented public view would fail
    HitResponseSchema.parse(JSON.parse(text));
  });

  it("locks out a worker who misses the control question", async () => {
    const assigned = await client.getHit("blocked-w");
    if (assigned.status !== "ok") throw new Error("expected an assignment");
    const control = assigned.hit.items.find((item) =>
      item.item_id.endsWith(":control"),
    );
    if (!control) throw new Error("expected a control item");
    // position 3 is never the planted intruder in the fixture's controls
    const ack = await client.submitAnnotation("blocked-w", control.item_id, 3);
    expect(ack.qc_state).toBe("failed");
    const after = await client.getHit("blocked-w");
    expect(after.status).toBe("blocked");
  });
});
