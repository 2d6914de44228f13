/**
 * Single-page annotation app.
 *
 * One HIT at a time: five intrusion items (snippet plus four topic cards in
 * the exact order the server sent them - the client never reorders), then a
 * rating screen where each card of the first item gets a 0-3 score.  At most
 * one submission is in flight; once an item is acknowledged its controls
 * stay disabled.
 */

import { ApiClient } from "./api.js";
import { HitView, ItemView } from "./schemas.js";

type Phase = "intrusion" | "rating" | "finished";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

/** item ids are "<model>:<doc>[:control]"; ratings need the parts back. */
export function splitItemId(itemId: string): { model: string; docId: string } {
  const parts = itemId.split(":");
  const model = parts[0] ?? "";
  const rest = parts.slice(1);
  if (rest[rest.length - 1] === "control") rest.pop();
  return { model, docId: rest.join(":") };
}

export class AnnotationApp {
  private hit: HitView | null = null;
  private itemIndex = 0;
  private phase: Phase = "intrusion";
  private inFlight = false;
  private submitted = new Set<string>();
  private qcState = "active";

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
    private readonly workerId: string,
  ) {}

  async start(): Promise<void> {
    const response = await this.client.getHit(this.workerId);
    if (response.status === "done") {
      this.renderMessage("No more tasks. Thank you!");
      return;
    }
    if (response.status === "blocked") {
      this.qcState = "failed";
      this.renderMessage(
        "Your control-question accuracy is too low to continue.",
      );
      return;
    }
    this.hit = response.hit;
    this.itemIndex = 0;
    this.phase = "intrusion";
    this.renderItem();
  }

  private currentItem(): ItemView {
    const item = this.hit?.items[this.itemIndex];
    if (!item) throw new Error("no current item");
    return item;
  }

  private renderMessage(text: string): void {
    this.root.replaceChildren(
      el("p", { class: "status", role: "status" }, text),
    );
  }

  private renderQcBanner(): HTMLElement {
    return el(
      "p",
      { class: `qc qc-${this.qcState}`, "data-qc": this.qcState },
      this.qcState === "failed"
        ? "Quality check failed: further tasks are locked."
        : "Quality check: in good standing.",
    );
  }

  private renderItem(): void {
    const item = this.currentItem();
    const total = this.hit?.items.length ?? 0;

    const snippet = el("blockquote", { class: "snippet" }, item.snippet);
    const moreButton = el(
      "button",
      { type: "button", class: "view-more" },
      "View more of the document",
    );
    moreButton.addEventListener("click", async () => {
      moreButton.disabled = true;
      snippet.textContent = await this.client.viewMore(
        item.item_id,
        this.workerId,
      );
    });

    const cards = el("div", { class: "topics", role: "group" });
    item.topics.forEach((words, pos) => {
      const button = el(
        "button",
        { type: "button", class: "topic-card", "data-pos": String(pos) },
        el("span", { class: "card-label" }, `Topic ${pos + 1}`),
        el("span", { class: "card-words" }, words.join(", ")),
      );
      button.addEventListener("click", () => void this.choose(pos));
      cards.append(button);
    });

    this.root.replaceChildren(
      el(
        "p",
        { class: "progress", "aria-live": "polite" },
        `Item ${this.itemIndex + 1} of ${total}`,
      ),
      el(
        "p",
        { class: "instructions" },
        "Pick the topic that is least representative of this document.",
      ),
      snippet,
      moreButton,
      cards,
      this.renderQcBanner(),
    );
  }

  private async choose(pos: number): Promise<void> {
    const item = this.currentItem();
    if (this.inFlight || this.submitted.has(item.item_id)) return;
    this.inFlight = true;
    const buttons = this.root.querySelectorAll<HTMLButtonElement>(".topic-card");
    buttons.forEach((b) => (b.disabled = true));
    try {
      const ack = await this.client.submitAnnotation(
        this.workerId,
        item.item_id,
        pos,
      );
      this.submitted.add(item.item_id);
      this.qcState = ack.qc_state;
      this.advance();
    } catch (err) {
      buttons.forEach((b) => (b.disabled = false));
      throw err;
    } finally {
      this.inFlight = false;
    }
  }

  private advance(): void {
    if (!this.hit) return;
    if (this.itemIndex + 1 < this.hit.items.length) {
      this.itemIndex += 1;
      this.renderItem();
      return;
    }
    this.phase = "rating";
    this.renderRating();
  }

  /** Rating screen: 0-3 for each card of the HIT's first item. */
  private renderRating(): void {
    const item = this.hit?.items[0];
    if (!item) throw new Error("no item to rate");

    const groups = el("div", { class: "rating-groups" });
    item.topics.forEach((words, cardIdx) => {
      const legend = el("legend", {}, `Topic ${cardIdx + 1}: ${words.join(", ")}`);
      const fieldset = el("fieldset", { "data-card": String(cardIdx) }, legend);
      for (let value = 0; value <= 3; value++) {
        const id = `rate-${cardIdx}-${value}`;
        const input = el("input", {
          type: "radio",
          id,
          name: `rate-${cardIdx}`,
          value: String(value),
        });
        if (value === 0) input.setAttribute("checked", "checked");
        fieldset.append(input, el("label", { for: id }, String(value)));
      }
      groups.append(fieldset);
    });

    const submit = el(
      "button",
      { type: "button", class: "submit-ratings" },
      "Submit ratings",
    );
    submit.addEventListener("click", () => void this.submitRatings(item));

    this.root.replaceChildren(
      el("p", { class: "progress" }, "Rating task"),
      el(
        "p",
        { class: "instructions" },
        "How well does each topic describe the document? 0 = not at all, 3 = very well.",
      ),
      el("blockquote", { class: "snippet" }, item.snippet),
      groups,
      submit,
      this.renderQcBanner(),
    );
  }

  private async submitRatings(item: ItemView): Promise<void> {
    if (this.inFlight || this.phase !== "rating") return;
    this.inFlight = true;
    const submit = this.root.querySelector<HTMLButtonElement>(".submit-ratings");
    if (submit) submit.disabled = true;
    const { model, docId } = splitItemId(item.item_id);
    try {
      for (let cardIdx = 0; cardIdx < item.topics.length; cardIdx++) {
        const picked = this.root.querySelector<HTMLInputElement>(
          `input[name="rate-${cardIdx}"]:checked`,
        );
        // topic ids are not exposed to annotators; ratings are recorded
        // against the card position
        await this.client.submitRating(
          this.workerId,
          docId,
          model,
          cardIdx,
          picked ? Number(picked.value) : 0,
        );
      }
      this.phase = "finished";
      this.renderMessage("All done. Thank you!");
    } catch (err) {
      if (submit) submit.disabled = false;
      throw err;
    } finally {
      this.inFlight = false;
    }
  }
}
