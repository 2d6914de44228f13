/**
 * Runtime schemas for every server payload the app consumes.
 *
 * All object schemas are strict: an unexpected field (in particular anything
 * that could reveal the intruder position or the control flag) makes parsing
 * fail, so the "server never leaks the answer" contract is enforced at the
 * client boundary, not just promised.
 */

import { z } from "zod";

export const ItemViewSchema = z
  .object({
    item_id: z.string().min(1),
    snippet: z.string(),
    topics: z.array(z.array(z.string()).min(1).max(10)).length(4),
  })
  .strict();

export const HitViewSchema = z
  .object({
    hit_id: z.string().min(1),
    items: z.array(ItemViewSchema).length(5),
  })
  .strict();

export const HitResponseSchema = z.discriminatedUnion("status", [
  z.object({ status: z.literal("ok"), hit: HitViewSchema }).strict(),
  z.object({ status: z.literal("done") }).strict(),
  z.object({ status: z.literal("blocked"), qc_state: z.string() }).strict(),
]);

export const MoreResponseSchema = z
  .object({ item_id: z.string(), full_text: z.string() })
  .strict();

export const AnnotationAckSchema = z
  .object({
    ok: z.boolean(),
    duplicate: z.boolean(),
    qc_state: z.enum(["active", "failed"]),
  })
  .strict();

export const RatingAckSchema = z.object({ ok: z.boolean() }).strict();

export const ExportSchema = z
  .object({
    run_id: z.string(),
    annotations: z.array(
      z
        .object({
          worker_id: z.string(),
          item_id: z.string(),
          chosen_pos: z.number().int().min(0).max(3),
          timestamp: z.number(),
        })
        .strict(),
    ),
    ratings: z.array(
      z
        .object({
          worker_id: z.string(),
          doc_id: z.string(),
          model: z.string(),
          topic_id: z.number().int(),
          rating: z.number().int().min(0).max(3),
        })
        .strict(),
    ),
  })
  .strict();

export type ItemView = z.infer<typeof ItemViewSchema>;
export type HitView = z.infer<typeof HitViewSchema>;
export type HitResponse = z.infer<typeof HitResponseSchema>;
export type AnnotationAck = z.infer<typeof AnnotationAckSchema>;
export type ExportPayload = z.infer<typeof ExportSchema>;
