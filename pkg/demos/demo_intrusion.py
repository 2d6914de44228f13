#!/usr/bin/env python3
"""Walkthrough: the document-level intrusion task from item generation to
human-side metrics.

Generates intrusion items for a synthetic model, packs them into HITs with
gold-question controls, simulates annotators of mixed reliability, and runs
quality control plus model precision / topic log odds scoring.
"""

import numpy as np

from topiceval.corpus import Document, Vocabulary
from topiceval.intrusion import (AnnotationRecord, build_hits,
                                 generate_control_items, generate_items,
                                 score_human)
from topiceval.topicmodel import DocTopicDist, TopicModelArtifact, TopicWordDist

rng = np.random.default_rng(0)

# ---------------------------------------------------------------------------
# A synthetic model: peaked topics over a toy vocabulary, peaked allocations.

V, K, n_docs = 60, 6, 24
types = [f"word{i:02d}" for i in range(V)]
docs = {}
for i in range(n_docs):
    toks = [types[j] for j in rng.integers(V, size=30)]
    d = Document(id=f"d{i:02d}", raw_text=" ".join(toks), tokens=toks,
                 snippet=" ".join(toks[:8]))
    docs[d.id] = d
vocab = Vocabulary.from_documents(list(docs.values()))

topics = [TopicWordDist(topic_id=k, probs=rng.dirichlet(np.full(V, 0.05)))
          for k in range(K)]
allocations = {d: DocTopicDist(doc_id=d, theta=rng.dirichlet(np.full(K, 0.2)))
               for d in docs}
model = TopicModelArtifact(name="toy", K=K, topics=topics,
                           allocations=allocations, vocab_size=V)

# ---------------------------------------------------------------------------
# Items: top-3 topics plus a low-probability intruder, order randomized.

doc_ids = sorted(docs)
items = generate_items(model, docs, doc_ids, vocab, seed=42)
controls = generate_control_items(model, docs, doc_ids[:3], vocab, seed=42)
hits = build_hits(items, controls, seed=42)
print(f"{len(items)} items, {len(controls)} controls, {len(hits)} hits")

first = items[0]
print(f"\nexample item {first.item_id}:")
print(f"  snippet: {first.snippet!r}")
print(f"  shown topics: {first.shown_topics} "
      f"(intruder at position {first.intruder_pos})")

# ---------------------------------------------------------------------------
# Simulated annotators: two diligent, one random clicker.

annotations = []
for it in items + controls:
    for worker, p_correct in [("careful-1", 0.9), ("careful-2", 0.85),
                              ("clicker", 0.25)]:
        if rng.random() < p_correct:
            pos = it.intruder_pos
        else:
            pos = int(rng.choice([p for p in range(4) if p != it.intruder_pos]))
        annotations.append(AnnotationRecord(worker_id=worker,
                                            item_id=it.item_id,
                                            chosen_pos=pos))

report = score_human(annotations, items + controls, {"toy": model})
print(f"\nmodel precision: {report.model_mp['toy']:.3f}")
print(f"topic log odds:  {report.model_tlo['toy']:.3f}  (closer to 0 means "
      f"annotators confuse intruder and top topics)")
