#!/usr/bin/env python3
"""Walkthrough: window co-occurrence counts and NPMI topic coherence.

Builds a tiny corpus by hand, counts sliding-window co-occurrences, scores
individual word pairs, and then scores whole topics the same way the
`coherence` CLI stage does.
"""

import numpy as np

from topiceval.coherence import model_coherence, npmi_pair, topic_coherence
from topiceval.corpus import Document, Vocabulary, count_cooccurrence
from topiceval.topicmodel import DocTopicDist, TopicModelArtifact, TopicWordDist

# ---------------------------------------------------------------------------
# A corpus where "rain" and "storm" travel together and "tax" stays apart.

texts = [
    "rain storm flood rain storm weather",
    "storm rain weather flood storm rain",
    "tax budget audit tax revenue budget",
    "budget tax audit revenue audit tax",
    "rain storm tax weather flood budget",
]
docs = [Document(id=f"d{i}", raw_text=t, tokens=t.split(), snippet=t)
        for i, t in enumerate(texts)]
vocab = Vocabulary.from_documents(docs)

stats = count_cooccurrence(docs, "window", window_size=4)
print(f"{stats.unit_count} windows of 4 tokens\n")

# Pairs that share windows often score high; pairs that never meet get -1.
for a, b in [("rain", "storm"), ("tax", "budget"), ("rain", "audit")]:
    print(f"npmi({a!r}, {b!r}) = {npmi_pair(a, b, stats):+.3f}")

# ---------------------------------------------------------------------------
# Topic-level coherence: mean pairwise NPMI over a topic's top words.

def topic_over(words):
    probs = np.zeros(len(vocab))
    for rank, w in enumerate(words):
        probs[vocab.id_of[w]] = len(words) - rank
    return TopicWordDist(topic_id=0, probs=probs / probs.sum())

weather = topic_over(["rain", "storm", "flood", "weather"])
mixed = topic_over(["rain", "tax", "flood", "audit"])
print(f"\nweather topic coherence: {topic_coherence(weather, stats, vocab, n=4):+.3f}")
print(f"mixed topic coherence:   {topic_coherence(mixed, stats, vocab, n=4):+.3f}")

# A model is just the mean over its topics.
weather.topic_id, mixed.topic_id = 0, 1
model = TopicModelArtifact(
    name="demo", K=2, topics=[weather, mixed],
    allocations={d.id: DocTopicDist(doc_id=d.id, theta=np.array([0.5, 0.5]))
                 for d in docs},
    vocab_size=len(vocab))
report = model_coherence(model, stats, vocab, n=4)
print(f"\nmodel mean NPMI: {report.model_mean:+.3f}")
print(f"per topic: { {k: round(v, 3) for k, v in report.per_topic.items()} }")
