"""Topic-level evaluation: NPMI observed coherence.

NPMI of a word pair is PMI normalized by -log of the joint probability,
with probabilities estimated from window-level co-occurrence counts.  A
topic is scored by the mean NPMI over all pairs of its top words, and a
model by the mean over its topics.
"""

import logging
import math
from dataclasses import dataclass
from itertools import combinations

from .corpus import CooccurrenceStats, Vocabulary
from .topicmodel import TopicModelArtifact, TopicWordDist

logger = logging.getLogger(__name__)


@dataclass
class CoherenceReport:
    per_topic: dict[int, float]
    model_mean: float
    n_words: int
    stats_ref: str = ""


def npmi_pair(w1: str, w2: str, stats: CooccurrenceStats,
              eps: float = 1e-12) -> float:
    """NPMI of a word pair under the unit counts in `stats`.

    Zero joint count (including words absent from the stats) returns the
    lower limit -1.  The result is clamped to [-1, 1].
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = stats.unit_count
    c1, c2 = stats.single(w1), stats.single(w2)
    c12 = stats.pair(w1, w2)
    if c1 == 0 or c2 == 0:
        logger.debug("npmi: %r or %r absent from stats", w1, w2)
        return -1.0
    if c12 == 0:
        return -1.0
    p1, p2, p12 = c1 / n, c2 / n, c12 / n
    if p12 >= 1.0:
        # both words in every unit: perfect association by convention
        return 1.0
    val = math.log(p12 / (p1 * p2)) / -math.log(max(p12, eps))
    return max(-1.0, min(1.0, val))


def topic_coherence(topic: TopicWordDist, stats: CooccurrenceStats,
                    vocab: Vocabulary, n: int = 10) -> float:
    """Mean pairwise NPMI over the topic's top-n words."""
    if n < 2:
        raise ValueError("n must be >= 2")
    words = [w for w in topic.top_words(n, vocab) if topic.probs[vocab.id_of[w]] > 0]
    if len(words) < n:
        logger.warning("topic %d has only %d nonzero-probability words",
                       topic.topic_id, len(words))
    if len(words) < 2:
        return 0.0
    scores = [npmi_pair(a, b, stats) for a, b in combinations(words, 2)]
    return sum(scores) / len(scores)


def model_coherence(model: TopicModelArtifact, stats: CooccurrenceStats,
                    vocab: Vocabulary, n: int = 10,
                    stats_ref: str = "") -> CoherenceReport:
    per_topic = {t.topic_id: topic_coherence(t, stats, vocab, n)
                 for t in model.topics}
    mean = sum(per_topic.values()) / len(per_topic)
    return CoherenceReport(per_topic=per_topic, model_mean=mean,
                           n_words=n, stats_ref=stats_ref)
