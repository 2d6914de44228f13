"""Topic intrusion task: item generation, annotation quality control, and
the human-side metrics (model precision, topic log odds, direct ratings).

An intrusion item shows a document snippet with four topics: the document's
top-3 topics plus one intruder, which is a low-probability topic for this
document but a high-probability topic for at least one other document.
Control items use a pseudo-topic of random vocabulary words.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import records
from .corpus import Document, Vocabulary
from .topicmodel import TopicModelArtifact, TopicWordDist

logger = logging.getLogger(__name__)

THETA_FLOOR = 1e-10
DEFAULT_LOW_TAU = 0.05
DEFAULT_HIGH_RANK = 3
DEFAULT_QC_THRESHOLD = 0.6


@dataclass
class IntrusionItem:
    item_id: str
    doc_id: str
    model_name: str
    shown_topics: list[int]        # 4 topic ids in display order
    intruder_pos: int              # index of the intruder in shown_topics
    top3: list[int]
    is_control: bool
    snippet: str
    shown_words: list[list[str]] = field(default_factory=list)
    full_text: str = ""
    low_tau_used: float = DEFAULT_LOW_TAU
    relaxed: bool = False

    def __post_init__(self) -> None:
        if len(self.shown_topics) != 4 or len(set(self.shown_topics)) != 4:
            raise ValueError(f"item {self.item_id}: need 4 distinct shown topics")
        if not 0 <= self.intruder_pos <= 3:
            raise ValueError(f"item {self.item_id}: bad intruder_pos")

    @property
    def intruder_topic(self) -> int:
        return self.shown_topics[self.intruder_pos]


@dataclass
class Hit:
    hit_id: str
    items: list[IntrusionItem]

    def __post_init__(self) -> None:
        controls = sum(1 for it in self.items if it.is_control)
        if len(self.items) != 5 or controls != 1:
            raise ValueError(
                f"hit {self.hit_id}: need 5 items with exactly one control")


@dataclass
class AnnotationRecord:
    worker_id: str
    item_id: str
    chosen_pos: int
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        if self.chosen_pos not in (0, 1, 2, 3):
            raise ValueError(f"chosen_pos {self.chosen_pos} out of range")


@dataclass
class RatingRecord:
    worker_id: str
    doc_id: str
    model_name: str
    topic_id: int
    rating: int

    def __post_init__(self) -> None:
        if self.rating not in (0, 1, 2, 3):
            raise ValueError(f"rating {self.rating} out of range")


@dataclass
class MetricReport:
    doc_mp: dict[tuple[str, str], float]       # (model, doc) -> MP
    model_mp: dict[str, float]
    doc_tlo: dict[tuple[str, str], float]
    model_tlo: dict[str, float]
    model_rating: dict[str, float]


# ---------------------------------------------------------------------------
# item generation

def _high_rank_topics(model: TopicModelArtifact, high_rank: int) -> dict[int, set[str]]:
    """For each topic, the docs where it ranks within the top `high_rank`."""
    where: dict[int, set[str]] = {t.topic_id: set() for t in model.topics}
    for doc_id, alloc in model.allocations.items():
        for t in alloc.top_topics(high_rank):
            where[t].add(doc_id)
    return where


def sample_intruder(doc_id: str, model: TopicModelArtifact, rng_seed: int,
                    low_tau: float = DEFAULT_LOW_TAU,
                    high_rank: int = DEFAULT_HIGH_RANK,
                    _high_where: dict[int, set[str]] | None = None,
                    ) -> tuple[int, float]:
    """Sample an intruder topic for a document.

    The intruder is drawn uniformly (seeded) from topics that (1) have
    probability below `low_tau` for this document and (2) rank within the
    top `high_rank` topics of at least one other document.  If no topic
    qualifies, `low_tau` is doubled until one does (the relaxation shows up
    in the returned effective threshold).

    Returns (topic_id, effective_low_tau).
    """
    if model.K < 4:
        raise ValueError("need at least 4 topics for an intrusion item")
    theta = model.theta(doc_id)
    top3 = set(model.allocations[doc_id].top_topics(3))
    if _high_where is None:
        _high_where = _high_rank_topics(model, high_rank)

    eligible = [t for t in range(model.K)
                if t not in top3 and (_high_where[t] - {doc_id})]
    if not eligible:
        raise ValueError(f"doc {doc_id}: no topic is high-rank for another document")

    tau = low_tau
    while True:
        candidates = [t for t in eligible if theta[t] < tau]
        if candidates:
            break
        tau *= 2
        if tau > 2.0:
            candidates = eligible
            tau = 2.0
            break
    if tau != low_tau:
        logger.info("doc %s/%s: intruder threshold relaxed to %g",
                    doc_id, model.name, tau)
    rng = np.random.default_rng(rng_seed)
    return int(candidates[rng.integers(len(candidates))]), tau


def make_control(vocab: Vocabulary, rng_seed: int) -> TopicWordDist:
    """Control pseudo-topic: 10 distinct random vocabulary words, uniform."""
    if len(vocab) < 10:
        raise ValueError("vocabulary too small for a control topic")
    rng = np.random.default_rng(rng_seed)
    chosen = rng.choice(len(vocab), size=10, replace=False)
    probs = np.zeros(len(vocab))
    probs[chosen] = 0.1
    return TopicWordDist(topic_id=-1, probs=probs)


def _doc_seed(base_seed: int, doc_id: str, model_name: str, salt: str = "") -> int:
    import hashlib
    h = hashlib.sha256(f"{base_seed}:{doc_id}:{model_name}:{salt}".encode())
    return int.from_bytes(h.digest()[:8], "big")


def generate_items(model: TopicModelArtifact, docs: dict[str, Document],
                   doc_ids: list[str], vocab: Vocabulary, seed: int,
                   low_tau: float = DEFAULT_LOW_TAU,
                   high_rank: int = DEFAULT_HIGH_RANK,
                   n_top_words: int = 10) -> list[IntrusionItem]:
    """One intrusion item per document for one model.

    Display order of the four topics is a per-item seeded permutation.
    """
    high_where = _high_rank_topics(model, high_rank)
    items = []
    for doc_id in doc_ids:
        s = _doc_seed(seed, doc_id, model.name)
        try:
            intruder, tau = sample_intruder(doc_id, model, s, low_tau, high_rank,
                                            _high_where=high_where)
        except ValueError as e:
            logger.warning("skipping item: %s", e)
            continue
        top3 = model.allocations[doc_id].top_topics(3)
        four = top3 + [intruder]
        perm = np.random.default_rng(s + 1).permutation(4)
        shown = [four[i] for i in perm]
        doc = docs[doc_id]
        items.append(IntrusionItem(
            item_id=f"{model.name}:{doc_id}",
            doc_id=doc_id, model_name=model.name,
            shown_topics=shown,
            intruder_pos=shown.index(intruder),
            top3=top3, is_control=False,
            snippet=doc.snippet, full_text=doc.raw_text,
            shown_words=[model.topics[t].top_words(n_top_words, vocab)
                         for t in shown],
            low_tau_used=tau, relaxed=(tau != low_tau)))
    return items


def generate_control_items(model: TopicModelArtifact, docs: dict[str, Document],
                           doc_ids: list[str], vocab: Vocabulary, seed: int,
                           n_top_words: int = 10) -> list[IntrusionItem]:
    """Control items: the document's top-3 real topics plus a random-word
    pseudo-topic as the intruder.  Control topic ids extend the model's id
    range (K, K+1, ...)."""
    items = []
    for i, doc_id in enumerate(doc_ids):
        s = _doc_seed(seed, doc_id, model.name, salt="control")
        control = make_control(vocab, s)
        control_id = model.K + i
        top3 = model.allocations[doc_id].top_topics(3)
        four = top3 + [control_id]
        perm = np.random.default_rng(s + 1).permutation(4)
        shown = [four[j] for j in perm]
        words = {t: model.topics[t].top_words(n_top_words, vocab) for t in top3}
        words[control_id] = control.top_words(10, vocab)
        doc = docs[doc_id]
        items.append(IntrusionItem(
            item_id=f"{model.name}:{doc_id}:control",
            doc_id=doc_id, model_name=model.name,
            shown_topics=shown,
            intruder_pos=shown.index(control_id),
            top3=top3, is_control=True,
            snippet=doc.snippet, full_text=doc.raw_text,
            shown_words=[words[t] for t in shown]))
    return items


def build_hits(items: list[IntrusionItem], controls: list[IntrusionItem],
               seed: int, run_id: str = "run") -> list[Hit]:
    """Pack items into HITs of five: four real items plus one control.

    Controls are reused round-robin if there are fewer controls than HITs.
    """
    if not controls:
        raise ValueError("need at least one control item")
    rng = np.random.default_rng(seed)
    order = [items[i] for i in rng.permutation(len(items))]
    hits = []
    for h, start in enumerate(range(0, len(order), 4)):
        chunk = order[start:start + 4]
        if len(chunk) < 4:
            break  # leftover items go to the next round
        control = controls[h % len(controls)]
        five = chunk + [control]
        pos = rng.permutation(5)
        hits.append(Hit(hit_id=f"{run_id}:hit{h}",
                        items=[five[i] for i in pos]))
    return hits


# ---------------------------------------------------------------------------
# quality control and metrics

def quality_filter(annotations: list[AnnotationRecord],
                   items: list[IntrusionItem],
                   threshold: float = DEFAULT_QC_THRESHOLD,
                   ) -> tuple[list[AnnotationRecord], dict[str, dict]]:
    """Drop every annotation of workers whose control accuracy is not
    strictly above `threshold`.

    Workers with no control items are dropped and flagged.  Returns the
    surviving annotations and a per-worker report.
    """
    by_id = {it.item_id: it for it in items}
    control_total: dict[str, int] = {}
    control_correct: dict[str, int] = {}
    for a in annotations:
        it = by_id.get(a.item_id)
        if it is None or not it.is_control:
            continue
        control_total[a.worker_id] = control_total.get(a.worker_id, 0) + 1
        if a.chosen_pos == it.intruder_pos:
            control_correct[a.worker_id] = control_correct.get(a.worker_id, 0) + 1

    report: dict[str, dict] = {}
    kept_workers = set()
    for w in sorted({a.worker_id for a in annotations}):
        total = control_total.get(w, 0)
        correct = control_correct.get(w, 0)
        acc = correct / total if total else 0.0
        kept = total > 0 and acc > threshold
        report[w] = {"controls": total, "correct": correct,
                     "accuracy": acc, "kept": kept,
                     "no_controls": total == 0}
        if kept:
            kept_workers.add(w)
    kept = [a for a in annotations if a.worker_id in kept_workers]
    return kept, report


def model_precision(annotations: list[AnnotationRecord],
                    items: list[IntrusionItem],
                    ) -> tuple[dict[tuple[str, str], float], dict[str, float]]:
    """Per-document and per-model model precision.

    Per document: the fraction of its annotators who picked the intruder.
    Per model: the unweighted mean over its documents.  Control items and
    documents with no surviving annotations are excluded.
    """
    by_id = {it.item_id: it for it in items}
    hit_counts: dict[str, list[int]] = {}
    for a in annotations:
        it = by_id.get(a.item_id)
        if it is None or it.is_control:
            continue
        n, c = hit_counts.get(a.item_id, [0, 0])
        hit_counts[a.item_id] = [n + 1, c + (a.chosen_pos == it.intruder_pos)]

    doc_mp: dict[tuple[str, str], float] = {}
    for item_id, (n, c) in hit_counts.items():
        it = by_id[item_id]
        doc_mp[(it.model_name, it.doc_id)] = c / n

    model_mp: dict[str, float] = {}
    for model in sorted({m for m, _ in doc_mp}):
        vals = [v for (m, _), v in doc_mp.items() if m == model]
        model_mp[model] = sum(vals) / len(vals)
    return doc_mp, model_mp


def topic_log_odds(annotations: list[AnnotationRecord],
                   items: list[IntrusionItem],
                   models: dict[str, TopicModelArtifact],
                   ) -> tuple[dict[tuple[str, str], float], dict[str, float]]:
    """Per-document and per-model topic log odds.

    Each annotation contributes log theta(intruder) - log theta(chosen);
    documents average over annotators, models over documents.  A floor keeps
    the logs finite.  Control items are excluded (the pseudo-topic has no
    allocation mass).
    """
    by_id = {it.item_id: it for it in items}
    contrib: dict[str, list[float]] = {}
    for a in annotations:
        it = by_id.get(a.item_id)
        if it is None or it.is_control:
            continue
        theta = models[it.model_name].theta(it.doc_id)
        t_int = theta[it.intruder_topic]
        t_cho = theta[it.shown_topics[a.chosen_pos]]
        val = math.log(max(t_int, THETA_FLOOR)) - math.log(max(t_cho, THETA_FLOOR))
        contrib.setdefault(a.item_id, []).append(val)
        if val > 1e-9:
            logger.warning("item %s: intruder has higher theta than chosen "
                           "topic (TLO term %.3g > 0)", a.item_id, val)

    doc_tlo: dict[tuple[str, str], float] = {}
    for item_id, vals in contrib.items():
        it = by_id[item_id]
        doc_tlo[(it.model_name, it.doc_id)] = sum(vals) / len(vals)

    model_tlo: dict[str, float] = {}
    for model in sorted({m for m, _ in doc_tlo}):
        vals = [v for (m, _), v in doc_tlo.items() if m == model]
        model_tlo[model] = sum(vals) / len(vals)
    return doc_tlo, model_tlo


def direct_rating_report(ratings: list[RatingRecord]) -> dict[str, float]:
    """Mean 0-3 rating per model over all (document, annotator) instances."""
    sums: dict[str, list[int]] = {}
    for r in ratings:
        n, s = sums.get(r.model_name, [0, 0])
        sums[r.model_name] = [n + 1, s + r.rating]
    return {m: s / n for m, (n, s) in sorted(sums.items())}


def score_human(annotations: list[AnnotationRecord],
                items: list[IntrusionItem],
                models: dict[str, TopicModelArtifact],
                ratings: list[RatingRecord] | None = None,
                qc_threshold: float = DEFAULT_QC_THRESHOLD) -> MetricReport:
    """Full human-side scoring: QC filter, then MP, TLO and ratings."""
    kept, _report = quality_filter(annotations, items, qc_threshold)
    doc_mp, model_mp = model_precision(kept, items)
    doc_tlo, model_tlo = topic_log_odds(kept, items, models)
    rating = direct_rating_report(ratings or [])
    return MetricReport(doc_mp=doc_mp, model_mp=model_mp,
                        doc_tlo=doc_tlo, model_tlo=model_tlo,
                        model_rating=rating)


# ---------------------------------------------------------------------------
# serialization

def _item_to_record(it: IntrusionItem) -> dict:
    return {"item_id": it.item_id, "doc_id": it.doc_id,
            "model": it.model_name, "shown_topics": it.shown_topics,
            "intruder_pos": it.intruder_pos, "top3": it.top3,
            "is_control": it.is_control, "snippet": it.snippet,
            "shown_words": it.shown_words, "full_text": it.full_text,
            "low_tau_used": it.low_tau_used, "relaxed": it.relaxed}


def _item_from_record(r: dict) -> IntrusionItem:
    return IntrusionItem(item_id=r["item_id"], doc_id=r["doc_id"],
                         model_name=r["model"], shown_topics=r["shown_topics"],
                         intruder_pos=r["intruder_pos"], top3=r["top3"],
                         is_control=r["is_control"], snippet=r["snippet"],
                         shown_words=r.get("shown_words", []),
                         full_text=r.get("full_text", ""),
                         low_tau_used=r.get("low_tau_used", DEFAULT_LOW_TAU),
                         relaxed=r.get("relaxed", False))


def save_items(items: list[IntrusionItem], path, meta: dict | None = None) -> None:
    records.write_records(path, "intrusion_items",
                          (_item_to_record(it) for it in items), meta)


def load_items(path) -> list[IntrusionItem]:
    return [_item_from_record(r)
            for r in records.iter_records(path, "intrusion_items")]


def save_hits(hits: list[Hit], path, meta: dict | None = None) -> None:
    records.write_records(
        path, "hits",
        ({"hit_id": h.hit_id, "items": [_item_to_record(it) for it in h.items]}
         for h in hits), meta)


def load_hits(path) -> list[Hit]:
    return [Hit(hit_id=r["hit_id"],
                items=[_item_from_record(x) for x in r["items"]])
            for r in records.iter_records(path, "hits")]


def save_annotations(annotations: list[AnnotationRecord], path,
                     meta: dict | None = None) -> None:
    records.write_records(path, "annotations",
                          ({"worker_id": a.worker_id, "item_id": a.item_id,
                            "chosen_pos": a.chosen_pos, "timestamp": a.timestamp}
                           for a in annotations), meta)


def load_annotations(path) -> list[AnnotationRecord]:
    return [AnnotationRecord(worker_id=r["worker_id"], item_id=r["item_id"],
                             chosen_pos=r["chosen_pos"],
                             timestamp=r.get("timestamp", 0.0))
            for r in records.iter_records(path, "annotations")]


def save_ratings(ratings: list[RatingRecord], path,
                 meta: dict | None = None) -> None:
    records.write_records(path, "ratings",
                          ({"worker_id": r.worker_id, "doc_id": r.doc_id,
                            "model": r.model_name, "topic_id": r.topic_id,
                            "rating": r.rating} for r in ratings), meta)


def load_ratings(path) -> list[RatingRecord]:
    return [RatingRecord(worker_id=r["worker_id"], doc_id=r["doc_id"],
                         model_name=r["model"], topic_id=r["topic_id"],
                         rating=r["rating"])
            for r in records.iter_records(path, "ratings")]
