"""Topic model artifacts, the model-exchange file format, and the
embedding-cluster baseline model.

The cluster baseline builds "topics" by k-means over word embeddings and
derives both topic-word distributions and document-topic allocations from
cosine similarity with linear normalization.  It is intentionally
adversarial: its topics are tight synonym-style clusters (high coherence)
while its document allocations carry little information.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import records
from .corpus import Document, Vocabulary

logger = logging.getLogger(__name__)

SUM_TOL = 1e-6
RENORM_TOL = 1e-4
SPARSE_CAP = 1000


class ModelFormatError(ValueError):
    """Malformed or inconsistent model-exchange file."""


def _validate_dist(p: np.ndarray, what: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if (p < 0).any():
        raise ModelFormatError(f"{what}: negative probability")
    s = p.sum()
    if abs(s - 1.0) > RENORM_TOL:
        raise ModelFormatError(f"{what}: probabilities sum to {s}")
    if abs(s - 1.0) > SUM_TOL:
        p = p / s
    return p


@dataclass
class TopicWordDist:
    topic_id: int
    probs: np.ndarray  # dense over vocabulary ids

    def __post_init__(self) -> None:
        self.probs = _validate_dist(self.probs, f"topic {self.topic_id}")

    def top_words(self, n: int, vocab: Vocabulary) -> list[str]:
        """The n highest-probability types; ties broken by vocabulary id."""
        # lexsort: primary key last.  Sort by (-prob, id) ascending.
        order = np.lexsort((np.arange(len(self.probs)), -self.probs))
        return [vocab.types[i] for i in order[:n]]

    def top_ids(self, n: int) -> list[int]:
        order = np.lexsort((np.arange(len(self.probs)), -self.probs))
        return [int(i) for i in order[:n]]


@dataclass
class DocTopicDist:
    doc_id: str
    theta: np.ndarray

    def __post_init__(self) -> None:
        self.theta = _validate_dist(self.theta, f"doc {self.doc_id}")

    def top_topics(self, n: int) -> list[int]:
        order = np.lexsort((np.arange(len(self.theta)), -self.theta))
        return [int(i) for i in order[:n]]


@dataclass
class TopicModelArtifact:
    name: str
    K: int
    topics: list[TopicWordDist]
    allocations: dict[str, DocTopicDist]
    vocab_size: int = 0

    def __post_init__(self) -> None:
        if len(self.topics) != self.K:
            raise ModelFormatError(
                f"model {self.name}: {len(self.topics)} topics, K={self.K}")
        sizes = {len(t.probs) for t in self.topics}
        if len(sizes) > 1:
            raise ModelFormatError(f"model {self.name}: topics over different vocabularies")
        if not self.vocab_size and sizes:
            self.vocab_size = sizes.pop()
        for a in self.allocations.values():
            if len(a.theta) != self.K:
                raise ModelFormatError(
                    f"model {self.name}: allocation for {a.doc_id} has "
                    f"{len(a.theta)} entries, K={self.K}")

    def theta(self, doc_id: str) -> np.ndarray:
        return self.allocations[doc_id].theta


def save_model(model: TopicModelArtifact, path, full_phi: bool = False,
               meta: dict | None = None) -> None:
    """Write the model-exchange file.

    Topic rows are sparse-capped at the SPARSE_CAP highest entries plus a
    remainder mass bucket unless `full_phi` is set.
    """
    header = {"name": model.name, "K": model.K, "V": model.vocab_size}
    if meta:
        header.update(meta)

    def gen():
        for t in model.topics:
            p = t.probs
            if not full_phi and len(p) > SPARSE_CAP:
                order = np.lexsort((np.arange(len(p)), -p))[:SPARSE_CAP]
                order = sorted(int(i) for i in order)
                kept = [[i, float(p[i])] for i in order]
                rem = float(1.0 - sum(v for _, v in kept))
                yield {"topic": t.topic_id, "probs": kept, "rem": max(rem, 0.0)}
            else:
                nz = [[int(i), float(v)] for i, v in enumerate(p) if v > 0]
                yield {"topic": t.topic_id, "probs": nz, "rem": 0.0}
        for doc_id in sorted(model.allocations):
            a = model.allocations[doc_id]
            yield {"doc": doc_id, "theta": [float(x) for x in a.theta]}

    records.write_records(path, "topicmodel", gen(), header)


def load_model(path) -> TopicModelArtifact:
    header = records.read_header(path, "topicmodel")
    V = int(header["V"])
    topics: list[TopicWordDist] = []
    allocations: dict[str, DocTopicDist] = {}
    listed: set[int] = set()
    for r in records.iter_records(path, "topicmodel"):
        if "topic" in r:
            p = np.zeros(V)
            ids = [int(i) for i, _ in r["probs"]]
            p[ids] = [v for _, v in r["probs"]]
            rem = float(r.get("rem", 0.0))
            n_rest = V - len(ids)
            if rem > 0 and n_rest > 0:
                mask = np.ones(V, dtype=bool)
                mask[ids] = False
                p[mask] = rem / n_rest
            tid = int(r["topic"])
            if tid in listed:
                raise ModelFormatError(f"duplicate topic id {tid}")
            listed.add(tid)
            topics.append(TopicWordDist(topic_id=tid, probs=p))
        else:
            allocations[r["doc"]] = DocTopicDist(doc_id=r["doc"],
                                                 theta=np.array(r["theta"]))
    topics.sort(key=lambda t: t.topic_id)
    return TopicModelArtifact(name=header["name"], K=int(header["K"]),
                              topics=topics, allocations=allocations,
                              vocab_size=V)


# ---------------------------------------------------------------------------
# embeddings

@dataclass
class EmbeddingTable:
    dim: int
    vector_of: dict[str, np.ndarray] = field(default_factory=dict)

    def __contains__(self, word: str) -> bool:
        return word in self.vector_of

    def __getitem__(self, word: str) -> np.ndarray:
        return self.vector_of[word]


def load_embeddings(path) -> EmbeddingTable:
    """Read the standard text vector format: "count dim" then "word v1..vd"."""
    with open(path, encoding="utf-8") as f:
        first = f.readline().split()
        count, dim = int(first[0]), int(first[1])
        table = EmbeddingTable(dim=dim)
        for line in f:
            parts = line.rstrip().split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"bad embedding row for {parts[0]!r}")
            table.vector_of[parts[0]] = np.array(parts[1:], dtype=float)
    if len(table.vector_of) != count:
        logger.warning("embedding file declared %d rows, read %d",
                       count, len(table.vector_of))
    return table


def save_embeddings(table: EmbeddingTable, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{len(table.vector_of)} {table.dim}\n")
        for w in sorted(table.vector_of):
            vec = " ".join(repr(float(x)) for x in table.vector_of[w])
            f.write(f"{w} {vec}\n")


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


# ---------------------------------------------------------------------------
# cluster baseline

def kmeans_clusters(emb: EmbeddingTable, vocab: Vocabulary, k: int,
                    seed: int = 0, max_iter: int = 200,
                    ) -> list[tuple[np.ndarray, list[str]]]:
    """Lloyd k-means over the embedded vocabulary, k-means++ seeding.

    Deterministic given the seed.  Vocabulary types without an embedding are
    dropped (and logged).
    """
    words = [t for t in vocab.types if t in emb]
    missing = len(vocab) - len(words)
    if missing:
        logger.warning("%d vocabulary types have no embedding; dropped", missing)
    if k > len(words):
        raise ValueError(f"k={k} exceeds embedded vocabulary size {len(words)}")

    X = np.stack([emb[w] for w in words])
    rng = np.random.default_rng(seed)

    # k-means++ seeding
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(len(X))]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = X[rng.integers(len(X))]
        else:
            centers[j] = X[rng.choice(len(X), p=d2 / total)]
        d2 = np.minimum(d2, ((X - centers[j]) ** 2).sum(axis=1))

    assign = np.full(len(X), -1)
    for _ in range(max_iter):
        dist = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = dist.argmin(axis=1)
        if (new_assign == assign).all():
            break
        assign = new_assign
        for j in range(k):
            members = X[assign == j]
            if len(members):
                centers[j] = members.mean(axis=0)
            else:
                # reseed an empty cluster on the point farthest from its center
                far = dist.min(axis=1).argmax()
                centers[j] = X[far]

    out = []
    for j in range(k):
        member_words = [words[i] for i in np.flatnonzero(assign == j)]
        out.append((centers[j].copy(), member_words))
    return out


def cluster_topic_dist(centroid: np.ndarray, emb: EmbeddingTable,
                       vocab: Vocabulary, topic_id: int = 0,
                       use_distance: bool = False) -> TopicWordDist:
    """Topic distribution from cosine similarity to the centroid, negatives
    clamped to zero, linearly normalized over the whole vocabulary.

    `use_distance` switches to linearly normalized cosine distance instead of
    similarity (the alternative literal reading); off by default.
    """
    if np.linalg.norm(centroid) == 0:
        raise ValueError("degenerate (zero) centroid")
    scores = np.zeros(len(vocab))
    for i, w in enumerate(vocab.types):
        if w in emb:
            c = _cosine(centroid, emb[w])
            scores[i] = (1.0 - c) if use_distance else max(c, 0.0)
    total = scores.sum()
    if total <= 0:
        raise ValueError("all-zero similarity scores; cannot normalize")
    return TopicWordDist(topic_id=topic_id, probs=scores / total)


def cluster_allocation(doc: Document, topics: list[TopicWordDist],
                       emb: EmbeddingTable, vocab: Vocabulary,
                       n_top_words: int = 10) -> DocTopicDist:
    """Document allocation for the cluster baseline.

    Document vector = mean embedding of its tokens; each topic is the mean
    embedding of its top `n_top_words` words; cosine similarities are clamped
    at zero and linearly normalized.
    """
    vecs = [emb[t] for t in doc.tokens if t in emb]
    K = len(topics)
    if not vecs:
        logger.warning("document %s has no embedded tokens; uniform allocation",
                       doc.id)
        return DocTopicDist(doc_id=doc.id, theta=np.full(K, 1.0 / K))
    dvec = np.mean(vecs, axis=0)

    sims = np.zeros(K)
    for j, t in enumerate(topics):
        top = [w for w in t.top_words(n_top_words, vocab)
               if w in emb and t.probs[vocab.id_of[w]] > 0]
        if not top:
            continue
        tvec = np.mean([emb[w] for w in top], axis=0)
        sims[j] = max(_cosine(dvec, tvec), 0.0)
    total = sims.sum()
    if total <= 0:
        return DocTopicDist(doc_id=doc.id, theta=np.full(K, 1.0 / K))
    return DocTopicDist(doc_id=doc.id, theta=sims / total)


def build_cluster_model(emb: EmbeddingTable, vocab: Vocabulary,
                        docs: list[Document], k: int = 100, seed: int = 0,
                        name: str = "cluster") -> TopicModelArtifact:
    """Assemble the full adversarial cluster baseline."""
    clusters = kmeans_clusters(emb, vocab, k, seed)
    topics = [cluster_topic_dist(c, emb, vocab, topic_id=j)
              for j, (c, _members) in enumerate(clusters)]
    allocations = {d.id: cluster_allocation(d, topics, emb, vocab) for d in docs}
    return TopicModelArtifact(name=name, K=k, topics=topics,
                              allocations=allocations, vocab_size=len(vocab))
