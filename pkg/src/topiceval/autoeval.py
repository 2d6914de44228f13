"""Automatic intruder-topic prediction.

Three features per (document, topic) pair drive a linear ranking model:
the Dirichlet-smoothed log query likelihood of the document given the
topic's top-10 words, and the summed pairwise log document co-occurrence
probability of the top-5 and top-10 words.  The model is trained with a
pairwise hinge objective so that, within each four-topic group, the
intruder outranks the document's true top-3 topics; the top-ranked topic
is the predicted intruder.
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import records
from .corpus import CooccurrenceStats, InvertedIndex, Vocabulary
from .intrusion import (DEFAULT_HIGH_RANK, DEFAULT_LOW_TAU, IntrusionItem,
                        _doc_seed, _high_rank_topics, sample_intruder)
from .topicmodel import TopicModelArtifact

logger = logging.getLogger(__name__)

DEFAULT_MU = 2500.0
DEFAULT_C = 0.01
N_QUERY_WORDS = 10


def query_likelihood(doc_id: str, words: list[str], index: InvertedIndex,
                     mu: float = DEFAULT_MU) -> float:
    """Dirichlet-smoothed log P(doc | words) under a unigram language model.

    Query words absent from the collection are dropped; an empty effective
    query scores 0 by convention.
    """
    if mu < 0:
        raise ValueError("mu must be >= 0")
    dlen = index.doc_len[doc_id]
    total = index.total_tokens
    score = 0.0
    effective = 0
    for w in words:
        cf = index.coll_freq(w)
        if cf == 0:
            logger.debug("query word %r absent from collection; dropped", w)
            continue
        effective += 1
        tf = index.tf(w, doc_id)
        score += math.log((tf + mu * cf / total) / (dlen + mu))
    if effective == 0:
        logger.warning("doc %s: empty effective query", doc_id)
        return 0.0
    return score


def pairwise_logprob(words: list[str], m: int, stats: CooccurrenceStats,
                     eps_count: float = 1.0) -> float:
    """Summed log document co-occurrence probability over the top-m words.

    Each unordered pair of the first m words contributes
    log(count / unit_count), with zero counts replaced by `eps_count`.
    """
    if stats.mode != "document":
        raise ValueError("pairwise_logprob needs document-mode stats")
    if eps_count <= 0:
        raise ValueError("eps_count must be positive")
    use = words[:m]
    if len(use) < m:
        logger.warning("only %d of %d words available for pairwise feature",
                       len(use), m)
    total = 0.0
    for w1, w2 in combinations(use, 2):
        c = stats.pair(w1, w2)
        total += math.log(max(c, eps_count) / stats.unit_count)
    return total


def extract_features(doc_id: str, top_words: list[str], index: InvertedIndex,
                     doc_stats: CooccurrenceStats,
                     mu: float = DEFAULT_MU) -> np.ndarray:
    """The three ranking features for one (document, topic) pair."""
    return np.array([
        query_likelihood(doc_id, top_words[:N_QUERY_WORDS], index, mu),
        pairwise_logprob(top_words, 5, doc_stats),
        pairwise_logprob(top_words, 10, doc_stats),
    ])


@dataclass
class RankInstance:
    group: tuple[str, str]   # (doc_id, model_name)
    topic_id: int
    features: np.ndarray
    label: int               # 1 = intruder


def group_instances(instances: list[RankInstance]) -> dict[tuple[str, str], list[RankInstance]]:
    groups: dict[tuple[str, str], list[RankInstance]] = {}
    for inst in instances:
        groups.setdefault(inst.group, []).append(inst)
    for key, members in groups.items():
        if len(members) != 4 or sum(i.label for i in members) != 1:
            raise ValueError(f"group {key}: need 4 instances with one intruder")
    return groups


@dataclass
class LinearRankModel:
    weights: np.ndarray
    bias: float = 0.0
    C: float = DEFAULT_C
    feature_mean: np.ndarray = field(default_factory=lambda: np.zeros(3))
    feature_std: np.ndarray = field(default_factory=lambda: np.ones(3))
    seed: int = 0
    epochs: int = 0
    n_train_groups: int = 0

    def score(self, features: np.ndarray) -> float:
        z = (features - self.feature_mean) / self.feature_std
        return float(self.weights @ z + self.bias)


def save_rank_model(model: LinearRankModel, path, meta: dict | None = None) -> None:
    rec = {"weights": [float(x) for x in model.weights], "bias": model.bias,
           "C": model.C,
           "feature_mean": [float(x) for x in model.feature_mean],
           "feature_std": [float(x) for x in model.feature_std],
           "seed": model.seed, "epochs": model.epochs,
           "n_train_groups": model.n_train_groups}
    records.write_records(path, "rank_model", [rec], meta)


def load_rank_model(path) -> LinearRankModel:
    (rec,) = list(records.iter_records(path, "rank_model"))
    return LinearRankModel(weights=np.array(rec["weights"]), bias=rec["bias"],
                           C=rec["C"],
                           feature_mean=np.array(rec["feature_mean"]),
                           feature_std=np.array(rec["feature_std"]),
                           seed=rec["seed"], epochs=rec["epochs"],
                           n_train_groups=rec["n_train_groups"])


# ---------------------------------------------------------------------------
# training-set construction

def make_group(doc_id: str, model: TopicModelArtifact, vocab: Vocabulary,
               index: InvertedIndex, doc_stats: CooccurrenceStats,
               intruder: int, mu: float = DEFAULT_MU) -> list[RankInstance]:
    """Four rank instances for one document under one model."""
    top3 = model.allocations[doc_id].top_topics(3)
    insts = []
    for t in top3 + [intruder]:
        words = model.topics[t].top_words(N_QUERY_WORDS, vocab)
        insts.append(RankInstance(group=(doc_id, model.name), topic_id=t,
                                  features=extract_features(doc_id, words,
                                                            index, doc_stats, mu),
                                  label=int(t == intruder)))
    return insts


def build_training_set(models: list[TopicModelArtifact], doc_ids: list[str],
                       vocab: Vocabulary, index: InvertedIndex,
                       doc_stats: CooccurrenceStats,
                       n_docs_train: int, n_docs_test: int, seed: int,
                       low_tau: float = DEFAULT_LOW_TAU,
                       high_rank: int = DEFAULT_HIGH_RANK,
                       mu: float = DEFAULT_MU,
                       ) -> tuple[list[RankInstance], list[RankInstance]]:
    """Sample documents, split by document, and build pooled rank groups.

    Every (document, model) pair yields one 4-instance group: the document's
    top-3 topics plus a sampled intruder.  The split is by document, so no
    group (and no document) straddles the partitions.
    """
    if n_docs_train + n_docs_test > len(doc_ids):
        raise ValueError("not enough documents for the requested split")
    rng = np.random.default_rng(seed)
    picked = [doc_ids[i] for i in rng.permutation(len(doc_ids))[:n_docs_train + n_docs_test]]
    train_docs, test_docs = picked[:n_docs_train], picked[n_docs_train:]

    def build(split_docs: list[str]) -> list[RankInstance]:
        out: list[RankInstance] = []
        for model in models:
            high_where = _high_rank_topics(model, high_rank)
            for doc_id in split_docs:
                try:
                    intruder, _ = sample_intruder(
                        doc_id, model, _doc_seed(seed, doc_id, model.name),
                        low_tau, high_rank, _high_where=high_where)
                except ValueError as e:
                    logger.warning("excluding %s/%s: %s", doc_id, model.name, e)
                    continue
                out.extend(make_group(doc_id, model, vocab, index, doc_stats,
                                      intruder, mu))
        return out

    return build(train_docs), build(test_docs)


# ---------------------------------------------------------------------------
# training and prediction

def train_ranker(train: list[RankInstance], C: float = DEFAULT_C,
                 seed: int = 0, epochs: int = 500,
                 lr: float = 0.1) -> LinearRankModel:
    """Fit the linear ranking model by seeded batch subgradient descent.

    Objective: 0.5 ||w||^2 + C * sum over within-group (intruder, other)
    pairs of hinge(1 - (s_intruder - s_other)), on z-normalized features.
    """
    groups = group_instances(train)
    X = np.stack([i.features for i in train])
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0

    diffs = []  # x_intruder - x_other, normalized
    for members in groups.values():
        intruder = next(i for i in members if i.label == 1)
        zi = (intruder.features - mean) / std
        for other in members:
            if other.label == 0:
                diffs.append(zi - (other.features - mean) / std)
    D = np.stack(diffs)

    if np.abs(D).max() < 1e-12:
        logger.warning("degenerate training set: all features identical")
        return LinearRankModel(weights=np.zeros(X.shape[1]), C=C,
                               feature_mean=mean, feature_std=std,
                               seed=seed, epochs=0, n_train_groups=len(groups))

    rng = np.random.default_rng(seed)
    w = rng.normal(scale=1e-3, size=X.shape[1])
    for t in range(epochs):
        margins = D @ w
        viol = margins < 1.0
        grad = w - C * D[viol].sum(axis=0)
        w = w - (lr / (1.0 + 0.01 * t)) * grad
    return LinearRankModel(weights=w, C=C, feature_mean=mean, feature_std=std,
                           seed=seed, epochs=epochs, n_train_groups=len(groups))


def predict_intruder(model: LinearRankModel, group: list[RankInstance]) -> int:
    """The topic with the highest score; ties go to the lowest topic id."""
    if len(group) != 4:
        raise ValueError("a prediction group has exactly 4 instances")
    best = min(group, key=lambda i: (-model.score(i.features), i.topic_id))
    return best.topic_id


def predict_all(model: LinearRankModel, instances: list[RankInstance],
                ) -> dict[tuple[str, str], int]:
    return {key: predict_intruder(model, members)
            for key, members in group_instances(instances).items()}


def group_accuracy(model: LinearRankModel, instances: list[RankInstance]) -> float:
    """Fraction of groups whose predicted intruder is the true one."""
    groups = group_instances(instances)
    correct = 0
    for key, members in groups.items():
        truth = next(i.topic_id for i in members if i.label == 1)
        correct += predict_intruder(model, members) == truth
    return correct / len(groups)


def system_model_precision(predictions: dict[tuple[str, str], int],
                           truths: dict[tuple[str, str], int],
                           ) -> dict[str, float]:
    """Per-model mean of the binary per-document correctness."""
    per_model: dict[str, list[int]] = {}
    for (doc_id, model_name), predicted in predictions.items():
        per_model.setdefault(model_name, []).append(
            int(predicted == truths[(doc_id, model_name)]))
    return {m: sum(v) / len(v) for m, v in sorted(per_model.items())}


def truths_of(instances: list[RankInstance]) -> dict[tuple[str, str], int]:
    return {key: next(i.topic_id for i in members if i.label == 1)
            for key, members in group_instances(instances).items()}


def correlate(human_mp: dict[str, float], system_mp: dict[str, float]) -> float:
    """Pearson correlation over the models both scores cover."""
    keys = sorted(set(human_mp) & set(system_mp))
    if len(keys) < 3:
        raise ValueError("need at least 3 paired points for a correlation")
    x = np.array([human_mp[k] for k in keys])
    y = np.array([system_mp[k] for k in keys])
    if x.std() == 0 or y.std() == 0:
        raise ValueError("zero variance; correlation undefined")
    xc, yc = x - x.mean(), y - y.mean()
    return float((xc @ yc) / math.sqrt((xc @ xc) * (yc @ yc)))
