import numpy as np
import pytest

from topiceval.corpus import Document, Vocabulary
from topiceval.topicmodel import (DocTopicDist, EmbeddingTable,
                                  TopicModelArtifact, TopicWordDist)


def make_docs(token_lists, prefix="d"):
    return [Document(id=f"{prefix}{i}", raw_text=" ".join(toks),
                     tokens=list(toks), snippet=" ".join(toks))
            for i, toks in enumerate(token_lists)]


def make_vocab(docs):
    return Vocabulary.from_documents(docs)


def uniform_model(name, K, V, doc_ids):
    topics = [TopicWordDist(topic_id=k, probs=np.full(V, 1.0 / V))
              for k in range(K)]
    allocations = {d: DocTopicDist(doc_id=d, theta=np.full(K, 1.0 / K))
                   for d in doc_ids}
    return TopicModelArtifact(name=name, K=K, topics=topics,
                              allocations=allocations, vocab_size=V)


def random_model(name, K, V, doc_ids, seed, concentration=0.3):
    """Synthetic artifact with random peaked topics and allocations."""
    rng = np.random.default_rng(seed)
    topics = []
    for k in range(K):
        p = rng.dirichlet(np.full(V, 0.05))
        topics.append(TopicWordDist(topic_id=k, probs=p))
    allocations = {}
    for d in doc_ids:
        theta = rng.dirichlet(np.full(K, concentration))
        allocations[d] = DocTopicDist(doc_id=d, theta=theta)
    return TopicModelArtifact(name=name, K=K, topics=topics,
                              allocations=allocations, vocab_size=V)


class FamilyCorpus:
    """Synthetic corpus with planted topics, built to pull topic-level and
    document-level quality apart.

    Every word belongs to two orthogonal groups: a "family" (synonym-style
    group; family members are emitted in adjacent pairs and live close
    together in embedding space) and a "theme" (which drives document
    composition and defines the planted topics).  Each theme holds exactly
    two words of every family, and draws are assigned to families from an
    exactly balanced shuffled schedule, so every document contains every
    family in equal measure.  A k-means baseline over the embeddings
    therefore recovers highly coherent family topics whose document
    allocations carry no real signal, while the planted theme model has
    informative allocations but weaker topic coherence.
    """

    def __init__(self, n_docs=200, n_families=10, K=5, draws_per_family=6,
                 partner_slots=3, dim=32, seed=0, embed_noise=0.3,
                 theta_pattern=(0.5, 0.3, 0.17, 0.015, 0.015)):
        rng = np.random.default_rng(seed)
        self.K = K
        self.n_families = n_families
        # word (i, k, j): family i, theme k, copy j
        self.families = [[f"f{i:02d}t{k}j{j}" for k in range(K)
                          for j in range(2)] for i in range(n_families)]
        self.themes = [[f"f{i:02d}t{k}j{j}" for j in range(2)
                        for i in range(n_families)] for k in range(K)]
        self.family_of = {w: i for i, fam in enumerate(self.families)
                          for w in fam}

        docs, thetas = [], {}
        for d in range(n_docs):
            order = rng.permutation(K)
            theta = np.zeros(K)
            theta[order] = theta_pattern
            # balanced schedule: each family gets draws_per_family draws at
            # random positions, partner_slots of which carry an adjacent
            # synonym partner, so per-family token counts match exactly
            # across documents
            schedule = rng.permutation(np.repeat(np.arange(n_families),
                                                 draws_per_family))
            with_partner = set()
            for i in range(n_families):
                slots = np.flatnonzero(schedule == i)
                with_partner.update(rng.choice(slots, size=partner_slots,
                                               replace=False))
            tokens = []
            for n, fam_i in enumerate(schedule):
                k = rng.choice(K, p=theta)
                tokens.append(f"f{fam_i:02d}t{k}j{rng.integers(2)}")
                if n in with_partner:
                    fam = self.families[fam_i]
                    tokens.append(fam[rng.integers(len(fam))])
            doc_id = f"doc{d:04d}"
            docs.append(Document(id=doc_id, raw_text=" ".join(tokens),
                                 tokens=tokens, snippet=" ".join(tokens[:12])))
            thetas[doc_id] = theta
        self.docs = docs
        self.vocab = Vocabulary.from_documents(docs)

        # planted-truth model: theme k, weights descending over its 20 words,
        # ordered so the top-10 words span all ten families
        topics = []
        for k in range(K):
            probs = np.zeros(len(self.vocab))
            for rank, w in enumerate(self.themes[k]):
                probs[self.vocab.id_of[w]] = 2.0 * n_families - rank
            topics.append(TopicWordDist(topic_id=k, probs=probs / probs.sum()))
        self.truth = TopicModelArtifact(
            name="truth", K=K, topics=topics,
            allocations={d: DocTopicDist(doc_id=d, theta=thetas[d])
                         for d in thetas},
            vocab_size=len(self.vocab))

        # embeddings: orthonormal family directions plus member noise that is
        # mean-centered within each family, so no family has a systematic
        # cosine advantage and document-level orderings are pure noise
        directions, _ = np.linalg.qr(rng.normal(size=(dim, n_families)))
        table = EmbeddingTable(dim=dim)
        for i, fam in enumerate(self.families):
            eps = rng.normal(size=(len(fam), dim)) / np.sqrt(dim)
            eps -= eps.mean(axis=0)
            for w, e in zip(fam, eps):
                v = directions[:, i] + embed_noise * e
                table.vector_of[w] = v / np.linalg.norm(v)
        self.embeddings = table


@pytest.fixture(scope="session")
def family_corpus():
    return FamilyCorpus(seed=7)
