import math

import numpy as np
import pytest

from topiceval import topicmodel as tm
from topiceval.corpus import Document, Vocabulary
from topiceval.topicmodel import (DocTopicDist, EmbeddingTable, ModelFormatError,
                                  TopicModelArtifact, TopicWordDist,
                                  cluster_allocation, cluster_topic_dist,
                                  kmeans_clusters, load_model, save_model)

from conftest import make_docs, uniform_model


def vocab_of(types):
    docs = make_docs([list(types)])
    return Vocabulary.from_documents(docs)


class TestDistributions:
    def test_uniform_round_trip(self, tmp_path):
        model = uniform_model("m", K=2, V=4, doc_ids=["d0", "d1"])
        path = tmp_path / "m.jsonl"
        save_model(model, path)
        loaded = load_model(path)
        for d in ("d0", "d1"):
            assert np.allclose(loaded.theta(d), [0.5, 0.5])

    def test_renormalization_within_tolerance(self):
        t = TopicWordDist(topic_id=0, probs=np.array([0.50005, 0.5]))
        assert abs(t.probs.sum() - 1.0) < 1e-6

    def test_large_deviation_is_error(self):
        with pytest.raises(ModelFormatError):
            TopicWordDist(topic_id=0, probs=np.array([0.6, 0.5]))
        with pytest.raises(ModelFormatError):
            DocTopicDist(doc_id="d", theta=np.array([0.7, -0.2, 0.5]))

    def test_round_trip_precision(self, tmp_path):
        rng = np.random.default_rng(3)
        topics = [TopicWordDist(topic_id=k, probs=rng.dirichlet(np.ones(30)))
                  for k in range(4)]
        allocations = {f"d{i}": DocTopicDist(doc_id=f"d{i}",
                                             theta=rng.dirichlet(np.ones(4)))
                       for i in range(5)}
        model = TopicModelArtifact(name="rt", K=4, topics=topics,
                                   allocations=allocations, vocab_size=30)
        path = tmp_path / "rt.jsonl"
        save_model(model, path, full_phi=True)
        loaded = load_model(path)
        for k in range(4):
            assert np.abs(loaded.topics[k].probs - topics[k].probs).max() < 1e-9
        for d in allocations:
            assert np.abs(loaded.theta(d) - allocations[d].theta).max() < 1e-9

    def test_sparse_cap_keeps_top_entries(self, tmp_path):
        V = 1500
        rng = np.random.default_rng(4)
        probs = rng.dirichlet(np.full(V, 0.05))
        model = TopicModelArtifact(
            name="cap", K=1,
            topics=[TopicWordDist(topic_id=0, probs=probs)],
            allocations={}, vocab_size=V)
        path = tmp_path / "cap.jsonl"
        save_model(model, path)
        loaded = load_model(path)
        # the capped top entries are exact; total mass is preserved
        order = np.argsort(-probs)[:tm.SPARSE_CAP]
        assert np.abs(loaded.topics[0].probs[order] - probs[order]).max() < 1e-9
        assert abs(loaded.topics[0].probs.sum() - 1.0) < 1e-6

    def test_top_words_tie_break_by_vocab_id(self):
        vocab = vocab_of(["b", "a", "c"])  # sorted: a,b,c
        t = TopicWordDist(topic_id=0, probs=np.array([0.25, 0.5, 0.25]))
        assert t.top_words(3, vocab) == ["b", "a", "c"]

    def test_top_words_invariant_under_rescaling(self):
        vocab = vocab_of(["a", "b", "c", "d"])
        scores = np.array([0.1, 3.0, 0.5, 1.2])
        t1 = TopicWordDist(topic_id=0, probs=scores / scores.sum())
        t2 = TopicWordDist(topic_id=0, probs=7.7 * scores / (7.7 * scores).sum())
        assert t1.top_words(4, vocab) == t2.top_words(4, vocab)

    def test_mismatched_allocation_length(self):
        with pytest.raises(ModelFormatError):
            TopicModelArtifact(
                name="bad", K=2,
                topics=[TopicWordDist(topic_id=k, probs=np.array([0.5, 0.5]))
                        for k in range(2)],
                allocations={"d": DocTopicDist(doc_id="d",
                                               theta=np.array([1/3] * 3))},
                vocab_size=2)


class TestKMeans:
    def two_cloud_table(self, n=10, dim=5, seed=0):
        rng = np.random.default_rng(seed)
        table = EmbeddingTable(dim=dim)
        words = []
        for i in range(n):
            w = f"a{i}"
            table.vector_of[w] = np.array([10.0, 0, 0, 0, 0]) + 0.1 * rng.normal(size=dim)
            words.append(w)
        for i in range(n):
            w = f"b{i}"
            table.vector_of[w] = np.array([-10.0, 0, 0, 0, 0]) + 0.1 * rng.normal(size=dim)
            words.append(w)
        return table, vocab_of(words)

    def test_separated_clouds_recovered(self):
        table, vocab = self.two_cloud_table()
        clusters = kmeans_clusters(table, vocab, k=2, seed=1)
        groups = sorted(sorted(set(w[0] for w in members)) for _, members in clusters)
        assert groups == [["a"], ["b"]]

    def test_k_equals_n_types(self):
        table, vocab = self.two_cloud_table(n=3)
        clusters = kmeans_clusters(table, vocab, k=6, seed=2)
        for centroid, members in clusters:
            assert len(members) == 1
            assert np.allclose(centroid, table[members[0]])

    def test_deterministic_given_seed(self):
        table, vocab = self.two_cloud_table(n=8)
        c1 = kmeans_clusters(table, vocab, k=3, seed=9)
        c2 = kmeans_clusters(table, vocab, k=3, seed=9)
        assert [m for _, m in c1] == [m for _, m in c2]

    def test_k_too_large(self):
        table, vocab = self.two_cloud_table(n=2)
        with pytest.raises(ValueError):
            kmeans_clusters(table, vocab, k=10, seed=0)


class TestClusterTopic:
    def test_linear_normalization_of_similarities(self):
        vocab = vocab_of(["x", "y"])
        table = EmbeddingTable(dim=2)
        centroid = np.array([1.0, 0.0])
        # cosines 0.8 and 0.2 by construction
        table.vector_of["x"] = np.array([0.8, 0.6])
        table.vector_of["y"] = np.array([0.2, math.sqrt(1 - 0.04)])
        t = cluster_topic_dist(centroid, table, vocab)
        assert np.allclose(t.probs, [0.8, 0.2])

    def test_orthogonal_type_gets_zero(self):
        vocab = vocab_of(["x", "y"])
        table = EmbeddingTable(dim=2)
        table.vector_of["x"] = np.array([1.0, 0.0])
        table.vector_of["y"] = np.array([0.0, 1.0])
        t = cluster_topic_dist(np.array([1.0, 0.0]), table, vocab)
        assert t.probs[vocab.id_of["y"]] == 0.0

    def test_negative_cosine_clamped(self):
        vocab = vocab_of(["x", "y"])
        table = EmbeddingTable(dim=2)
        table.vector_of["x"] = np.array([1.0, 0.0])
        table.vector_of["y"] = np.array([-1.0, 0.0])
        t = cluster_topic_dist(np.array([1.0, 0.0]), table, vocab)
        assert t.probs[vocab.id_of["y"]] == 0.0
        assert t.probs[vocab.id_of["x"]] == 1.0

    def test_five_type_hand_oracle(self):
        words = ["v", "w", "x", "y", "z"]
        vocab = vocab_of(words)
        rng = np.random.default_rng(11)
        table = EmbeddingTable(dim=4)
        for w in words:
            table.vector_of[w] = rng.normal(size=4)
        centroid = rng.normal(size=4)
        t = cluster_topic_dist(centroid, table, vocab)
        sims = np.array([max(np.dot(centroid, table[w]) /
                             (np.linalg.norm(centroid) * np.linalg.norm(table[w])), 0.0)
                         for w in vocab.types])
        assert np.abs(t.probs - sims / sims.sum()).max() < 1e-9

    def test_degenerate_centroid(self):
        vocab = vocab_of(["x"])
        table = EmbeddingTable(dim=2)
        table.vector_of["x"] = np.array([1.0, 0.0])
        with pytest.raises(ValueError):
            cluster_topic_dist(np.zeros(2), table, vocab)


class TestClusterAllocation:
    def make_setup(self):
        words = ["a0", "a1", "b0", "b1", "c0", "c1"]
        vocab = vocab_of(words)
        table = EmbeddingTable(dim=3)
        dirs = {"a": np.array([1.0, 0, 0]), "b": np.array([0, 1.0, 0]),
                "c": np.array([0, 0, 1.0])}
        for w in words:
            table.vector_of[w] = dirs[w[0]]
        topics = []
        for i, g in enumerate("abc"):
            probs = np.zeros(len(vocab))
            for w in (g + "0", g + "1"):
                probs[vocab.id_of[w]] = 0.5
            topics.append(tm.TopicWordDist(topic_id=i, probs=probs))
        return vocab, table, topics

    def test_single_topic(self):
        vocab, table, topics = self.make_setup()
        doc = Document(id="d", raw_text="", tokens=["a0", "a1"], snippet="")
        alloc = cluster_allocation(doc, topics[:1], table, vocab)
        assert np.allclose(alloc.theta, [1.0])

    def test_equidistant_gives_uniform(self):
        vocab, table, topics = self.make_setup()
        doc = Document(id="d", raw_text="", tokens=["a0", "b0", "c0"], snippet="")
        alloc = cluster_allocation(doc, topics, table, vocab)
        assert np.allclose(alloc.theta, [1/3] * 3)

    def test_three_topic_hand_oracle(self):
        vocab, table, topics = self.make_setup()
        doc = Document(id="d", raw_text="", tokens=["a0", "a1", "b0"], snippet="")
        alloc = cluster_allocation(doc, topics, table, vocab)
        dvec = (table["a0"] + table["a1"] + table["b0"]) / 3
        sims = []
        for g in "abc":
            tvec = table[g + "0"]  # both topic words share the direction
            sims.append(max(np.dot(dvec, tvec) /
                            (np.linalg.norm(dvec) * np.linalg.norm(tvec)), 0.0))
        sims = np.array(sims)
        assert np.abs(alloc.theta - sims / sims.sum()).max() < 1e-9

    def test_no_embedded_tokens_uniform_flagged(self, caplog):
        vocab, table, topics = self.make_setup()
        doc = Document(id="d", raw_text="", tokens=["zz"], snippet="")
        with caplog.at_level("WARNING"):
            alloc = cluster_allocation(doc, topics, table, vocab)
        assert np.allclose(alloc.theta, [1/3] * 3)
        assert any("no embedded tokens" in r.message for r in caplog.records)

    def test_near_uniform_spread_bound(self):
        # all pairwise cosine similarities within [s-eps, s+eps] implies
        # max(theta) - min(theta) <= eps*K / (K*s - K*eps)
        s, eps, K = 0.5, 0.02, 4
        rng = np.random.default_rng(5)
        sims = s + eps * (2 * rng.random(K) - 1)
        theta = sims / sims.sum()
        assert theta.max() - theta.min() <= eps * K / (K * s - K * eps) + 1e-12


class TestEmbeddingIO:
    def test_round_trip(self, tmp_path):
        table = EmbeddingTable(dim=3)
        table.vector_of["cat"] = np.array([0.1, -0.25, 3.0])
        table.vector_of["dog"] = np.array([1.0, 2.0, -0.5])
        path = tmp_path / "vec.txt"
        tm.save_embeddings(table, path)
        loaded = tm.load_embeddings(path)
        assert loaded.dim == 3
        for w in table.vector_of:
            assert np.allclose(loaded[w], table[w])

    def test_bad_row_rejected(self, tmp_path):
        path = tmp_path / "vec.txt"
        path.write_text("1 3\ncat 0.1 0.2\n")
        with pytest.raises(ValueError):
            tm.load_embeddings(path)
