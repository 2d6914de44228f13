"""Corpus ingestion, preprocessing, inverted index and co-occurrence counts.

Preprocessing follows a fixed recipe: rule-based tokenization, lower-casing,
stop word removal, a minimum type frequency floor, and exclusion of the most
frequent word types.  The inverted index and the window/document
co-occurrence statistics built here back every downstream scorer.
"""

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources

from . import records

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[^\W_]+(?:['\-][^\W_]+)*")
_SENT_RE = re.compile(r"(?<=[.!?])[\"')\]]*\s+(?=[\"'(\[]?[A-Z0-9])")


def default_stopwords() -> frozenset[str]:
    """The bundled English stop word list."""
    text = resources.files("topiceval.data").joinpath("stopwords_en.txt").read_text()
    return frozenset(w for w in text.split() if w)


def load_stopwords(path: str) -> frozenset[str]:
    with open(path, encoding="utf-8") as f:
        return frozenset(w.strip().lower() for w in f if w.strip())


def tokenize(text: str) -> list[str]:
    """Lower-cased word tokens via Unicode word boundaries."""
    return [m.group(0).lower() for m in _TOKEN_RE.finditer(text)]


def split_sentences(text: str) -> list[str]:
    """Split on .!? followed by whitespace and an upper-case/digit start."""
    parts = _SENT_RE.split(text.strip())
    return [p for p in parts if p]


def snippet_of(text: str, n_sentences: int = 3) -> str:
    sents = split_sentences(text)
    if len(sents) <= n_sentences:
        return text.strip()
    snippet = text.strip()
    # Recover the raw-text prefix covering the first n sentences so the
    # snippet stays a prefix of raw_text.
    joined = sents[n_sentences - 1]
    cut = snippet.find(joined) + len(joined)
    return snippet[:cut]


@dataclass
class Document:
    id: str
    raw_text: str
    tokens: list[str]
    snippet: str


@dataclass
class Vocabulary:
    types: list[str]
    id_of: dict[str, int]
    doc_freq: dict[str, int]
    coll_freq: dict[str, int]
    total_tokens: int

    def __len__(self) -> int:
        return len(self.types)

    def __contains__(self, word: str) -> bool:
        return word in self.id_of

    @classmethod
    def from_documents(cls, docs: list[Document]) -> "Vocabulary":
        coll: Counter[str] = Counter()
        dfreq: Counter[str] = Counter()
        for d in docs:
            coll.update(d.tokens)
            dfreq.update(set(d.tokens))
        types = sorted(coll)
        return cls(types=types,
                   id_of={t: i for i, t in enumerate(types)},
                   doc_freq=dict(dfreq),
                   coll_freq=dict(coll),
                   total_tokens=sum(coll.values()))


@dataclass
class PreprocessConfig:
    stopwords: frozenset[str] = field(default_factory=default_stopwords)
    min_count: int = 10
    top_fraction: float = 0.001
    snippet_sentences: int = 3


def preprocess(raw_docs: list[dict], config: PreprocessConfig | None = None,
               ) -> tuple[list[Document], Vocabulary, list[str]]:
    """Tokenize and filter a raw corpus.

    `raw_docs` holds dicts with an `id` and either `text` or a pre-tokenized
    `tokens` list.  Returns the filtered documents, the vocabulary computed
    after all filters, and the ids of documents left empty by filtering
    (retained, not dropped).
    """
    if not raw_docs:
        raise ValueError("empty corpus")
    config = config or PreprocessConfig()

    docs: list[Document] = []
    for i, raw in enumerate(raw_docs):
        doc_id = str(raw.get("id", i))
        if "tokens" in raw:
            toks = [t.lower() for t in raw["tokens"]]
            text = raw.get("text", " ".join(raw["tokens"]))
        else:
            text = raw["text"]
            toks = tokenize(text)
        toks = [t for t in toks if t not in config.stopwords]
        docs.append(Document(id=doc_id, raw_text=text, tokens=toks,
                             snippet=snippet_of(text, config.snippet_sentences)))

    coll: Counter[str] = Counter()
    for d in docs:
        coll.update(d.tokens)

    n_excluded = int(len(coll) * config.top_fraction)
    by_freq = sorted(coll.items(), key=lambda kv: (-kv[1], kv[0]))
    excluded = {w for w, _ in by_freq[:n_excluded]}
    kept = {w for w, c in coll.items()
            if c >= config.min_count and w not in excluded}

    empty_ids = []
    for d in docs:
        d.tokens = [t for t in d.tokens if t in kept]
        if not d.tokens:
            empty_ids.append(d.id)
    if empty_ids:
        logger.warning("%d documents empty after filtering: %s",
                       len(empty_ids), empty_ids[:10])

    vocab = Vocabulary.from_documents(docs)
    # Types appearing in no document (all were filtered) never reach the
    # vocabulary because it is recomputed from the filtered streams.
    return docs, vocab, empty_ids


class InvertedIndex:
    """Postings, document lengths and collection statistics for retrieval."""

    def __init__(self) -> None:
        self.postings: dict[str, dict[str, int]] = {}
        self.doc_len: dict[str, int] = {}
        self.num_docs: int = 0
        # caches; the index is immutable once built
        self._total_tokens: int | None = None
        self._coll_freq: dict[str, int] | None = None

    @property
    def total_tokens(self) -> int:
        if self._total_tokens is None:
            self._total_tokens = sum(self.doc_len.values())
        return self._total_tokens

    def tf(self, word: str, doc_id: str) -> int:
        return self.postings.get(word, {}).get(doc_id, 0)

    def coll_freq(self, word: str) -> int:
        if self._coll_freq is None:
            self._coll_freq = {w: sum(p.values())
                               for w, p in self.postings.items()}
        return self._coll_freq.get(word, 0)

    def sorted_postings(self, word: str) -> list[tuple[str, int]]:
        return sorted(self.postings.get(word, {}).items())


def build_index(docs: list[Document]) -> InvertedIndex:
    index = InvertedIndex()
    for d in docs:
        index.doc_len[d.id] = len(d.tokens)
        for w, c in Counter(d.tokens).items():
            index.postings.setdefault(w, {})[d.id] = c
    index.num_docs = len(docs)
    return index


def _canon(w1: str, w2: str) -> tuple[str, str]:
    return (w1, w2) if w1 <= w2 else (w2, w1)


@dataclass
class CooccurrenceStats:
    """Unit-level (window or document) co-occurrence counts.

    A pair is counted at most once per unit; `single_count` is the number of
    units containing the type and `unit_count` the total number of units.
    """
    mode: str  # "window" | "document"
    window_size: int
    pair_count: dict[tuple[str, str], int]
    single_count: dict[str, int]
    unit_count: int

    def pair(self, w1: str, w2: str) -> int:
        return self.pair_count.get(_canon(w1, w2), 0)

    def single(self, w: str) -> int:
        return self.single_count.get(w, 0)


def count_cooccurrence(docs: list[Document], mode: str = "window",
                       window_size: int = 20) -> CooccurrenceStats:
    """Count unit-level co-occurrences over the corpus.

    In window mode the units are all sliding windows of `window_size`
    consecutive tokens (a document shorter than the window is one unit); in
    document mode the units are whole documents.
    """
    if mode not in ("window", "document"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "window" and window_size < 2:
        raise ValueError("window_size must be >= 2")

    pair: Counter[tuple[str, str]] = Counter()
    single: Counter[str] = Counter()
    units = 0

    def add_unit(tokens: list[str]) -> None:
        nonlocal units
        units += 1
        uniq = sorted(set(tokens))
        single.update(uniq)
        for i, w1 in enumerate(uniq):
            for w2 in uniq[i + 1:]:
                pair[(w1, w2)] += 1

    for d in docs:
        toks = d.tokens
        if mode == "document":
            if toks:
                add_unit(toks)
            else:
                units += 1
        else:
            if len(toks) <= window_size:
                if toks:
                    add_unit(toks)
            else:
                for i in range(len(toks) - window_size + 1):
                    add_unit(toks[i:i + window_size])

    return CooccurrenceStats(mode=mode, window_size=window_size if mode == "window" else 0,
                             pair_count=dict(pair), single_count=dict(single),
                             unit_count=units)


# ---------------------------------------------------------------------------
# serialization

def save_documents(docs: list[Document], path, meta: dict | None = None) -> None:
    records.write_records(path, "documents",
                          ({"id": d.id, "text": d.raw_text, "tokens": d.tokens,
                            "snippet": d.snippet} for d in docs), meta)


def load_documents(path) -> list[Document]:
    return [Document(id=r["id"], raw_text=r["text"], tokens=r["tokens"],
                     snippet=r["snippet"])
            for r in records.iter_records(path, "documents")]


def save_index(index: InvertedIndex, path, meta: dict | None = None) -> None:
    def gen():
        yield {"doc_len": dict(sorted(index.doc_len.items())),
               "num_docs": index.num_docs}
        for w in sorted(index.postings):
            yield {"w": w, "p": index.sorted_postings(w)}
    records.write_records(path, "index", gen(), meta)


def load_index(path) -> InvertedIndex:
    index = InvertedIndex()
    it = records.iter_records(path, "index")
    head = next(it)
    index.doc_len = dict(head["doc_len"])
    index.num_docs = head["num_docs"]
    for r in it:
        index.postings[r["w"]] = {d: int(c) for d, c in r["p"]}
    return index


def save_cooccurrence(stats: CooccurrenceStats, path, meta: dict | None = None) -> None:
    def gen():
        yield {"mode": stats.mode, "window_size": stats.window_size,
               "unit_count": stats.unit_count}
        for w in sorted(stats.single_count):
            yield {"w": w, "c": stats.single_count[w]}
        for (w1, w2) in sorted(stats.pair_count):
            yield {"p": [w1, w2], "c": stats.pair_count[(w1, w2)]}
    records.write_records(path, "cooccurrence", gen(), meta)


def load_cooccurrence(path) -> CooccurrenceStats:
    it = records.iter_records(path, "cooccurrence")
    head = next(it)
    stats = CooccurrenceStats(mode=head["mode"], window_size=head["window_size"],
                              pair_count={}, single_count={},
                              unit_count=head["unit_count"])
    for r in it:
        if "w" in r:
            stats.single_count[r["w"]] = r["c"]
        else:
            w1, w2 = r["p"]
            stats.pair_count[(w1, w2)] = r["c"]
    return stats


def save_vocabulary(vocab: Vocabulary, path, meta: dict | None = None) -> None:
    def gen():
        yield {"total_tokens": vocab.total_tokens, "size": len(vocab)}
        for t in vocab.types:
            yield {"t": t, "df": vocab.doc_freq[t], "cf": vocab.coll_freq[t]}
    records.write_records(path, "vocabulary", gen(), meta)


def load_vocabulary(path) -> Vocabulary:
    it = records.iter_records(path, "vocabulary")
    next(it)
    types, dfreq, cfreq = [], {}, {}
    for r in it:
        types.append(r["t"])
        dfreq[r["t"]] = r["df"]
        cfreq[r["t"]] = r["cf"]
    return Vocabulary(types=types, id_of={t: i for i, t in enumerate(types)},
                      doc_freq=dfreq, coll_freq=cfreq,
                      total_tokens=sum(cfreq.values()))


def read_raw_corpus(path: str) -> list[dict]:
    """Read a corpus file: JSONL records with id/text (or tokens), or plain
    one-document-per-line text."""
    raw = []
    with open(path, encoding="utf-8") as f:
        for i, line in enumerate(f):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.lstrip().startswith("{"):
                import json
                rec = json.loads(line)
                if rec.get("kind") == "documents":  # header of our own format
                    continue
                raw.append(rec)
            else:
                raw.append({"id": str(i), "text": line})
    return raw
