"""Predicate embeddings: random walks, a numpy skip-gram trainer, word-vector
loading, and cosine-based similarity sets."""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .rdf import Graph, Kind, Term

log = logging.getLogger(__name__)

GRAPH_MODE = "graph-embedding"
WORD_MODE = "word-embedding"


class EmbeddingError(Exception):
    pass


class EmptyCorpus(EmbeddingError):
    pass


class UnknownPredicate(EmbeddingError, KeyError):
    pass


class ZeroVector(EmbeddingError, ValueError):
    pass


class UndefinedSimilarity(EmbeddingError, ValueError):
    pass


class EmptyClass(UndefinedSimilarity):
    pass


class VectorFormatError(EmbeddingError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DimensionMismatch(VectorFormatError):
    pass


class VectorParseError(VectorFormatError):
    pass


def token_of(term: Term) -> str:
    """Walk/vocabulary token for a term: bare IRI text, otherwise its N-Triples form."""
    return term.value if term.kind == Kind.IRI else term.n3()


# --- vector store ----------------------------------------------------------

class VectorStore:
    """Immutable token -> vector map backed by a single float64 matrix."""

    def __init__(self, tokens: Sequence[str], matrix: np.ndarray, mode: str = GRAPH_MODE):
        matrix = np.array(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(tokens):
            raise ValueError("matrix must have one row per token")
        if matrix.shape[1] < 1:
            raise ValueError("dims must be positive")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("vectors contain NaN or Inf")
        if mode not in (GRAPH_MODE, WORD_MODE):
            raise ValueError(f"unknown mode {mode!r}")
        matrix.setflags(write=False)
        self.tokens = tuple(tokens)
        self.matrix = matrix
        self.mode = mode
        self._index = {t: i for i, t in enumerate(self.tokens)}

    @property
    def dims(self) -> int:
        return self.matrix.shape[1]

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __getitem__(self, token: str) -> np.ndarray:
        return self.matrix[self._index[token]]

    def get(self, token: str) -> Optional[np.ndarray]:
        i = self._index.get(token)
        return None if i is None else self.matrix[i]

    def __eq__(self, other):
        if not isinstance(other, VectorStore):
            return NotImplemented
        return (self.mode == other.mode and self.tokens == other.tokens
                and np.array_equal(self.matrix, other.matrix))

    def to_text(self) -> str:
        lines = [f"{len(self.tokens)} {self.dims}"]
        for tok, row in zip(self.tokens, self.matrix):
            lines.append(tok + " " + " ".join(repr(float(x)) for x in row))
        return "\n".join(lines) + "\n"


def load_vectors(source: Union[bytes, str, IO]) -> VectorStore:
    """Read the classic word-vector text layout (optional ``count dims`` header)."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data

    tokens: list[str] = []
    rows: list[list[float]] = []
    dims: Optional[int] = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
            dims = int(parts[1])
            continue
        token, values = parts[0], parts[1:]
        try:
            vec = [float(v) for v in values]
        except ValueError:
            raise VectorParseError(lineno, "non-numeric component") from None
        if not vec:
            raise VectorParseError(lineno, "token without components")
        if dims is None:
            dims = len(vec)
        if len(vec) != dims:
            raise DimensionMismatch(lineno, f"expected {dims} components, got {len(vec)}")
        if not all(math.isfinite(x) for x in vec):
            raise VectorParseError(lineno, "non-finite component")
        tokens.append(token)
        rows.append(vec)
    if dims is None:
        raise VectorParseError(0, "no vectors found")
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), dims)
    return VectorStore(tokens, matrix, mode=WORD_MODE)


def read_vectors(path) -> VectorStore:
    with open(path, "rb") as fh:
        return load_vectors(fh)


# --- predicate lookup and similarity ---------------------------------------

_CAMEL = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+")


def local_name(iri: str) -> str:
    cut = max(iri.rfind("/"), iri.rfind("#"), iri.rfind(":"))
    return iri[cut + 1:]


def split_words(name: str) -> list[str]:
    """``birthPlace`` -> [birth, place]; ``HTTPStatus_code`` -> [http, status, code]."""
    words = []
    for chunk in re.split(r"[^A-Za-z0-9]+", name):
        words.extend(w.lower() for w in _CAMEL.findall(chunk))
    return words


def predicate_vector(store: VectorStore, predicate: Union[str, Term]) -> np.ndarray:
    iri = predicate.value if isinstance(predicate, Term) else predicate
    if store.mode == GRAPH_MODE:
        vec = store.get(iri)
        if vec is None:
            raise UnknownPredicate(iri)
        return vec
    found = [store.get(w) for w in split_words(local_name(iri))]
    found = [v for v in found if v is not None]
    if not found:
        raise UnknownPredicate(iri)
    return np.mean(found, axis=0)


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch {u.shape} vs {v.shape}")
    nu = math.sqrt(float(np.dot(u, u)))
    nv = math.sqrt(float(np.dot(v, v)))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine of a zero vector is undefined")
    c = float(np.dot(u, v)) / (nu * nv)
    return min(1.0, max(-1.0, c))


def class_similarity(c1: Mapping[str, np.ndarray], c2: Mapping[str, np.ndarray]) -> float:
    """Mean pairwise cosine between two entity classes, skipping identical entities.

    Classes are given as entity -> vector mappings so identity is by entity, not
    by vector value.
    """
    if not c1 or not c2:
        raise EmptyClass("both classes need at least one entity")
    scores = [cosine(u, v) for a, u in c1.items() for b, v in c2.items() if a != b]
    if not scores:
        raise UndefinedSimilarity("no pair of distinct entities")
    return float(np.mean(scores))


@dataclass(frozen=True)
class SimilaritySet:
    anchor: str
    members: Mapping[str, float]
    threshold: float

    def __contains__(self, iri: str) -> bool:
        return iri in self.members

    def names(self) -> frozenset:
        return frozenset(self.members)


def similar_predicates(store: VectorStore, anchor: str, candidates: Iterable[str],
                       threshold: float = 0.5) -> SimilaritySet:
    """Candidates whose cosine to ``anchor`` is strictly above ``threshold``, plus the anchor."""
    anchor = _iri(anchor)
    base = predicate_vector(store, anchor)
    members = {anchor: 1.0}
    for cand in sorted({_iri(c) for c in candidates}):
        if cand == anchor:
            continue
        try:
            vec = predicate_vector(store, cand)
        except UnknownPredicate:
            log.warning("no vector for candidate predicate %s; skipped", cand)
            continue
        try:
            score = cosine(base, vec)
        except ZeroVector:
            log.warning("zero vector for %s; skipped", cand)
            continue
        if score > threshold:
            members[cand] = score
    return SimilaritySet(anchor, members, threshold)


# --- random walks ------------------------------------------------------------

@dataclass
class WalkCorpus:
    sequences: list
    walk_length: int
    walks_per_entity: int
    seed: int

    def __len__(self):
        return len(self.sequences)

    def to_text(self) -> str:
        return "".join(" ".join(seq) + "\n" for seq in self.sequences)


def generate_walks(graph: Graph, walk_length: int = 4, walks_per_entity: int = 10,
                   seed: int = 0) -> WalkCorpus:
    """Uniform random out-edge walks ``s p1 o1 p2 o2 ...`` from every subject.

    Each start entity draws from its own generator seeded by ``(seed, entity id)``,
    so a walk does not depend on which other entities were walked first.
    """
    if walk_length < 1:
        raise ValueError("walk_length must be >= 1")
    terms = graph.terms
    tokens = [token_of(t) for t in terms]
    out_edges: dict[int, list] = {}
    for s, p, o in graph.rows():
        out_edges.setdefault(s, []).append((p, o))
    sequences = []
    for start in sorted(out_edges):
        rng = np.random.default_rng([seed, start])
        for _ in range(walks_per_entity):
            seq = [tokens[start]]
            node = start
            for _ in range(walk_length):
                edges = out_edges.get(node)
                if not edges:
                    break
                p, o = edges[int(rng.integers(len(edges)))]
                seq.append(tokens[p])
                seq.append(tokens[o])
                node = o
            sequences.append(seq)
    return WalkCorpus(sequences, walk_length, walks_per_entity, seed)


# --- skip-gram with negative sampling ---------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    dims: int = 64
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    seed: int = 0
    batch_size: int = 256

    def __post_init__(self):
        for name in ("dims", "window", "negatives", "epochs", "batch_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.dims > 1024:
            raise ValueError("dims must be <= 1024")


def _skipgram_pairs(encoded: list, window: int) -> np.ndarray:
    centers, contexts = [], []
    for seq in encoded:
        n = len(seq)
        if n < 2:
            continue
        arr = np.asarray(seq, dtype=np.int64)
        for off in range(1, min(window, n - 1) + 1):
            centers.append(arr[:-off])
            contexts.append(arr[off:])
            centers.append(arr[off:])
            contexts.append(arr[:-off])
    if not centers:
        return np.empty((0, 2), dtype=np.int64)
    return np.stack([np.concatenate(centers), np.concatenate(contexts)], axis=1)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def train_skipgram(corpus: Union[WalkCorpus, Sequence[Sequence[str]]],
                   cfg: TrainConfig = TrainConfig()) -> VectorStore:
    """Mini-batch SGNS over ``corpus``; deterministic for a given ``cfg.seed``.

    Negatives are drawn from the unigram distribution raised to 3/4 and the
    learning rate decays linearly to 1e-4 of its start value.
    """
    sequences = corpus.sequences if isinstance(corpus, WalkCorpus) else corpus
    counts: dict[str, int] = {}
    for seq in sequences:
        for tok in seq:
            counts[tok] = counts.get(tok, 0) + 1
    if not counts:
        raise EmptyCorpus("corpus has no tokens")
    vocab = sorted(counts)
    index = {t: i for i, t in enumerate(vocab)}
    encoded = [[index[t] for t in seq] for seq in sequences]

    rng = np.random.default_rng(cfg.seed)
    n, d = len(vocab), cfg.dims
    w_in = (rng.random((n, d)) - 0.5) / d
    w_out = np.zeros((n, d))

    freq = np.array([counts[t] for t in vocab], dtype=np.float64) ** 0.75
    cdf = np.cumsum(freq / freq.sum())
    cdf[-1] = 1.0

    pairs = _skipgram_pairs(encoded, cfg.window)
    total = len(pairs) * cfg.epochs
    if total == 0:
        return VectorStore(vocab, w_in, mode=GRAPH_MODE)

    k = cfg.negatives
    seen = 0
    lr0 = cfg.learning_rate
    for _ in range(cfg.epochs):
        order = rng.permutation(len(pairs))
        for start in range(0, len(order), cfg.batch_size):
            batch = pairs[order[start:start + cfg.batch_size]]
            lr = max(lr0 * (1.0 - seen / total), lr0 * 1e-4)
            seen += len(batch)
            centers, ctx = batch[:, 0], batch[:, 1]
            negs = np.searchsorted(cdf, rng.random((len(batch), k)), side="right")
            targets = np.concatenate([ctx[:, None], negs], axis=1)  # (b, 1+k)
            labels = np.zeros(targets.shape)
            labels[:, 0] = 1.0

            h = w_in[centers]                     # (b, d)
            out = w_out[targets]                  # (b, 1+k, d)
            score = np.einsum("bd,bkd->bk", h, out)
            g = (labels - _sigmoid(score)) * lr   # (b, 1+k)
            grad_h = np.einsum("bk,bkd->bd", g, out)
            grad_out = g[:, :, None] * h[:, None, :]
            np.add.at(w_out, targets.ravel(), grad_out.reshape(-1, d))
            np.add.at(w_in, centers, grad_h)
    return VectorStore(vocab, w_in, mode=GRAPH_MODE)


# --- similarity providers ------------------------------------------------------

def _iri(p) -> str:
    return p.value if isinstance(p, Term) else p


def store_similarity_sets(store: VectorStore, anchors: Iterable, candidates: Iterable,
                          threshold: float = 0.5) -> dict:
    """Similarity set per anchor; an anchor without a vector gets a singleton set."""
    cands = sorted({_iri(c) for c in candidates})
    out = {}
    for anchor in sorted({_iri(a) for a in anchors}):
        try:
            out[anchor] = similar_predicates(store, anchor, cands, threshold)
        except UnknownPredicate:
            log.warning("no vector for query predicate %s; left unrewritten", anchor)
            out[anchor] = SimilaritySet(anchor, {anchor: 1.0}, threshold)
    return out


def planted_similarity_sets(clusters: Iterable[Iterable], anchors: Iterable, candidates: Iterable,
                            threshold: float = 0.5) -> dict:
    """Similarity sets read off known synonym clusters (score 1.0 inside a cluster)."""
    cluster_of = {}
    for cluster in clusters:
        names = frozenset(_iri(p) for p in cluster)
        for p in names:
            cluster_of[p] = names
    cands = {_iri(c) for c in candidates}
    out = {}
    for anchor in sorted({_iri(a) for a in anchors}):
        same = cluster_of.get(anchor, frozenset({anchor}))
        members = {anchor: 1.0}
        members.update((c, 1.0) for c in sorted(cands & same) if c != anchor)
        out[anchor] = SimilaritySet(anchor, members, threshold)
    return out


@dataclass(frozen=True)
class EmbeddingConfig:
    """Where predicate similarity comes from.

    ``rdf2vec`` trains skip-gram on random walks over the graph handed to
    :meth:`similarity_sets`; ``word-vectors`` uses a loaded store; ``oracle``
    uses known clusters.
    """
    source: str = "rdf2vec"
    vectors: Optional[VectorStore] = None
    clusters: Optional[tuple] = None
    walk_length: int = 4
    walks_per_entity: int = 10
    train: TrainConfig = TrainConfig()

    def __post_init__(self):
        if self.source not in ("rdf2vec", "word-vectors", "oracle"):
            raise ValueError(f"unknown embedding source {self.source!r}")
        if self.source == "word-vectors" and self.vectors is None:
            raise ValueError("word-vectors source needs a loaded VectorStore")
        if self.source == "oracle" and self.clusters is None:
            raise ValueError("oracle source needs clusters")

    def store_for(self, graph: Graph) -> Optional[VectorStore]:
        if self.source == "word-vectors":
            return self.vectors
        if self.source == "oracle":
            return None
        corpus = generate_walks(graph, self.walk_length, self.walks_per_entity, self.train.seed)
        if not corpus.sequences:
            return None
        return train_skipgram(corpus, self.train)

    def similarity_sets(self, graph: Graph, anchors: Iterable, candidates: Iterable,
                        threshold: float = 0.5) -> dict:
        anchors = list(anchors)
        if self.source == "oracle":
            return planted_similarity_sets(self.clusters, anchors, candidates, threshold)
        store = self.store_for(graph)
        if store is None:
            return {a: SimilaritySet(a, {a: 1.0}, threshold) for a in sorted({_iri(x) for x in anchors})}
        return store_similarity_sets(store, anchors, candidates, threshold)
