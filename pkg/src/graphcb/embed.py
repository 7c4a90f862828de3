"""Graph sentences and dense concept embeddings.

Concepts are treated as words and graphs as sentences: a graph's sentence at
height k is the lexicographically sorted list of its nodes' codes, and each
level contributes one extra "vocabulary sentence" listing the selected
concepts so that even rare concepts receive an embedding.

Embeddings come from a weighted least-squares factorization of the
sentence-level co-occurrence matrix: minimize
f(X_ij) (w_i . v_j + b_i + c_j - log X_ij)^2 over co-occurring pairs, with
f(x) = min(1, (x / x_max)^alpha). Trained full-batch with AdaGrad, so runs
are deterministic for a fixed seed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateCorpusError,
    ShapeError,
    VocabularyMissError,
)
from .graphs import GraphDataset
from .wl import SelectedConcepts, ConceptVocabulary, wl_refine


@dataclass(frozen=True)
class GraphSentence:
    level: int
    tokens: tuple[str, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ShapeError("a graph sentence cannot be empty")
        if list(self.tokens) != sorted(self.tokens):
            raise ConfigurationError("sentence tokens must be sorted")


@dataclass(frozen=True)
class SentenceCorpus:
    sentences: tuple[GraphSentence, ...]
    token_ids: dict[str, int]

    def __len__(self) -> int:
        return len(self.sentences)


def build_corpus(
    dataset: GraphDataset,
    vocabularies: list[ConceptVocabulary],
    selections: list[SelectedConcepts],
    num_levels: int,
    refined=None,
) -> SentenceCorpus:
    """All graph sentences for k = 1..num_levels plus one vocabulary sentence
    per level; token ids follow first appearance."""
    sentences: list[GraphSentence] = []
    for k in range(1, num_levels + 1):
        for i, graph in enumerate(dataset.graphs):
            codes = (
                refined[i][k - 1] if refined is not None else wl_refine(graph, k)[k - 1]
            )
            sentences.append(GraphSentence(level=k, tokens=tuple(sorted(codes))))
        vocab = vocabularies[k - 1]
        selected = selections[k - 1]
        concept_codes = sorted(vocab.codes[j] for j in selected.concept_ids)
        sentences.append(GraphSentence(level=k, tokens=tuple(concept_codes)))
    token_ids: dict[str, int] = {}
    for s in sentences:
        for t in s.tokens:
            if t not in token_ids:
                token_ids[t] = len(token_ids)
    return SentenceCorpus(sentences=tuple(sentences), token_ids=token_ids)


@dataclass(frozen=True)
class ConceptEmbeddingTable:
    dim: int
    tokens: tuple[str, ...]
    vectors: np.ndarray  # (len(tokens), dim)

    def __post_init__(self):
        if self.vectors.shape != (len(self.tokens), self.dim):
            raise ShapeError("embedding table shape mismatch")
        if not np.isfinite(self.vectors).all():
            raise ConfigurationError("embedding table contains non-finite entries")

    @property
    def index(self) -> dict[str, int]:
        cached = self.__dict__.get("_index")
        if cached is None:
            cached = {t: i for i, t in enumerate(self.tokens)}
            self.__dict__["_index"] = cached
        return cached

    def vector(self, token: str) -> np.ndarray:
        j = self.index.get(token)
        if j is None:
            raise VocabularyMissError(f"token {token!r} not in embedding table")
        return self.vectors[j]


def cooccurrence_pairs(corpus: SentenceCorpus):
    """Symmetric whole-sentence co-occurrence counts as (i, j, count) arrays.

    Every ordered pair of distinct positions in a sentence co-occurs; token
    order inside a sentence is artificial (it is sorted), so no distance
    weighting applies.
    """
    counts: Counter = Counter()
    ids = corpus.token_ids
    for s in corpus.sentences:
        toks = [ids[t] for t in s.tokens]
        type_counts = Counter(toks)
        items = sorted(type_counts.items())
        for a, (ta, na) in enumerate(items):
            if na > 1:
                counts[(ta, ta)] += na * (na - 1)
            for tb, nb in items[a + 1 :]:
                counts[(ta, tb)] += na * nb
                counts[(tb, ta)] += na * nb
    keys = sorted(counts)
    rows = np.array([k[0] for k in keys], dtype=np.int64)
    cols = np.array([k[1] for k in keys], dtype=np.int64)
    vals = np.array([counts[k] for k in keys], dtype=np.float64)
    return rows, cols, vals


def train_embeddings(
    corpus: SentenceCorpus,
    dim: int = 64,
    epochs: int = 80,
    seed: int = 0,
    learning_rate: float = 0.05,
    x_max: float = 100.0,
    alpha: float = 0.75,
) -> ConceptEmbeddingTable:
    """Fit token embeddings to the corpus co-occurrence matrix.

    The final embedding of a token is the sum of its word and context
    vectors. Deterministic for a fixed seed.
    """
    if dim < 2:
        raise ConfigurationError(f"embedding dim must be >= 2, got {dim}")
    n_tokens = len(corpus.token_ids)
    if n_tokens < 2:
        raise DegenerateCorpusError(
            f"corpus has {n_tokens} distinct token(s); nothing to co-occur"
        )
    rows, cols, vals = cooccurrence_pairs(corpus)
    if len(vals) == 0:
        raise DegenerateCorpusError("no co-occurring token pairs in corpus")

    rng = np.random.default_rng(seed)
    scale = 0.5 / dim
    w = rng.uniform(-scale, scale, size=(n_tokens, dim))
    v = rng.uniform(-scale, scale, size=(n_tokens, dim))
    bw = np.zeros(n_tokens)
    bv = np.zeros(n_tokens)
    # AdaGrad accumulators start at 1 so early steps equal the learning rate.
    gw = np.ones_like(w)
    gv = np.ones_like(v)
    gbw = np.ones_like(bw)
    gbv = np.ones_like(bv)

    log_x = np.log(vals)
    weight = np.minimum(1.0, (vals / x_max) ** alpha)

    for _ in range(epochs):
        pred = np.einsum("ij,ij->i", w[rows], v[cols]) + bw[rows] + bv[cols]
        err = weight * (pred - log_x)  # (nnz,)
        grad_w = err[:, None] * v[cols]
        grad_v = err[:, None] * w[rows]
        dw = np.zeros_like(w)
        dv = np.zeros_like(v)
        dbw = np.zeros_like(bw)
        dbv = np.zeros_like(bv)
        np.add.at(dw, rows, grad_w)
        np.add.at(dv, cols, grad_v)
        np.add.at(dbw, rows, err)
        np.add.at(dbv, cols, err)
        w -= learning_rate * dw / np.sqrt(gw)
        v -= learning_rate * dv / np.sqrt(gv)
        bw -= learning_rate * dbw / np.sqrt(gbw)
        bv -= learning_rate * dbv / np.sqrt(gbv)
        gw += dw * dw
        gv += dv * dv
        gbw += dbw * dbw
        gbv += dbv * dbv

    tokens = tuple(corpus.token_ids)  # insertion order == id order
    return ConceptEmbeddingTable(dim=dim, tokens=tokens, vectors=w + v)


def embed_graph(
    sentence: GraphSentence, table: ConceptEmbeddingTable, strict: bool = True
) -> np.ndarray:
    """Sum of the sentence's token vectors.

    ``strict=False`` skips tokens missing from the table (held-out graphs
    against a training-corpus table); by default a miss raises.
    """
    out = np.zeros(table.dim)
    index = table.index
    for t in sentence.tokens:
        j = index.get(t)
        if j is None:
            if strict:
                raise VocabularyMissError(f"token {t!r} not in embedding table")
            continue
        out += table.vectors[j]
    return out


def embedding_concept_labels(
    graph_vec: np.ndarray, concept_vectors: np.ndarray
) -> np.ndarray:
    """Cosine similarity of the graph vector with each concept vector.

    Scores lie in [-1, 1] and are not clipped. A zero graph vector scores
    zero everywhere; a zero concept vector is a configuration error.
    """
    graph_vec = np.asarray(graph_vec, dtype=np.float64)
    concept_vectors = np.atleast_2d(np.asarray(concept_vectors, dtype=np.float64))
    if concept_vectors.shape[1] != graph_vec.shape[0]:
        raise ShapeError("concept vector width does not match graph vector")
    c_norms = np.linalg.norm(concept_vectors, axis=1)
    zero = np.flatnonzero(c_norms == 0.0)
    if len(zero) > 0:
        raise ConfigurationError(f"concept vector {int(zero[0])} has zero norm")
    g_norm = float(np.linalg.norm(graph_vec))
    if g_norm == 0.0:
        return np.zeros(concept_vectors.shape[0])
    return concept_vectors @ graph_vec / (c_norms * g_norm)


def universe_embedding_labels(
    graphs,
    universe,
    table: ConceptEmbeddingTable,
    refined=None,
    strict: bool = True,
) -> np.ndarray:
    """Concept label matrix from embedding cosines, padded per level.

    The alternative to frequency-based labels: score concept j of level k by
    cosine(graph sentence vector, concept j's token vector). Selected codes
    always have vectors (the vocabulary sentence puts them in the corpus);
    ``strict=False`` tolerates held-out graphs with unseen codes.
    """
    from .wl import pad_level_scores, wl_refine

    n = len(graphs)
    out = np.zeros((n, universe.width), dtype=np.float64)
    concept_vecs = []
    for k in range(1, universe.num_levels + 1):
        vocab = universe.vocabularies[k - 1]
        sel = universe.selections[k - 1]
        concept_vecs.append(
            np.stack([table.vector(vocab.codes[j]) for j in sel.concept_ids])
            if len(sel) > 0
            else np.zeros((0, table.dim))
        )
    for i, graph in enumerate(graphs):
        codes_all = (
            refined[i] if refined is not None else wl_refine(graph, universe.num_levels)
        )
        per_level = []
        for k in range(1, universe.num_levels + 1):
            sentence = GraphSentence(level=k, tokens=tuple(sorted(codes_all[k - 1])))
            gvec = embed_graph(sentence, table, strict=strict)
            vecs = concept_vecs[k - 1]
            scores = (
                embedding_concept_labels(gvec, vecs) if len(vecs) > 0 else np.zeros(0)
            )
            per_level.append(pad_level_scores(scores, universe.m_per_level))
        out[i] = np.concatenate(per_level)
    return out
