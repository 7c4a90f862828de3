"""Canonical WL-subtree codes, concept vocabularies, and selection.

A height-1 code at node v is ``L(v),<sorted neighbor labels>`` and a
height-k code is ``L(v),`` followed by the parenthesized height-(k-1) codes
of v's neighbors in lexicographic order, e.g. ``1,(2,13)(3,123)``. Codes are
pure functions of labels and topology, so they are invariant to node-id
permutations.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ConfigurationError, ShapeError, VocabularyMissError
from .graphs import Graph, GraphDataset


def wl_refine(graph: Graph, num_levels: int) -> list[list[str]]:
    """Per-node canonical subtree codes for every height 1..num_levels.

    Returns ``codes`` with ``codes[k-1][v]`` the height-k code of node v.
    An isolated node keeps the bare ``L(v),`` form at every height.
    """
    if num_levels < 1:
        raise ConfigurationError(f"num_levels must be >= 1, got {num_levels}")
    neighbors = graph.neighbors
    labels = [str(l) for l in graph.node_labels]
    levels: list[list[str]] = []
    first = [
        f"{labels[v]}," + "".join(sorted(labels[u] for u in neighbors[v]))
        for v in range(graph.num_nodes)
    ]
    levels.append(first)
    for _ in range(2, num_levels + 1):
        prev = levels[-1]
        nxt = [
            f"{labels[v]}," + "".join(f"({c})" for c in sorted(prev[u] for u in neighbors[v]))
            for v in range(graph.num_nodes)
        ]
        levels.append(nxt)
    return levels


@dataclass(frozen=True)
class ConceptVocabulary:
    """All distinct codes of one height across a dataset, lexically sorted."""

    level: int
    codes: tuple[str, ...]

    def __post_init__(self):
        if list(self.codes) != sorted(set(self.codes)):
            raise ConfigurationError("vocabulary codes must be sorted and unique")

    @property
    def index(self) -> dict[str, int]:
        cached = self.__dict__.get("_index")
        if cached is None:
            cached = {c: i for i, c in enumerate(self.codes)}
            self.__dict__["_index"] = cached
        return cached

    def __len__(self) -> int:
        return len(self.codes)


def build_vocabulary(dataset: GraphDataset, level: int, refined=None) -> ConceptVocabulary:
    """Collect the sorted set of height-``level`` codes over all nodes.

    ``refined`` may carry precomputed ``wl_refine`` output per graph (a list
    aligned with ``dataset.graphs``) to avoid recomputation.
    """
    seen = set()
    for i, graph in enumerate(dataset.graphs):
        codes = refined[i][level - 1] if refined is not None else wl_refine(graph, level)[level - 1]
        seen.update(codes)
    return ConceptVocabulary(level=level, codes=tuple(sorted(seen)))


@dataclass(frozen=True)
class FrequencyMatrix:
    """Sparse per-graph occurrence counts over a vocabulary.

    Row i counts each code among graph i's nodes, so row sums equal node
    counts: every node contributes exactly one height-k subtree.
    """

    level: int
    counts: sparse.csr_matrix

    @property
    def num_graphs(self) -> int:
        return self.counts.shape[0]

    def row(self, i: int) -> np.ndarray:
        return np.asarray(self.counts.getrow(i).todense()).ravel()


def graph_frequency_row(
    graph: Graph,
    vocab: ConceptVocabulary,
    codes: list[str] | None = None,
    strict: bool = True,
) -> np.ndarray:
    """Count one graph's height-k codes over ``vocab``.

    With ``strict`` (the default) a code missing from the vocabulary raises
    VocabularyMissError; with ``strict=False`` unknown codes are dropped,
    which is how held-out graphs are scored against a training vocabulary.
    """
    if codes is None:
        codes = wl_refine(graph, vocab.level)[vocab.level - 1]
    row = np.zeros(len(vocab), dtype=np.int64)
    index = vocab.index
    for code, n in Counter(codes).items():
        j = index.get(code)
        if j is None:
            if strict:
                raise VocabularyMissError(
                    f"code {code!r} (graph {graph.id}, level {vocab.level}) "
                    "not in vocabulary"
                )
            continue
        row[j] = n
    return row


def build_frequency_matrix(
    dataset: GraphDataset, vocab: ConceptVocabulary, refined=None
) -> FrequencyMatrix:
    rows = []
    cols = []
    data = []
    for i, graph in enumerate(dataset.graphs):
        codes = refined[i][vocab.level - 1] if refined is not None else None
        row = graph_frequency_row(graph, vocab, codes=codes)
        nz = np.flatnonzero(row)
        rows.extend([i] * len(nz))
        cols.extend(nz.tolist())
        data.extend(row[nz].tolist())
    counts = sparse.csr_matrix(
        (data, (rows, cols)), shape=(len(dataset.graphs), len(vocab)), dtype=np.int64
    )
    return FrequencyMatrix(level=vocab.level, counts=counts)


def _entropy(counts: np.ndarray) -> float:
    """Shannon entropy in bits of a count vector."""
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def information_gain(column: np.ndarray, labels: np.ndarray) -> float:
    """Entropy reduction of the class distribution given concept presence.

    The column is binarized to presence (count > 0); conditioning on raw
    counts would make the gain scale-dependent. Result is in bits and lies
    in [0, H(labels)].
    """
    column = np.asarray(column)
    labels = np.asarray(labels)
    if column.shape[0] != labels.shape[0]:
        raise ShapeError(
            f"column length {column.shape[0]} != labels length {labels.shape[0]}"
        )
    classes = np.unique(labels)
    base = _entropy(np.array([(labels == c).sum() for c in classes]))
    if base == 0.0:
        return 0.0
    present = column > 0
    n = len(labels)
    cond = 0.0
    for group in (present, ~present):
        size = group.sum()
        if size == 0:
            continue
        cond += (size / n) * _entropy(
            np.array([(labels[group] == c).sum() for c in classes])
        )
    gain = base - cond
    return float(max(gain, 0.0))


@dataclass(frozen=True)
class SelectedConcepts:
    """Top concepts of one level, ordered by descending information gain."""

    level: int
    concept_ids: tuple[int, ...]
    gains: tuple[float, ...]

    def __post_init__(self):
        if len(self.concept_ids) != len(self.gains):
            raise ShapeError("concept_ids and gains must align")
        if len(set(self.concept_ids)) != len(self.concept_ids):
            raise ConfigurationError("concept ids must be unique")
        if any(a < b for a, b in zip(self.gains, self.gains[1:])):
            raise ConfigurationError("gains must be non-increasing")

    def __len__(self) -> int:
        return len(self.concept_ids)


def select_top_m(
    vocab: ConceptVocabulary,
    freq: FrequencyMatrix,
    labels,
    m: int,
) -> SelectedConcepts:
    """Rank concepts by information gain and keep the top m.

    Ties break toward the lexicographically smaller code so builds are
    deterministic. m is clamped to the vocabulary size with a warning.
    """
    labels = np.asarray(labels)
    if freq.counts.shape[1] != len(vocab):
        raise ShapeError("frequency matrix does not match vocabulary width")
    if m > len(vocab):
        warnings.warn(
            f"level {vocab.level}: m={m} exceeds vocabulary size {len(vocab)}; clamping",
            stacklevel=2,
        )
        m = len(vocab)
    dense_presence = np.asarray((freq.counts > 0).todense())
    gains = np.array(
        [information_gain(dense_presence[:, j], labels) for j in range(len(vocab))]
    )
    order = sorted(range(len(vocab)), key=lambda j: (-gains[j], vocab.codes[j]))
    chosen = order[:m]
    return SelectedConcepts(
        level=vocab.level,
        concept_ids=tuple(chosen),
        gains=tuple(float(gains[j]) for j in chosen),
    )


def onehot_concept_labels(freq_row: np.ndarray, selected: SelectedConcepts) -> np.ndarray:
    """Cosine of the frequency vector with each selected concept's one-hot.

    That collapses to freq_row[id] / ||freq_row||; an all-zero row scores
    zero everywhere rather than dividing by zero.
    """
    freq_row = np.asarray(freq_row, dtype=np.float64)
    norm = float(np.linalg.norm(freq_row))
    if norm == 0.0:
        return np.zeros(len(selected), dtype=np.float64)
    return freq_row[list(selected.concept_ids)] / norm


def concat_levels(per_level: list[np.ndarray]) -> np.ndarray:
    """Concatenate per-level score vectors in level order."""
    if not per_level:
        raise ShapeError("no level scores to concatenate")
    widths = {len(v) for v in per_level}
    if len(widths) != 1:
        raise ShapeError(f"level score widths differ: {sorted(widths)}")
    return np.concatenate([np.asarray(v, dtype=np.float64) for v in per_level])


def rank_statistics(freq: FrequencyMatrix) -> list[tuple[int, int]]:
    """(occurrence count, number of codes with that count), ascending.

    The report behind the subtree-distribution plots: many codes occur once,
    few occur often.
    """
    totals = np.asarray(freq.counts.sum(axis=0)).ravel()
    counter = Counter(int(t) for t in totals if t > 0)
    return sorted(counter.items())


@dataclass(frozen=True)
class ConceptUniverse:
    """The full concept space of a trained model: per-level vocabularies and
    top-m selections, frozen together so indices stay stable.

    Concept j of level k occupies global slot (k-1)*m_per_level + j. Levels
    whose vocabulary is smaller than m_per_level leave their trailing slots
    as padding (no code; label score fixed at 0).
    """

    num_levels: int
    m_per_level: int
    vocabularies: tuple[ConceptVocabulary, ...]
    selections: tuple[SelectedConcepts, ...]

    def __post_init__(self):
        if len(self.vocabularies) != self.num_levels or len(self.selections) != self.num_levels:
            raise ShapeError("one vocabulary and one selection per level required")
        for k, (vocab, sel) in enumerate(zip(self.vocabularies, self.selections), start=1):
            if vocab.level != k or sel.level != k:
                raise ConfigurationError(f"level {k} entries are out of order")
            if len(sel) > self.m_per_level:
                raise ConfigurationError(
                    f"level {k} selects {len(sel)} concepts > m={self.m_per_level}"
                )
            if any(j >= len(vocab) for j in sel.concept_ids):
                raise ConfigurationError(f"level {k} selection indexes outside vocabulary")

    @property
    def width(self) -> int:
        return self.num_levels * self.m_per_level

    def slot(self, level: int, position: int) -> int:
        return (level - 1) * self.m_per_level + position

    def code_at(self, global_index: int) -> str | None:
        """Code occupying a global slot, or None for a padding slot."""
        if not 0 <= global_index < self.width:
            raise ConfigurationError(f"global concept index {global_index} out of range")
        level, pos = divmod(global_index, self.m_per_level)
        sel = self.selections[level]
        if pos >= len(sel):
            return None
        return self.vocabularies[level].codes[sel.concept_ids[pos]]

    def concept_entries(self) -> list[dict]:
        """One record per real (non-padding) concept slot, in slot order."""
        out = []
        for level, sel in enumerate(self.selections, start=1):
            vocab = self.vocabularies[level - 1]
            for pos, (cid, gain) in enumerate(zip(sel.concept_ids, sel.gains)):
                out.append(
                    {
                        "global_index": self.slot(level, pos),
                        "level": level,
                        "position": pos,
                        "code": vocab.codes[cid],
                        "information_gain": gain,
                    }
                )
        return out


def build_universe(
    dataset: GraphDataset, num_levels: int, m_per_level: int, refined=None
) -> ConceptUniverse:
    """Vocabulary + information-gain selection for every level at once.

    Fit on training data only; held-out graphs are scored against it with
    strict=False lookups.
    """
    if refined is None:
        refined = [wl_refine(g, num_levels) for g in dataset.graphs]
    vocabularies = []
    selections = []
    for k in range(1, num_levels + 1):
        vocab = build_vocabulary(dataset, k, refined=refined)
        freq = build_frequency_matrix(dataset, vocab, refined=refined)
        sel = select_top_m(vocab, freq, dataset.class_labels, m_per_level)
        vocabularies.append(vocab)
        selections.append(sel)
    return ConceptUniverse(
        num_levels=num_levels,
        m_per_level=m_per_level,
        vocabularies=tuple(vocabularies),
        selections=tuple(selections),
    )


def pad_level_scores(scores: np.ndarray, m_per_level: int) -> np.ndarray:
    """Right-pad one level's score vector with zeros to the fixed width."""
    scores = np.asarray(scores, dtype=np.float64)
    if len(scores) > m_per_level:
        raise ShapeError(f"level has {len(scores)} scores > m={m_per_level}")
    if len(scores) == m_per_level:
        return scores
    out = np.zeros(m_per_level, dtype=np.float64)
    out[: len(scores)] = scores
    return out


def universe_onehot_labels(
    graphs, universe: ConceptUniverse, refined=None, strict: bool = True
) -> np.ndarray:
    """Frequency-based concept label matrix, one row per graph.

    Row layout matches the universe's global slots; padding slots are zero.
    ``strict=False`` drops codes unseen in the universe (held-out graphs).
    """
    n = len(graphs)
    out = np.zeros((n, universe.width), dtype=np.float64)
    for i, graph in enumerate(graphs):
        codes_all = (
            refined[i]
            if refined is not None
            else wl_refine(graph, universe.num_levels)
        )
        per_level = []
        for k in range(1, universe.num_levels + 1):
            vocab = universe.vocabularies[k - 1]
            sel = universe.selections[k - 1]
            row = graph_frequency_row(graph, vocab, codes=codes_all[k - 1], strict=strict)
            per_level.append(pad_level_scores(onehot_concept_labels(row, sel), universe.m_per_level))
        out[i] = np.concatenate(per_level)
    return out
