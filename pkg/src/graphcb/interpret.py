"""Read out what the trained model learned: classifier weight flows per
concept (the soft logical rule), globally key concepts by information gain,
and concept-to-node mappings that turn codes back into subgraphs so node-level
agreement with ground-truth annotations can be scored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeError, ValidationError
from .graphs import Graph, GraphDataset
from .metrics import roc_auc
from .net import GcbmModel
from .wl import build_vocabulary, build_frequency_matrix, information_gain, wl_refine


@dataclass(frozen=True)
class WeightFlow:
    """One class<->concept edge of the sankey view."""

    class_index: int
    global_index: int
    level: int
    position: int
    code: str
    weight: float
    display_width: float

    def __post_init__(self):
        if abs(self.display_width - float(np.exp(abs(self.weight)))) > 1e-12:
            raise ConfigurationError("display width must equal exp(|weight|)")


def export_weight_flows(model: GcbmModel, top_t: int = 8) -> list[list[WeightFlow]]:
    """Per class, the top_t concepts by |classifier weight|, widest first.

    Weights are read live from the classifier, so the export always matches
    the current model. Padding slots (levels with fewer selected concepts
    than the fixed width) carry no code and are skipped. top_t larger than
    the concept count returns everything.
    """
    if model.universe is None:
        raise ConfigurationError("model carries no concept universe to resolve codes")
    entries = model.universe.concept_entries()
    W = model.classifier.W_F
    per_class: list[list[WeightFlow]] = []
    for cls in range(model.num_classes):
        ranked = sorted(
            entries, key=lambda e: (-abs(W[cls, e["global_index"]]), e["global_index"])
        )
        flows = []
        for e in ranked[:top_t]:
            w = float(W[cls, e["global_index"]])
            flows.append(
                WeightFlow(
                    class_index=cls,
                    global_index=e["global_index"],
                    level=e["level"],
                    position=e["position"],
                    code=e["code"],
                    weight=w,
                    display_width=float(np.exp(abs(w))),
                )
            )
        per_class.append(flows)
    return per_class


def sankey_payload(model: GcbmModel, top_t: int = 8) -> dict:
    """The JSON shape the web UI renders directly."""
    per_class = export_weight_flows(model, top_t)
    return {
        "classes": [
            {
                "class": cls,
                "flows": [
                    {
                        "concept_code": f.code,
                        "level": f.level,
                        "global_index": f.global_index,
                        "weight": f.weight,
                        "width": f.display_width,
                    }
                    for f in flows
                ],
            }
            for cls, flows in enumerate(per_class)
        ]
    }


@dataclass(frozen=True)
class KeyConcept:
    level: int
    code: str
    information_gain: float


def select_key_concepts(
    dataset: GraphDataset, num_levels: int, m_i: int = 2, refined=None
) -> tuple[KeyConcept, ...]:
    """Top m_i concepts by information gain over the union of all levels.

    Ties break toward the lexicographically smaller code, then the lower
    level. m_i beyond the union size returns the whole union.
    """
    if refined is None:
        refined = [wl_refine(g, num_levels) for g in dataset.graphs]
    labels = np.asarray(dataset.class_labels)
    pool: list[KeyConcept] = []
    for k in range(1, num_levels + 1):
        vocab = build_vocabulary(dataset, k, refined=refined)
        freq = build_frequency_matrix(dataset, vocab, refined=refined)
        presence = np.asarray((freq.counts > 0).todense())
        for j, code in enumerate(vocab.codes):
            pool.append(
                KeyConcept(
                    level=k,
                    code=code,
                    information_gain=information_gain(presence[:, j], labels),
                )
            )
    pool.sort(key=lambda c: (-c.information_gain, c.code, c.level))
    return tuple(pool[:m_i])


def map_concept_to_nodes(graph: Graph, code: str, level: int, codes=None) -> frozenset[int]:
    """Nodes covered by a concept in one graph.

    Every node whose height-``level`` code matches is a root; the height-k
    subtree construction visits all nodes within k hops of its root, so the
    result is the union of k-hop balls around matching roots. An absent code
    gives the empty set.
    """
    if level < 1:
        raise ConfigurationError(f"level must be >= 1, got {level}")
    if codes is None:
        codes = wl_refine(graph, level)[level - 1]
    roots = [v for v in range(graph.num_nodes) if codes[v] == code]
    if not roots:
        return frozenset()
    neighbors = graph.neighbors
    covered: set[int] = set()
    for root in roots:
        frontier = {root}
        seen = {root}
        for _ in range(level):
            frontier = {u for v in frontier for u in neighbors[v]} - seen
            seen |= frontier
        covered |= seen
    return frozenset(covered)


@dataclass(frozen=True)
class SubgraphPrediction:
    """Binary node relevance for one graph: the union of nodes covered by
    the key concepts."""

    graph_id: int
    node_scores: tuple[float, ...]
    node_set: frozenset[int]

    def __post_init__(self):
        expected = frozenset(
            v for v, s in enumerate(self.node_scores) if s >= 0.5
        )
        if self.node_set != expected:
            raise ConfigurationError("node_set must be the >= 0.5 score set")
        if any(not 0.0 <= s <= 1.0 for s in self.node_scores):
            raise ValidationError("node scores must lie in [0, 1]")


def predict_subgraph(
    graph: Graph, key_concepts, refined=None
) -> SubgraphPrediction:
    """Union of covered nodes over all key concepts, as a 0/1 score per node."""
    max_level = max((c.level for c in key_concepts), default=1)
    if refined is None:
        refined = wl_refine(graph, max_level)
    union: set[int] = set()
    for concept in key_concepts:
        union |= map_concept_to_nodes(
            graph, concept.code, concept.level, codes=refined[concept.level - 1]
        )
    scores = tuple(1.0 if v in union else 0.0 for v in range(graph.num_nodes))
    return SubgraphPrediction(
        graph_id=graph.id, node_scores=scores, node_set=frozenset(union)
    )


def interpretability_auc(predictions, masks) -> float:
    """Node-level ROC AUC of predicted relevance against annotations.

    Nodes from all graphs are pooled into one ranking; binary scores are
    handled by the tie-averaging rank estimator. Raises if the pooled truth
    is single-class.
    """
    if len(predictions) != len(masks):
        raise ShapeError("one mask per prediction required")
    scores: list[float] = []
    truth: list[int] = []
    for pred, mask in zip(predictions, masks):
        if len(mask) != len(pred.node_scores):
            raise ShapeError(
                f"graph {pred.graph_id}: mask length {len(mask)} != "
                f"{len(pred.node_scores)} nodes"
            )
        scores.extend(pred.node_scores)
        truth.extend(int(m) for m in mask)
    return roc_auc(np.asarray(scores, dtype=np.float64), np.asarray(truth))
