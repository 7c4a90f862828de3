import math
from collections import deque

import numpy as np
import pytest

from graphcb.errors import ConfigurationError, ShapeError, UndefinedAUCError
from graphcb.graphs import Graph, GraphDataset
from graphcb.interpret import (
    KeyConcept,
    SubgraphPrediction,
    WeightFlow,
    export_weight_flows,
    interpretability_auc,
    map_concept_to_nodes,
    predict_subgraph,
    sankey_payload,
    select_key_concepts,
)
from graphcb.synth import planted_motif_dataset, random_graph
from graphcb.wl import wl_refine
from conftest import make_rigged_setup


# ------------------------------------------------------------ weight flows


def test_weight_flow_width_is_exponential():
    f = WeightFlow(
        class_index=0, global_index=0, level=1, position=0, code="0,",
        weight=0.384, display_width=math.exp(0.384),
    )
    assert f.display_width == pytest.approx(1.4682, abs=5e-4)
    neg = WeightFlow(
        class_index=0, global_index=0, level=1, position=0, code="0,",
        weight=-0.384, display_width=math.exp(0.384),
    )
    assert neg.display_width == f.display_width
    zero = WeightFlow(
        class_index=0, global_index=0, level=1, position=0, code="0,",
        weight=0.0, display_width=1.0,
    )
    assert zero.display_width == 1.0
    with pytest.raises(ConfigurationError):
        WeightFlow(
            class_index=0, global_index=0, level=1, position=0, code="0,",
            weight=1.0, display_width=1.0,
        )


def test_export_weight_flows_ranks_by_magnitude():
    ds, model, _ = make_rigged_setup()
    flows = export_weight_flows(model, top_t=2)
    assert len(flows) == model.num_classes
    # class 0 row is [0.5, 0]: the heavy slot comes first
    assert flows[0][0].global_index == 0
    assert flows[0][0].weight == 0.5
    assert flows[0][0].display_width == pytest.approx(math.exp(0.5), abs=1e-12)
    assert flows[0][1].weight == 0.0
    # every exported flow resolves to a real code
    for per_class in flows:
        for f in per_class:
            assert model.universe.code_at(f.global_index) == f.code
    # descending magnitude within each class
    for per_class in flows:
        mags = [abs(f.weight) for f in per_class]
        assert mags == sorted(mags, reverse=True)


def test_export_weight_flows_clamps_top_t():
    _, model, _ = make_rigged_setup()
    flows = export_weight_flows(model, top_t=50)
    real = len(model.universe.concept_entries())
    assert all(len(per_class) == real for per_class in flows)


def test_export_weight_flows_requires_universe(rigged):
    _, model, _ = rigged
    import dataclasses

    bare = dataclasses.replace(model, universe=None)
    with pytest.raises(ConfigurationError):
        export_weight_flows(bare)


def test_sankey_payload_shape(rigged):
    _, model, _ = rigged
    payload = sankey_payload(model, top_t=1)
    assert [c["class"] for c in payload["classes"]] == [0, 1]
    flow = payload["classes"][0]["flows"][0]
    assert set(flow) == {"concept_code", "level", "global_index", "weight", "width"}
    assert flow["width"] == pytest.approx(math.exp(abs(flow["weight"])), abs=1e-12)


# ------------------------------------------------------------ key concepts


def test_select_key_concepts_matches_bruteforce(toy_dataset):
    got = select_key_concepts(toy_dataset, num_levels=2, m_i=3)
    # oracle: recompute every (level, code, gain) and sort the same way
    from graphcb.wl import build_frequency_matrix, build_vocabulary, information_gain

    labels = np.asarray(toy_dataset.class_labels)
    pool = []
    for k in (1, 2):
        vocab = build_vocabulary(toy_dataset, k)
        freq = build_frequency_matrix(toy_dataset, vocab)
        presence = np.asarray((freq.counts > 0).todense())
        for j, code in enumerate(vocab.codes):
            pool.append((k, code, information_gain(presence[:, j], labels)))
    pool.sort(key=lambda t: (-t[2], t[1], t[0]))
    assert [
        (c.level, c.code, c.information_gain) for c in got
    ] == [(k, code, g) for k, code, g in pool[:3]]


def test_select_key_concepts_tie_breaks_lexicographic():
    # two codes with identical perfect gain: "0,1" < "0,11"
    tri = Graph(id=0, num_nodes=3, edges=((0, 1), (0, 2), (1, 2)), node_labels=(0, 1, 1))
    path = Graph(id=1, num_nodes=4, edges=((0, 1), (1, 2), (2, 3)), node_labels=(0, 1, 1, 0))
    ds = GraphDataset(
        name="tie", graphs=(tri, path), class_labels=(0, 1), num_classes=2,
        label_alphabet=(0, 1),
    )
    got = select_key_concepts(ds, num_levels=1, m_i=2)
    assert [c.code for c in got] == ["0,1", "0,11"]
    assert all(c.information_gain == 1.0 for c in got)


# --------------------------------------------------------- node mapping


def k_ball_oracle(graph, roots, k):
    """Plain BFS to depth k from each root; excludes nothing."""
    out = set()
    for root in roots:
        dist = {root: 0}
        q = deque([root])
        while q:
            v = q.popleft()
            if dist[v] == k:
                continue
            for u in graph.neighbors[v]:
                if u not in dist:
                    dist[u] = dist[v] + 1
                    q.append(u)
        out |= set(dist)
    return out


def test_map_concept_worked_example(fig_graph):
    # height-2 code rooted at node 0 covers its 2-ball: the whole graph
    nodes = map_concept_to_nodes(fig_graph, "1,(2,13)(3,123)", 2)
    assert nodes == frozenset({0, 1, 2, 3})
    # height-1 code of node 3 covers {3, 2}
    assert map_concept_to_nodes(fig_graph, "3,3", 1) == frozenset({2, 3})
    # code rooted at both label-3 nodes at height 1
    assert map_concept_to_nodes(fig_graph, "3,123", 1) == frozenset({0, 1, 2, 3})


def test_map_concept_absent_code_is_empty(fig_graph):
    assert map_concept_to_nodes(fig_graph, "9,99", 1) == frozenset()


def test_map_concept_matches_bfs_oracle():
    rng = np.random.default_rng(33)
    for _ in range(40):
        g = random_graph(0, int(rng.integers(3, 12)), 0.3, 2, rng)
        for level in (1, 2, 3):
            codes = wl_refine(g, level)[level - 1]
            code = codes[int(rng.integers(0, g.num_nodes))]
            roots = [v for v in range(g.num_nodes) if codes[v] == code]
            got = map_concept_to_nodes(g, code, level)
            assert got == frozenset(k_ball_oracle(g, roots, level))


def test_subgraph_prediction_consistency_enforced():
    with pytest.raises(ConfigurationError):
        SubgraphPrediction(
            graph_id=0, node_scores=(1.0, 0.0), node_set=frozenset()
        )
    with pytest.raises(Exception):
        SubgraphPrediction(
            graph_id=0, node_scores=(2.0, 0.0), node_set=frozenset({0})
        )


def test_predict_subgraph_unions_concepts(fig_graph):
    concepts = (
        KeyConcept(level=1, code="3,3", information_gain=1.0),
        KeyConcept(level=1, code="9,99", information_gain=0.5),
    )
    pred = predict_subgraph(fig_graph, concepts)
    assert pred.node_set == frozenset({2, 3})
    assert pred.node_scores == (0.0, 0.0, 1.0, 1.0)


# ---------------------------------------------------------------- node AUC


def test_interpretability_auc_perfect_and_inverted():
    preds = [
        SubgraphPrediction(
            graph_id=0, node_scores=(1.0, 1.0, 0.0), node_set=frozenset({0, 1})
        ),
        SubgraphPrediction(
            graph_id=1, node_scores=(0.0, 1.0), node_set=frozenset({1})
        ),
    ]
    masks = [(1, 1, 0), (0, 1)]
    assert interpretability_auc(preds, masks) == 1.0
    inverted = [(0, 0, 1), (1, 0)]
    assert interpretability_auc(preds, inverted) == 0.0


def test_interpretability_auc_random_scores_near_half():
    rng = np.random.default_rng(44)
    preds = []
    masks = []
    for gid in range(200):
        n = 50
        scores = tuple(float(x) for x in rng.integers(0, 2, size=n))
        preds.append(
            SubgraphPrediction(
                graph_id=gid,
                node_scores=scores,
                node_set=frozenset(v for v, s in enumerate(scores) if s >= 0.5),
            )
        )
        masks.append(tuple(int(x) for x in rng.integers(0, 2, size=n)))
    auc = interpretability_auc(preds, masks)
    assert abs(auc - 0.5) < 0.02


def test_interpretability_auc_validates_lengths():
    pred = SubgraphPrediction(graph_id=0, node_scores=(1.0,), node_set=frozenset({0}))
    with pytest.raises(ShapeError):
        interpretability_auc([pred], [(1, 0)])
    with pytest.raises(UndefinedAUCError):
        interpretability_auc([pred], [(1,)])


# -------------------------------------------------- planted-motif pipeline


def test_planted_motif_recovery_end_to_end():
    """The acceptance-grade property at a smaller size: the two top-gain
    concepts expand to exactly the planted house nodes."""
    ds = planted_motif_dataset(num_graphs=60, seed=3)
    key = select_key_concepts(ds, num_levels=4, m_i=2)
    positives = [i for i, y in enumerate(ds.class_labels) if y == 1]
    preds = []
    masks = []
    for i in positives:
        g = ds.graphs[i]
        preds.append(predict_subgraph(g, key))
        masks.append(tuple(int(b) for b in g.node_mask))
    assert interpretability_auc(preds, masks) == 1.0
    for pred, mask in zip(preds, masks):
        assert pred.node_set == frozenset(v for v, m in enumerate(mask) if m)
