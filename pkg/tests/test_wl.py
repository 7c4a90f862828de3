import math
import warnings
from collections import Counter

import numpy as np
import pytest

from graphcb.errors import ConfigurationError, VocabularyMissError
from graphcb.graphs import Graph, GraphDataset
from graphcb.synth import random_graph
from graphcb.wl import (
    build_frequency_matrix,
    build_universe,
    build_vocabulary,
    concat_levels,
    graph_frequency_row,
    information_gain,
    onehot_concept_labels,
    pad_level_scores,
    select_top_m,
    universe_onehot_labels,
    wl_refine,
)


def two_class_dataset(graphs, labels):
    return GraphDataset(
        name="t",
        graphs=tuple(graphs),
        class_labels=tuple(labels),
        num_classes=2,
        label_alphabet=tuple(sorted({l for g in graphs for l in g.node_labels})),
    )


# ---------------------------------------------------------------- wl codes


def test_worked_example_codes(fig_graph):
    levels = wl_refine(fig_graph, 2)
    assert levels[0] == ["1,23", "2,13", "3,123", "3,3"]
    assert levels[1][0] == "1,(2,13)(3,123)"
    assert levels[1][1] == "2,(1,23)(3,123)"
    assert levels[1][2] == "3,(1,23)(2,13)(3,3)"
    assert levels[1][3] == "3,(3,123)"


def test_isolated_node_keeps_bare_code():
    g = Graph(id=0, num_nodes=2, edges=(), node_labels=(4, 7))
    levels = wl_refine(g, 3)
    for k in range(3):
        assert levels[k] == ["4,", "7,"]


def test_num_levels_must_be_positive(fig_graph):
    with pytest.raises(ConfigurationError):
        wl_refine(fig_graph, 0)


def test_codes_depend_only_on_k_ball(fig_graph):
    # Height-1 code of node 3 ignores everything beyond its neighbors.
    g2 = Graph(
        id=1,
        num_nodes=4,
        edges=((0, 2), (2, 3)),
        node_labels=(9, 2, 3, 3),
    )
    assert wl_refine(fig_graph, 1)[0][3] == wl_refine(g2, 1)[0][3]


def test_permutation_invariance_seeded():
    rng = np.random.default_rng(11)
    for trial in range(60):
        n = int(rng.integers(2, 12))
        g = random_graph(0, n, 0.35, 3, rng)
        perm = list(rng.permutation(n))
        h = g.relabel_nodes(perm)
        a = wl_refine(g, 3)
        b = wl_refine(h, 3)
        for k in range(3):
            assert sorted(a[k]) == sorted(b[k]), f"trial {trial} level {k + 1}"
            # node v of g landed at perm[v] in h; codes must follow it
            for v in range(n):
                assert a[k][v] == b[k][perm[v]]


def test_codes_distinguish_nonisomorphic_neighborhoods():
    tri = Graph(id=0, num_nodes=3, edges=((0, 1), (0, 2), (1, 2)), node_labels=(0, 0, 0))
    path = Graph(id=1, num_nodes=3, edges=((0, 1), (1, 2)), node_labels=(0, 0, 0))
    assert sorted(wl_refine(tri, 1)[0]) != sorted(wl_refine(path, 1)[0])


# ------------------------------------------------------- vocabulary / counts


def test_vocabulary_sorted_and_deduped(fig_graph):
    ds = two_class_dataset(
        [fig_graph, fig_graph.relabel_nodes([3, 2, 1, 0])], [0, 1]
    )
    vocab = build_vocabulary(ds, 1)
    assert vocab.codes == tuple(sorted(set(vocab.codes)))
    assert set(vocab.codes) == {"1,23", "2,13", "3,123", "3,3"}


def test_frequency_row_counts_nodes(fig_graph):
    ds = two_class_dataset([fig_graph, fig_graph], [0, 1])
    vocab = build_vocabulary(ds, 1)
    row = graph_frequency_row(fig_graph, vocab)
    assert row.sum() == fig_graph.num_nodes
    assert row[vocab.index["3,123"]] == 1
    assert row[vocab.index["3,3"]] == 1


def test_frequency_row_strict_vs_lenient(fig_graph):
    ds = two_class_dataset([fig_graph, fig_graph], [0, 1])
    vocab = build_vocabulary(ds, 1)
    stranger = Graph(id=9, num_nodes=1, edges=(), node_labels=(1,))
    with pytest.raises(VocabularyMissError):
        graph_frequency_row(stranger, vocab)
    row = graph_frequency_row(stranger, vocab, strict=False)
    assert row.sum() == 0


def test_frequency_matrix_rows_match_single_rows():
    rng = np.random.default_rng(3)
    graphs = [random_graph(i, int(rng.integers(2, 8)), 0.4, 2, rng) for i in range(12)]
    ds = two_class_dataset(graphs, [i % 2 for i in range(12)])
    vocab = build_vocabulary(ds, 2)
    freq = build_frequency_matrix(ds, vocab)
    for i, g in enumerate(graphs):
        np.testing.assert_array_equal(freq.row(i), graph_frequency_row(g, vocab))
        assert freq.row(i).sum() == g.num_nodes


# ------------------------------------------------------------ information gain


def entropy_oracle(values) -> float:
    n = len(values)
    return -sum((c / n) * math.log2(c / n) for c in Counter(values).values())


def gain_oracle(presence, labels) -> float:
    n = len(labels)
    total = entropy_oracle(list(labels))
    cond = 0.0
    for val in set(presence):
        sub = [l for p, l in zip(presence, labels) if p == val]
        cond += len(sub) / n * entropy_oracle(sub)
    return total - cond


def test_information_gain_matches_contingency_oracle():
    rng = np.random.default_rng(17)
    for _ in range(300):
        n = int(rng.integers(2, 40))
        presence = rng.integers(0, 2, size=n).astype(bool)
        labels = rng.integers(0, int(rng.integers(2, 4)), size=n)
        got = information_gain(presence, labels)
        want = gain_oracle(presence.tolist(), labels.tolist())
        assert abs(got - want) < 1e-12


def test_information_gain_extremes():
    labels = np.array([0, 0, 1, 1])
    perfect = np.array([True, True, False, False])
    useless = np.array([True, False, True, False])
    assert abs(information_gain(perfect, labels) - 1.0) < 1e-12
    assert abs(information_gain(useless, labels)) < 1e-12
    # gain is symmetric in which side is "present"
    assert abs(
        information_gain(perfect, labels) - information_gain(~perfect, labels)
    ) < 1e-12


def test_information_gain_never_negative_and_bounded():
    rng = np.random.default_rng(23)
    for _ in range(200):
        n = int(rng.integers(2, 30))
        presence = rng.integers(0, 2, size=n).astype(bool)
        labels = rng.integers(0, 3, size=n)
        g = information_gain(presence, labels)
        assert -1e-12 <= g <= entropy_oracle(labels.tolist()) + 1e-12


# ---------------------------------------------------------------- selection


def test_select_top_m_orders_by_gain_then_code():
    tri = Graph(id=0, num_nodes=3, edges=((0, 1), (0, 2), (1, 2)), node_labels=(0, 1, 1))
    path = Graph(id=1, num_nodes=4, edges=((0, 1), (1, 2), (2, 3)), node_labels=(0, 1, 1, 0))
    ds = two_class_dataset([tri, tri, path, path], [0, 0, 1, 1])
    vocab = build_vocabulary(ds, 1)
    freq = build_frequency_matrix(ds, vocab)
    sel = select_top_m(vocab, freq, ds.class_labels, 2)
    # "0,1" (paths only) and "0,11" (triangles only) both give 1 bit; the
    # lexicographically smaller code must come first.
    codes = [vocab.codes[j] for j in sel.concept_ids]
    assert codes == ["0,1", "0,11"]
    assert sel.gains == (1.0, 1.0)


def test_select_top_m_clamps_with_warning(fig_graph):
    ds = two_class_dataset([fig_graph, fig_graph.relabel_nodes([1, 0, 2, 3])], [0, 1])
    vocab = build_vocabulary(ds, 1)
    freq = build_frequency_matrix(ds, vocab)
    with pytest.warns(UserWarning, match="clamping"):
        sel = select_top_m(vocab, freq, ds.class_labels, 99)
    assert len(sel) == len(vocab)


def test_select_top_m_matches_bruteforce_ranking():
    rng = np.random.default_rng(31)
    for _ in range(20):
        graphs = [random_graph(i, int(rng.integers(2, 7)), 0.5, 2, rng) for i in range(10)]
        labels = [int(x) for x in rng.integers(0, 2, size=9)] + [1]
        if 0 not in labels:
            labels[0] = 0
        ds = two_class_dataset(graphs, labels)
        vocab = build_vocabulary(ds, 1)
        freq = build_frequency_matrix(ds, vocab)
        m = min(3, len(vocab))
        sel = select_top_m(vocab, freq, ds.class_labels, m)
        dense = np.asarray((freq.counts > 0).todense())
        scored = sorted(
            range(len(vocab)),
            key=lambda j: (
                -gain_oracle(dense[:, j].tolist(), labels),
                vocab.codes[j],
            ),
        )
        assert list(sel.concept_ids) == scored[:m]


# ------------------------------------------------------------- concept labels


def test_onehot_labels_are_scaled_frequencies():
    rng = np.random.default_rng(7)
    graphs = [random_graph(i, int(rng.integers(3, 9)), 0.4, 2, rng) for i in range(14)]
    ds = two_class_dataset(graphs, [i % 2 for i in range(14)])
    vocab = build_vocabulary(ds, 1)
    freq = build_frequency_matrix(ds, vocab)
    sel = select_top_m(vocab, freq, ds.class_labels, min(4, len(vocab)))
    for i in range(len(graphs)):
        row = freq.row(i)
        got = onehot_concept_labels(row, sel)
        # oracle: cosine between the count vector and each one-hot basis
        norm = math.sqrt(float((row.astype(float) ** 2).sum()))
        for pos, j in enumerate(sel.concept_ids):
            want = row[j] / norm
            assert abs(got[pos] - want) < 1e-12
        assert np.all(got >= 0) and np.all(got <= 1 + 1e-12)


def test_onehot_labels_zero_row_scores_zero():
    sel_graphs = [
        Graph(id=0, num_nodes=2, edges=((0, 1),), node_labels=(0, 0)),
        Graph(id=1, num_nodes=2, edges=((0, 1),), node_labels=(1, 1)),
    ]
    ds = two_class_dataset(sel_graphs, [0, 1])
    vocab = build_vocabulary(ds, 1)
    freq = build_frequency_matrix(ds, vocab)
    sel = select_top_m(vocab, freq, ds.class_labels, 2)
    out = onehot_concept_labels(np.zeros(len(vocab)), sel)
    assert np.all(out == 0.0)


def test_concat_levels_preserves_order_and_rejects_ragged():
    a = np.array([1.0, 2.0])
    b = np.array([3.0, 4.0])
    np.testing.assert_array_equal(concat_levels([a, b]), [1.0, 2.0, 3.0, 4.0])
    with pytest.raises(Exception):
        concat_levels([a, np.array([3.0])])


# ----------------------------------------------------------------- universe


def test_pad_level_scores():
    padded = pad_level_scores(np.array([0.5, 0.25]), 4)
    np.testing.assert_array_equal(padded, [0.5, 0.25, 0.0, 0.0])
    with pytest.raises(Exception):
        pad_level_scores(np.zeros(5), 4)


def test_universe_shapes_and_slots(toy_dataset):
    uni = build_universe(toy_dataset, num_levels=2, m_per_level=3)
    assert uni.num_levels == 2
    assert uni.width == 6
    assert [v.level for v in uni.vocabularies] == [1, 2]
    for level, sel in zip((1, 2), uni.selections):
        assert sel.level == level
        assert len(sel) <= 3
    assert uni.slot(1, 0) == 0
    assert uni.slot(2, 1) == 4
    # padded slots carry no code
    for level, sel in zip((1, 2), uni.selections):
        for pos in range(len(sel), 3):
            assert uni.code_at(uni.slot(level, pos)) is None


def test_universe_entries_align_with_selections(toy_dataset):
    uni = build_universe(toy_dataset, num_levels=2, m_per_level=2)
    entries = uni.concept_entries()
    assert all(e["level"] in (1, 2) for e in entries)
    for e in entries:
        vocab = uni.vocabularies[e["level"] - 1]
        sel = uni.selections[e["level"] - 1]
        assert e["code"] == vocab.codes[sel.concept_ids[e["position"]]]
        assert e["global_index"] == uni.slot(e["level"], e["position"])
        assert e["information_gain"] == sel.gains[e["position"]]


def test_universe_onehot_labels_match_per_level_assembly(toy_dataset):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        uni = build_universe(toy_dataset, num_levels=2, m_per_level=4)
    mat = universe_onehot_labels(toy_dataset.graphs, uni)
    assert mat.shape == (len(toy_dataset), uni.width)
    for i, g in enumerate(toy_dataset.graphs):
        chunks = []
        for level in (1, 2):
            vocab = uni.vocabularies[level - 1]
            sel = uni.selections[level - 1]
            row = graph_frequency_row(g, vocab)
            chunks.append(pad_level_scores(onehot_concept_labels(row, sel), 4))
        np.testing.assert_allclose(mat[i], np.concatenate(chunks), atol=1e-15)


def test_universe_onehot_labels_strict_raises_for_stranger(toy_dataset):
    uni = build_universe(toy_dataset, num_levels=1, m_per_level=2)
    stranger = Graph(id=99, num_nodes=1, edges=(), node_labels=(0,))
    with pytest.raises(VocabularyMissError):
        universe_onehot_labels([stranger], uni, strict=True)
    lenient = universe_onehot_labels([stranger], uni, strict=False)
    assert lenient.shape == (1, uni.width)
