"""Shared fixtures: the worked WL example graph, TU-format file writers,
and a small handcrafted model whose mistakes are known in advance (used by
intervention and server tests)."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from graphcb.graphs import Graph, GraphDataset
from graphcb.net import (
    BottleneckHead,
    GcbmModel,
    GinLayerParams,
    SparseLinearClassifier,
)
from graphcb.wl import build_universe, universe_onehot_labels


@pytest.fixture
def fig_graph() -> Graph:
    """Triangle of labels 1-2-3 with a pendant 3: the height-2 subtree rooted
    at the label-1 node encodes as 1,(2,13)(3,123)."""
    return Graph(
        id=0,
        num_nodes=4,
        edges=((0, 1), (0, 2), (1, 2), (2, 3)),
        node_labels=(1, 2, 3, 3),
    )


def write_tu_files(
    root: Path,
    name: str,
    edges_1based: list[tuple[int, int]],
    indicator: list[int],
    graph_labels: list[int],
    node_labels: list[int] | None = None,
    node_masks: list[int] | None = None,
) -> Path:
    """Write raw TU files; edges are written once per direction like the
    published datasets do."""
    d = root / name
    d.mkdir(parents=True, exist_ok=True)
    with (d / f"{name}_A.txt").open("w") as f:
        for u, v in edges_1based:
            f.write(f"{u}, {v}\n")
            f.write(f"{v}, {u}\n")
    (d / f"{name}_graph_indicator.txt").write_text(
        "\n".join(str(i) for i in indicator) + "\n"
    )
    (d / f"{name}_graph_labels.txt").write_text(
        "\n".join(str(l) for l in graph_labels) + "\n"
    )
    if node_labels is not None:
        (d / f"{name}_node_labels.txt").write_text(
            "\n".join(str(l) for l in node_labels) + "\n"
        )
    if node_masks is not None:
        (d / f"{name}_node_masks.txt").write_text(
            "\n".join(str(m) for m in node_masks) + "\n"
        )
    return d


@pytest.fixture
def tu_dir(tmp_path) -> Path:
    """Two triangles and one path, two classes, with node labels."""
    return write_tu_files(
        tmp_path,
        "TOY",
        edges_1based=[(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6), (7, 8), (8, 9)],
        indicator=[1, 1, 1, 2, 2, 2, 3, 3, 3],
        graph_labels=[1, 1, -1],
        node_labels=[0, 1, 1, 0, 1, 1, 0, 0, 1],
    )


def triangle(gid: int, labels=(0, 1, 1)) -> Graph:
    return Graph(id=gid, num_nodes=3, edges=((0, 1), (0, 2), (1, 2)), node_labels=labels)


def path_graph(gid: int, labels) -> Graph:
    n = len(labels)
    return Graph(
        id=gid,
        num_nodes=n,
        edges=tuple((i, i + 1) for i in range(n - 1)),
        node_labels=tuple(labels),
    )


@pytest.fixture
def toy_dataset() -> GraphDataset:
    """Six graphs, two classes: triangles vs 4-paths, varied labels."""
    graphs = (
        triangle(0, (0, 1, 1)),
        triangle(1, (0, 0, 1)),
        triangle(2, (1, 1, 1)),
        path_graph(3, (0, 1, 0, 1)),
        path_graph(4, (1, 0, 0, 1)),
        path_graph(5, (0, 0, 1, 1)),
    )
    return GraphDataset(
        name="toy6",
        graphs=graphs,
        class_labels=(0, 0, 0, 1, 1, 1),
        num_classes=2,
        label_alphabet=(0, 1),
    )


def make_rigged_setup(n_per_class: int = 6):
    """A dataset plus a handcrafted model that predicts class 0 for
    everything, with concept predictions made proportional to the label row
    so the cosine filter passes. All class-1 graphs are therefore known,
    correctable targets.

    Construction: zero perceptrons and zero input embedding leave node
    states at zero except for b2, so each layer contributes n * b2 to the
    pooled sum; with b2 = (1, 1, ...) c_hat is a positive constant vector
    scaled by node count, and W_F = [[0.5, 0...], [0, ...]] makes logit 0
    positive and logit 1 zero.
    """
    graphs = []
    classes = []
    for i in range(n_per_class):
        graphs.append(triangle(i, (0, 1, 1)))
        classes.append(0)
    for i in range(n_per_class):
        graphs.append(path_graph(n_per_class + i, (0, 1, 1, 0)))
        classes.append(1)
    ds = GraphDataset(
        name="rigged",
        graphs=tuple(graphs),
        class_labels=tuple(classes),
        num_classes=2,
        label_alphabet=(0, 1),
    )
    hidden = 2
    universe = build_universe(ds, num_levels=1, m_per_level=hidden)
    labels = universe_onehot_labels(ds.graphs, universe)
    label_index = {0: 0, 1: 1}
    zeros = np.zeros((hidden, hidden))
    layer = GinLayerParams(
        level=1,
        W1=zeros.copy(),
        b1=np.zeros(hidden),
        W2=zeros.copy(),
        b2=np.ones(hidden),
        residual_weight=0.0,
    )
    model = GcbmModel(
        hidden_dim=hidden,
        num_classes=2,
        label_index=label_index,
        input_weight=np.zeros((3, hidden)),
        layers=(layer,),
        head=BottleneckHead(level_weights=np.array([0.1])),
        classifier=SparseLinearClassifier(
            W_F=np.array([[0.5, 0.0], [0.0, 0.0]]),
            b_F=np.zeros(2),
        ),
        universe=universe,
    )
    return ds, model, labels


@pytest.fixture
def rigged():
    return make_rigged_setup()
