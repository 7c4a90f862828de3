"""Synthetic benchmarks with known ground truth.

The planted-motif dataset attaches a 5-node "house" (a 4-cycle 0-1-2-3 with
an apex adjacent to nodes 2 and 3, all labeled 2) to a random background tree
for class 1; class 0 is a plain background tree. Background labels are {0,1},
so every code mentioning label 2 is perfectly class-discriminative, and node
masks marking the house give an exact target for node-level evaluation.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .graphs import Graph, GraphDataset, normalize_edges

HOUSE_SIZE = 5
HOUSE_LABEL = 2
# square + roof, relative node ids 0..4; node 0 is the attachment point
HOUSE_EDGES = ((0, 1), (1, 2), (2, 3), (0, 3), (2, 4), (3, 4))


def random_tree_edges(num_nodes: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Uniform random recursive tree: node v>0 attaches to a prior node."""
    return [(int(rng.integers(0, v)), v) for v in range(1, num_nodes)]


def random_labeled_tree(
    graph_id: int, num_nodes: int, num_labels: int, rng: np.random.Generator
) -> Graph:
    edges = random_tree_edges(num_nodes, rng)
    labels = tuple(int(x) for x in rng.integers(0, num_labels, size=num_nodes))
    return Graph(
        id=graph_id,
        num_nodes=num_nodes,
        edges=normalize_edges(edges),
        node_labels=labels,
    )


def random_graph(
    graph_id: int,
    num_nodes: int,
    edge_prob: float,
    num_labels: int,
    rng: np.random.Generator,
) -> Graph:
    """Erdos-Renyi graph with uniform labels; used by property tests."""
    edges = [
        (u, v)
        for u in range(num_nodes)
        for v in range(u + 1, num_nodes)
        if rng.random() < edge_prob
    ]
    labels = tuple(int(x) for x in rng.integers(0, num_labels, size=num_nodes))
    return Graph(
        id=graph_id, num_nodes=num_nodes, edges=tuple(edges), node_labels=labels
    )


def _with_house(tree_nodes: int, rng: np.random.Generator, graph_id: int) -> Graph:
    """Background tree + house, bridged from a random tree node to house node 0.

    House nodes occupy positions tree_nodes..tree_nodes+4; the mask marks
    exactly those.
    """
    edges = random_tree_edges(tree_nodes, rng)
    labels = [int(x) for x in rng.integers(0, 2, size=tree_nodes)]
    base = tree_nodes
    for u, v in HOUSE_EDGES:
        edges.append((base + u, base + v))
    labels.extend([HOUSE_LABEL] * HOUSE_SIZE)
    bridge = int(rng.integers(0, tree_nodes))
    edges.append((bridge, base))
    mask = tuple([0] * tree_nodes + [1] * HOUSE_SIZE)
    return Graph(
        id=graph_id,
        num_nodes=tree_nodes + HOUSE_SIZE,
        edges=normalize_edges(edges),
        node_labels=tuple(labels),
        node_mask=mask,
    )


def planted_motif_dataset(
    num_graphs: int = 200,
    seed: int = 0,
    min_tree: int = 8,
    max_tree: int = 15,
) -> GraphDataset:
    """Balanced two-class dataset; class 1 carries the house, class 0 does not.

    Class-0 graphs get all-zero masks (no relevant nodes); sizes are matched
    so node count alone carries no signal.
    """
    if num_graphs < 2 or num_graphs % 2 != 0:
        raise ConfigurationError("num_graphs must be even and >= 2")
    if min_tree < 2 or max_tree < min_tree:
        raise ConfigurationError("bad tree size range")
    rng = np.random.default_rng(seed)
    graphs = []
    classes = []
    for i in range(num_graphs):
        cls = i % 2
        tree_nodes = int(rng.integers(min_tree, max_tree + 1))
        if cls == 1:
            graphs.append(_with_house(tree_nodes, rng, i))
        else:
            # pad with the house's size so both classes have similar node counts
            g = random_labeled_tree(i, tree_nodes + HOUSE_SIZE, 2, rng)
            g = Graph(
                id=g.id,
                num_nodes=g.num_nodes,
                edges=g.edges,
                node_labels=g.node_labels,
                node_mask=tuple([0] * g.num_nodes),
            )
            graphs.append(g)
        classes.append(cls)
    return GraphDataset(
        name="planted-house",
        graphs=tuple(graphs),
        class_labels=tuple(classes),
        num_classes=2,
        label_alphabet=(0, 1, 2),
        metadata={"seed": seed, "motif": "house", "motif_class": 1},
    )


def random_binary_dataset(
    num_graphs: int,
    seed: int,
    min_nodes: int = 5,
    max_nodes: int = 12,
    num_labels: int = 3,
    edge_prob: float = 0.35,
) -> GraphDataset:
    """Label-balanced random graphs with arbitrary classes; for harness tests
    where the relationship between structure and class does not matter."""
    rng = np.random.default_rng(seed)
    graphs = tuple(
        random_graph(i, int(rng.integers(min_nodes, max_nodes + 1)), edge_prob, num_labels, rng)
        for i in range(num_graphs)
    )
    classes = tuple(int(x) for x in rng.integers(0, 2, size=num_graphs))
    # ensure both classes occur
    classes = classes[:-2] + (0, 1)
    return GraphDataset(
        name="random-binary",
        graphs=graphs,
        class_labels=classes,
        num_classes=2,
        label_alphabet=tuple(range(num_labels)),
        metadata={"seed": seed},
    )
