"""Node-labeled undirected graphs, TU-format datasets, and stratified folds.

The TU text format is a directory of plain files sharing a dataset prefix:

    <name>_A.txt                one "u, v" edge per line, 1-based global node ids
    <name>_graph_indicator.txt  line i: graph id (1-based) of global node i
    <name>_graph_labels.txt     one class label per graph
    <name>_node_labels.txt      one label per node (optional)
    <name>_node_masks.txt       one 0/1 per node, ground-truth interpretable
                                nodes (optional)

Datasets are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DataFormatError,
    ParseError,
    StratificationError,
    ValidationError,
)


@dataclass(frozen=True)
class Graph:
    """An undirected simple graph with small-integer node labels.

    Edges are stored once, as (u, v) with u < v, 0-based. ``node_mask`` marks
    ground-truth interpretable nodes where the dataset provides them.
    """

    id: int
    num_nodes: int
    edges: tuple[tuple[int, int], ...]
    node_labels: tuple[int, ...]
    node_mask: tuple[bool, ...] | None = None

    def __post_init__(self):
        if self.num_nodes <= 0:
            raise ValidationError(f"graph {self.id}: empty graph")
        if len(self.node_labels) != self.num_nodes:
            raise ValidationError(
                f"graph {self.id}: {len(self.node_labels)} labels for "
                f"{self.num_nodes} nodes"
            )
        if self.node_mask is not None and len(self.node_mask) != self.num_nodes:
            raise ValidationError(f"graph {self.id}: node mask length mismatch")
        seen = set()
        for u, v in self.edges:
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise ValidationError(
                    f"graph {self.id}: edge ({u},{v}) out of range"
                )
            if u == v:
                raise ValidationError(f"graph {self.id}: self-loop at node {u}")
            if u > v:
                raise ValidationError(f"graph {self.id}: edge ({u},{v}) not normalized")
            if (u, v) in seen:
                raise ValidationError(f"graph {self.id}: duplicate edge ({u},{v})")
            seen.add((u, v))

    @property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        """Adjacency lists, computed once on first use."""
        cached = self.__dict__.get("_neighbors")
        if cached is None:
            adj: list[list[int]] = [[] for _ in range(self.num_nodes)]
            for u, v in self.edges:
                adj[u].append(v)
                adj[v].append(u)
            cached = tuple(tuple(sorted(a)) for a in adj)
            self.__dict__["_neighbors"] = cached
        return cached

    def degree(self, v: int) -> int:
        return len(self.neighbors[v])

    def relabel_nodes(self, perm: list[int] | np.ndarray) -> "Graph":
        """Return the graph with node ids permuted: new id of node v is perm[v]."""
        perm = list(perm)
        if sorted(perm) != list(range(self.num_nodes)):
            raise ValidationError("perm is not a permutation of the node ids")
        labels = [0] * self.num_nodes
        mask = [False] * self.num_nodes if self.node_mask is not None else None
        for old, new in enumerate(perm):
            labels[new] = self.node_labels[old]
            if mask is not None:
                mask[new] = self.node_mask[old]
        edges = normalize_edges([(perm[u], perm[v]) for u, v in self.edges])
        return Graph(
            id=self.id,
            num_nodes=self.num_nodes,
            edges=edges,
            node_labels=tuple(labels),
            node_mask=tuple(mask) if mask is not None else None,
        )


def normalize_edges(pairs) -> tuple[tuple[int, int], ...]:
    """Orient each pair low-high, drop duplicates and self-loops, sort."""
    out = set()
    for u, v in pairs:
        if u == v:
            continue
        out.add((u, v) if u < v else (v, u))
    return tuple(sorted(out))


@dataclass(frozen=True)
class GraphDataset:
    name: str
    graphs: tuple[Graph, ...]
    class_labels: tuple[int, ...]
    num_classes: int
    label_alphabet: tuple[int, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.class_labels) != len(self.graphs):
            raise ValidationError("one class label per graph required")
        present = set(self.class_labels)
        if present != set(range(self.num_classes)):
            raise ValidationError(
                f"class labels must cover 0..{self.num_classes - 1}, got {sorted(present)}"
            )

    def __len__(self) -> int:
        return len(self.graphs)

    def subset(self, ids) -> "GraphDataset":
        """Restrict to the given graph indices (classes are not re-densified)."""
        ids = list(ids)
        return GraphDataset(
            name=self.name,
            graphs=tuple(self.graphs[i] for i in ids),
            class_labels=tuple(self.class_labels[i] for i in ids),
            num_classes=self.num_classes,
            label_alphabet=self.label_alphabet,
            metadata=dict(self.metadata, subset_of=self.name, subset_ids=ids),
        )

    @property
    def has_masks(self) -> bool:
        return any(g.node_mask is not None for g in self.graphs)


def build_dataset(name, graph_specs, class_labels, metadata=None) -> GraphDataset:
    """Assemble a dataset from raw per-graph pieces, densifying labels.

    ``graph_specs`` is a list of (num_nodes, edges, node_labels, node_mask).
    Class labels and node labels are remapped to dense 0-based integers; the
    mappings are recorded in the metadata.
    """
    class_map = {c: i for i, c in enumerate(sorted(set(class_labels)))}
    all_node_labels = sorted({l for _, _, labels, _ in graph_specs for l in labels})
    node_label_map = {l: i for i, l in enumerate(all_node_labels)}
    graphs = []
    for gid, (n, edges, labels, mask) in enumerate(graph_specs):
        graphs.append(
            Graph(
                id=gid,
                num_nodes=n,
                edges=normalize_edges(edges),
                node_labels=tuple(node_label_map[l] for l in labels),
                node_mask=tuple(bool(m) for m in mask) if mask is not None else None,
            )
        )
    meta = dict(metadata or {})
    meta["class_label_map"] = {str(k): v for k, v in class_map.items()}
    meta["node_label_map"] = {str(k): v for k, v in node_label_map.items()}
    return GraphDataset(
        name=name,
        graphs=tuple(graphs),
        class_labels=tuple(class_map[c] for c in class_labels),
        num_classes=len(class_map),
        label_alphabet=tuple(range(len(node_label_map))),
        metadata=meta,
    )


def _read_int_lines(path: Path) -> list[int]:
    values = []
    with path.open() as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(int(float(line)))
            except ValueError:
                raise ParseError(f"expected an integer, got {line!r}", path, line_no)
    return values


def parse_tu_dataset(root_path, name: str) -> GraphDataset:
    """Parse a TU-format dataset directory into a GraphDataset.

    Node labels default to node degree when ``<name>_node_labels.txt`` is
    absent (recorded as ``degree_labeled`` in the metadata). Self-loops are
    dropped with a warning; duplicate/symmetric edges are collapsed.
    """
    root = Path(root_path)
    # Accept either the dataset directory itself or its parent.
    if (root / name).is_dir():
        root = root / name

    def required(suffix):
        p = root / f"{name}_{suffix}"
        if not p.exists():
            raise DataFormatError(f"missing required file {p}")
        return p

    indicator = _read_int_lines(required("graph_indicator.txt"))
    graph_labels = _read_int_lines(required("graph_labels.txt"))
    a_path = required("A.txt")

    if not indicator:
        raise DataFormatError(f"{root / (name + '_graph_indicator.txt')} is empty")
    num_graphs = max(indicator)
    if sorted(set(indicator)) != list(range(1, num_graphs + 1)):
        raise ValidationError("graph indicator ids must be contiguous from 1")
    if len(graph_labels) != num_graphs:
        raise ValidationError(
            f"{len(graph_labels)} graph labels for {num_graphs} graphs"
        )

    # Global node id -> (graph index, local node id), in indicator order.
    node_graph = [g - 1 for g in indicator]
    local_id = []
    counts = [0] * num_graphs
    for g in node_graph:
        local_id.append(counts[g])
        counts[g] += 1
    for gid, c in enumerate(counts):
        if c == 0:
            raise ValidationError(f"graph {gid}: empty graph (no nodes in indicator)")

    total_nodes = len(indicator)
    edges_per_graph: list[list[tuple[int, int]]] = [[] for _ in range(num_graphs)]
    dropped_loops = 0
    with a_path.open() as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ParseError(f"expected 'u, v', got {line!r}", a_path, line_no)
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"non-integer edge endpoint in {line!r}", a_path, line_no)
            if not (1 <= u <= total_nodes and 1 <= v <= total_nodes):
                raise ParseError(
                    f"edge ({u},{v}) references a node outside 1..{total_nodes}",
                    a_path,
                    line_no,
                )
            if node_graph[u - 1] != node_graph[v - 1]:
                raise ParseError(
                    f"edge ({u},{v}) crosses graph boundaries", a_path, line_no
                )
            if u == v:
                dropped_loops += 1
                continue
            g = node_graph[u - 1]
            edges_per_graph[g].append((local_id[u - 1], local_id[v - 1]))
    if dropped_loops:
        warnings.warn(f"{name}: dropped {dropped_loops} self-loop(s)", stacklevel=2)

    labels_path = root / f"{name}_node_labels.txt"
    degree_labeled = not labels_path.exists()
    if degree_labeled:
        node_labels = None
    else:
        node_labels = _read_int_lines(labels_path)
        if len(node_labels) != total_nodes:
            raise ValidationError(
                f"{len(node_labels)} node labels for {total_nodes} nodes"
            )

    masks_path = root / f"{name}_node_masks.txt"
    node_masks = None
    if masks_path.exists():
        node_masks = _read_int_lines(masks_path)
        if len(node_masks) != total_nodes:
            raise ValidationError(
                f"{len(node_masks)} mask entries for {total_nodes} nodes"
            )
        if any(m not in (0, 1) for m in node_masks):
            raise ValidationError("node masks must be 0/1")

    specs = []
    for gid in range(num_graphs):
        n = counts[gid]
        edges = normalize_edges(edges_per_graph[gid])
        if degree_labeled:
            deg = [0] * n
            for u, v in edges:
                deg[u] += 1
                deg[v] += 1
            labels = deg
        else:
            labels = [0] * n
            for global_id, g in enumerate(node_graph):
                if g == gid:
                    labels[local_id[global_id]] = node_labels[global_id]
        mask = None
        if node_masks is not None:
            mask = [0] * n
            for global_id, g in enumerate(node_graph):
                if g == gid:
                    mask[local_id[global_id]] = node_masks[global_id]
        specs.append((n, edges, labels, mask))

    return build_dataset(
        name,
        specs,
        graph_labels,
        metadata={"source": str(root), "degree_labeled": degree_labeled},
    )


def write_tu_dataset(dataset: GraphDataset, root_path) -> Path:
    """Serialize a dataset back to TU format (inverse of parse_tu_dataset)."""
    root = Path(root_path) / dataset.name
    root.mkdir(parents=True, exist_ok=True)
    name = dataset.name
    with (root / f"{name}_graph_indicator.txt").open("w") as f:
        for gid, g in enumerate(dataset.graphs, start=1):
            f.write(f"{gid}\n" * g.num_nodes)
    with (root / f"{name}_graph_labels.txt").open("w") as f:
        for c in dataset.class_labels:
            f.write(f"{c}\n")
    offsets = []
    total = 0
    for g in dataset.graphs:
        offsets.append(total)
        total += g.num_nodes
    with (root / f"{name}_A.txt").open("w") as f:
        for g, off in zip(dataset.graphs, offsets):
            for u, v in g.edges:
                f.write(f"{off + u + 1}, {off + v + 1}\n")
                f.write(f"{off + v + 1}, {off + u + 1}\n")
    if not dataset.metadata.get("degree_labeled", False):
        with (root / f"{name}_node_labels.txt").open("w") as f:
            for g in dataset.graphs:
                for l in g.node_labels:
                    f.write(f"{l}\n")
    if dataset.has_masks:
        with (root / f"{name}_node_masks.txt").open("w") as f:
            for g in dataset.graphs:
                mask = g.node_mask or (False,) * g.num_nodes
                for m in mask:
                    f.write(f"{int(m)}\n")
    return root


@dataclass(frozen=True)
class FoldSplit:
    fold_index: int
    train_ids: tuple[int, ...]
    test_ids: tuple[int, ...]


def stratified_k_fold(dataset: GraphDataset, k: int, seed: int) -> list[FoldSplit]:
    """Deterministic stratified k-fold splits over the dataset.

    Per-fold test sets partition the graphs; each class is dealt round-robin
    after a seeded shuffle, so per-fold class counts differ from the exact
    proportional share by at most one sample.
    """
    if k < 2:
        raise StratificationError(f"k must be >= 2, got {k}")
    labels = np.asarray(dataset.class_labels)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(labels), dtype=int)
    for c in range(dataset.num_classes):
        members = np.flatnonzero(labels == c)
        if len(members) < k:
            raise StratificationError(
                f"class {c} has {len(members)} members, fewer than k={k}"
            )
        rng.shuffle(members)
        for pos, idx in enumerate(members):
            fold_of[idx] = pos % k
    splits = []
    all_ids = np.arange(len(labels))
    for fold in range(k):
        test = all_ids[fold_of == fold]
        train = all_ids[fold_of != fold]
        splits.append(
            FoldSplit(
                fold_index=fold,
                train_ids=tuple(int(i) for i in train),
                test_ids=tuple(int(i) for i in test),
            )
        )
    return splits
