"""From raw graphs to a concept universe.

Walks one small labeled graph through WL refinement, then selects the most
class-discriminative codes on a toy two-class dataset by information gain.
"""

import numpy as np

from graphcb.graphs import Graph, GraphDataset
from graphcb.wl import build_universe, build_vocabulary, wl_refine

# a 4-node graph: triangle on nodes 0-1-2 plus a pendant node 3
g = Graph(
    id=0,
    num_nodes=4,
    edges=((0, 1), (0, 2), (1, 2), (2, 3)),
    node_labels=(1, 2, 3, 3),
)

print("node codes per refinement level")
refined = wl_refine(g, 2)
for level, codes in enumerate(refined, start=1):
    print(f"  level {level}:")
    for v, code in enumerate(codes):
        print(f"    node {v}: {code}")

# height-1 codes read "own label, sorted neighbor labels"; height-2 codes
# nest each neighbor's height-1 code in parentheses, again sorted.

# a dataset where triangles are class 0 and 4-paths are class 1
triangles = [
    Graph(id=i, num_nodes=3, edges=((0, 1), (0, 2), (1, 2)), node_labels=(0, 1, 1))
    for i in range(3)
]
paths = [
    Graph(id=3 + i, num_nodes=4, edges=((0, 1), (1, 2), (2, 3)), node_labels=(0, 1, 1, 0))
    for i in range(3)
]
ds = GraphDataset(
    name="toy",
    graphs=tuple(triangles + paths),
    class_labels=(0, 0, 0, 1, 1, 1),
    num_classes=2,
    label_alphabet=(0, 1),
)

vocab = build_vocabulary(ds, level=1)
print(f"\nlevel-1 vocabulary ({len(vocab.codes)} codes): {list(vocab.codes)}")

universe = build_universe(ds, num_levels=2, m_per_level=2)
print("\nselected concepts (by information gain, ties broken by code):")
for entry in universe.concept_entries():
    print(
        f"  slot {entry['global_index']}: level {entry['level']} "
        f"code {entry['code']!r} gain {entry['information_gain']:.3f} bits"
    )
