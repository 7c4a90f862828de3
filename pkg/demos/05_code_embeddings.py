"""Dense vectors for WL codes, and concept labels by cosine similarity.

Graph sentences (sorted node codes at one height) are the corpus; whole
sentences are co-occurrence windows. After factorizing the co-occurrence
counts, a graph is the sum of its code vectors and a concept label is its
cosine to each selected concept's vector. This is the alternative to the
one-hot frequency labels, useful when concepts should share similarity
structure instead of being orthogonal.
"""

import numpy as np

from graphcb.embed import (
    build_corpus,
    cooccurrence_pairs,
    embed_graph,
    train_embeddings,
    universe_embedding_labels,
)
from graphcb.synth import planted_motif_dataset
from graphcb.wl import build_universe

dataset = planted_motif_dataset(num_graphs=60, seed=1)
universe = build_universe(dataset, num_levels=2, m_per_level=3)

corpus = build_corpus(
    dataset,
    list(universe.vocabularies),
    list(universe.selections),
    num_levels=2,
)
print(f"corpus: {len(corpus.sentences)} sentences, {len(corpus.token_ids)} tokens")

pairs = cooccurrence_pairs(corpus)
print(f"co-occurrence matrix has {np.count_nonzero(pairs)} nonzero cells")

table = train_embeddings(corpus, dim=16, epochs=50, seed=0)
print(f"embedding table: {len(table.tokens)} tokens x {table.dim} dims")

labels = universe_embedding_labels(dataset.graphs, universe, table)
print(f"label matrix: {labels.shape}, values in [-1, 1]")

motif_rows = labels[np.asarray(dataset.class_labels) == 1]
plain_rows = labels[np.asarray(dataset.class_labels) == 0]
print("mean label per concept slot:")
print(f"  motif graphs: {np.round(motif_rows.mean(axis=0), 3)}")
print(f"  plain graphs: {np.round(plain_rows.mean(axis=0), 3)}")

# a single graph's level-1 sentence, summed into one vector
from graphcb.embed import GraphSentence
from graphcb.wl import wl_refine

codes = wl_refine(dataset.graphs[1], 1)[0]
sentence = GraphSentence(level=1, tokens=tuple(sorted(codes)))
vec = embed_graph(sentence, table, strict=False)
print(f"graph 1 sentence-sum vector norm: {np.linalg.norm(vec):.3f}")
