"""Interpretable graph classification through a WL-subtree concept bottleneck.

The package splits into: graph containers and TU-format IO (graphs), WL
refinement and concept selection (wl), co-occurrence concept embeddings
(embed), the bottlenecked GIN classifier (net), explanation tooling
(interpret), the weight intervention engine (intervene), metrics (metrics),
deterministic artifacts (artifacts), synthetic benchmarks (synth), pipeline
orchestration (pipeline), and the CLI/HTTP surface (cli, server).
"""

__version__ = "0.1.0"
