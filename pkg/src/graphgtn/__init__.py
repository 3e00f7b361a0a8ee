"""Metapath graph generation by graph traversal, and GTN-style node classification."""
from graphgtn.graph import (
    GraphError,
    HeteroGraph,
    MetapathGraph,
    add_self_edges,
    build_graph,
    symbolic_metapath_size,
)
from graphgtn.pathfinder import (
    EnumStrategy,
    SplitResult,
    backward_scores,
    backward_split,
    compose_backward,
    compose_metapath_graphs,
    generate_split,
    generate_vanilla,
)
from graphgtn.scoring import (
    ScoreParams,
    ScoreTable,
    materialize_softmax,
    score_path,
    softmax_backward,
)
from graphgtn.walker import WalkSet, backward_sampled, generate_sampled, sample_walks

__all__ = [
    "EnumStrategy",
    "GraphError",
    "HeteroGraph",
    "MetapathGraph",
    "ScoreParams",
    "ScoreTable",
    "SplitResult",
    "WalkSet",
    "add_self_edges",
    "backward_sampled",
    "backward_scores",
    "backward_split",
    "build_graph",
    "compose_backward",
    "compose_metapath_graphs",
    "generate_sampled",
    "generate_split",
    "generate_vanilla",
    "materialize_softmax",
    "sample_walks",
    "score_path",
    "softmax_backward",
    "symbolic_metapath_size",
]
