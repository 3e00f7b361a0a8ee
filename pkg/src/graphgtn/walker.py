"""Random-walk metapath sampling and the metapath graph built from the walks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from graphgtn import _kernels
from graphgtn.graph import GraphError, HeteroGraph, MetapathGraph, counts_to_indptr
from graphgtn.scoring import ScoreTable

MAX_REJECTIONS = 64


@dataclass(frozen=True, eq=False)
class WalkSet:
    """Stored walks: ``vertices[r]`` has l + 1 ids, ``types[r]`` the l edge types taken.

    Sampled sets hold ``num_walks`` rows per source, ordered by source then
    walk index. Hand-built sets may hold any number of walks per source.
    """

    vertices: np.ndarray
    types: np.ndarray
    seed: int | None = None
    num_walks: int | None = None

    @property
    def length(self) -> int:
        return self.types.shape[1]

    def __len__(self) -> int:
        return self.vertices.shape[0]

    @property
    def sources(self) -> np.ndarray:
        return self.vertices[:, 0]

    @property
    def ends(self) -> np.ndarray:
        return self.vertices[:, -1]

    @classmethod
    def from_paths(cls, paths, types, length: int | None = None) -> "WalkSet":
        vertices = np.asarray(paths, dtype=np.int64)
        types = np.asarray(types, dtype=np.int64)
        if vertices.size == 0:
            l = length if length is not None else 0
            return cls(np.zeros((0, l + 1), np.int64), np.zeros((0, l), np.int64))
        if vertices.ndim != 2 or types.shape != (vertices.shape[0], vertices.shape[1] - 1):
            raise GraphError("each walk needs l + 1 vertices and l types")
        return cls(vertices, types)

    def equals(self, other: "WalkSet") -> bool:
        return np.array_equal(self.vertices, other.vertices) and np.array_equal(self.types, other.types)


def sample_walks(
    g: HeteroGraph,
    table: ScoreTable,
    l: int,
    num_walks: int,
    seed: int,
    max_rejections: int = MAX_REJECTIONS,
) -> WalkSet:
    """``num_walks`` score-weighted ``l``-step walks from every vertex.

    Step j proposes an out-edge uniformly and accepts it with probability
    ``s[j][type] / max_t s[j][t]``. After ``max_rejections`` consecutive
    rejections the step falls back to an exact weighted choice. Every random
    draw is a function of (seed, vertex, walk, step, attempt) only.
    """
    if g.self_type is None:
        raise GraphError("walk sampling needs a self-edge augmented graph")
    if num_walks < 0:
        raise ValueError("num_walks must be >= 0")
    if l < 1:
        raise ValueError("walk length must be >= 1")
    s = np.ascontiguousarray(table.s, dtype=np.float64)
    if s.shape[0] < l or s.shape[1] < g.num_edge_types:
        raise GraphError(f"score table {s.shape} too small for l={l}, T={g.num_edge_types}")
    smax = s[:l].max(axis=1)
    if np.any(smax <= 0):
        raise GraphError("every position needs at least one positive score")
    if num_walks == 0 or g.num_vertices == 0:
        empty = WalkSet.from_paths([], [], length=l)
        return WalkSet(empty.vertices, empty.types, seed, num_walks)
    seed = int(seed) % (1 << 64)
    verts, types, _ = _kernels.sample_walks(
        g.indptr, g.dst, g.etype, s, smax, l, num_walks, np.uint64(seed), max_rejections
    )
    if verts.min() < 0:
        raise GraphError("walk reached a vertex with no out-edges")
    return WalkSet(verts, types, seed, num_walks)


def walk_scores(table: ScoreTable, walks: WalkSet) -> np.ndarray:
    """Score of each stored walk, multiplied left to right from position 1."""
    if len(walks) == 0:
        return np.zeros(0)
    if walks.length > table.num_positions:
        raise GraphError("walks are longer than the score table")
    return _kernels.walk_scores(np.ascontiguousarray(table.s, dtype=np.float64), walks.types)


def _by_source(walks: WalkSet, n: int) -> tuple[np.ndarray, np.ndarray]:
    src = walks.sources
    if np.any(src < 0) or np.any(src >= n) or np.any(walks.ends < 0) or np.any(walks.ends >= n):
        raise GraphError("walk vertex out of range")
    if np.all(src[1:] >= src[:-1]):
        order = None
    else:
        order = np.argsort(src, kind="stable")
        src = src[order]
    indptr = np.searchsorted(src, np.arange(n + 1)).astype(np.int64)
    return indptr, order


def check_walks(g: HeteroGraph, walks: WalkSet) -> None:
    if len(walks) == 0:
        return
    ok = _kernels.walk_edges_exist(g.indptr, g.dst, g.etype, walks.vertices, walks.types)
    if not ok.all():
        r = int(np.flatnonzero(~ok)[0])
        raise GraphError(f"walk {r} uses an edge that is not in the graph")


def generate_sampled(
    g: HeteroGraph, table: ScoreTable, walks: WalkSet, validate: bool = True
) -> MetapathGraph:
    """Sum each stored walk's score into the edge (first vertex, last vertex).

    Repeated walks contribute once per occurrence.
    """
    n = g.num_vertices
    if len(walks) == 0:
        return MetapathGraph.empty(n)
    if validate:
        check_walks(g, walks)
    scores = walk_scores(table, walks)
    indptr, order = _by_source(walks, n)
    ends = walks.ends if order is None else walks.ends[order]
    if order is not None:
        scores = scores[order]
    ends = np.ascontiguousarray(ends, dtype=np.int64)
    out_indptr = counts_to_indptr(_kernels.sampled_counts(n, indptr, ends))
    idx, w = _kernels.sampled_accumulate(n, indptr, ends, scores, out_indptr)
    return MetapathGraph(n, out_indptr, idx, w)


def backward_sampled(table: ScoreTable, walks: WalkSet, grad_mg: MetapathGraph) -> np.ndarray:
    """Score-table gradient of ``sum grad_mg * MG`` over the stored walks only.

    The walks are held fixed; the sampling distribution is not differentiated.
    """
    s = np.ascontiguousarray(table.s, dtype=np.float64)
    if len(walks) == 0:
        return np.zeros_like(s)
    return _kernels.sampled_backward(
        s, walks.vertices, walks.types, grad_mg.indptr, grad_mg.indices,
        np.ascontiguousarray(grad_mg.weights, dtype=np.float64),
    )
