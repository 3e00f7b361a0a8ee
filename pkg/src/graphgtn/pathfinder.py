"""Exact metapath graph generation by path enumeration, and its gradient.

``generate_vanilla`` sums the scores of every ``l``-edge path into the edge
between its endpoints. ``generate_split`` enumerates half-length paths once,
scores them under two position offsets and composes the two half graphs.
The backward passes regenerate paths instead of storing them.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from graphgtn import _kernels
from graphgtn.graph import GraphError, HeteroGraph, MetapathGraph, counts_to_indptr, symbolic_metapath_size
from graphgtn.scoring import ScoreTable


class EnumStrategy(enum.Enum):
    DEPTH_FIRST = "dfs"
    LEVEL_BY_LEVEL = "level"


@dataclass(frozen=True)
class SplitResult:
    mg1: MetapathGraph
    mg2: MetapathGraph
    mg: MetapathGraph
    first_len: int
    second_len: int


def _check_table(table: ScoreTable, g: HeteroGraph, positions: int) -> np.ndarray:
    s = np.ascontiguousarray(table.s, dtype=np.float64)
    if s.shape[0] < positions:
        raise GraphError(f"metapath length {positions} exceeds the {s.shape[0]} table positions")
    if s.shape[1] < g.num_edge_types:
        raise GraphError(f"table has {s.shape[1]} types, graph has {g.num_edge_types}")
    return s


def _enumerate(g, s, length, offsets, strategy) -> list[MetapathGraph]:
    indptr = counts_to_indptr(symbolic_metapath_size(g, length))
    kernel = _kernels.level_paths if strategy is EnumStrategy.LEVEL_BY_LEVEL else _kernels.dfs_paths
    idx, w = kernel(g.indptr, g.dst, g.etype, s, length, np.asarray(offsets, dtype=np.int64), indptr)
    return [MetapathGraph(g.num_vertices, indptr, idx, w[q]) for q in range(len(offsets))]


def generate_vanilla(
    g: HeteroGraph,
    table: ScoreTable,
    l: int,
    strategy: EnumStrategy = EnumStrategy.LEVEL_BY_LEVEL,
) -> MetapathGraph:
    if l < 1:
        raise GraphError("metapath length must be >= 1")
    s = _check_table(table, g, l)
    return _enumerate(g, s, l, [0], EnumStrategy(strategy))[0]


def split_lengths(l: int) -> tuple[int, int]:
    """(first half, second half) edge counts: ceil(l/2) and floor(l/2)."""
    return (l + 1) // 2, l // 2


def generate_split(
    g: HeteroGraph,
    table: ScoreTable,
    l: int,
    strategy: EnumStrategy = EnumStrategy.LEVEL_BY_LEVEL,
) -> SplitResult:
    if l < 2:
        raise GraphError("split generation needs l >= 2")
    s = _check_table(table, g, l)
    strategy = EnumStrategy(strategy)
    h1, h2 = split_lengths(l)
    if h1 == h2:
        # one enumeration, scored at position 1 and at position h1 + 1
        mg1, mg2 = _enumerate(g, s, h1, [0, h1], strategy)
    else:
        (mg1,) = _enumerate(g, s, h1, [0], strategy)
        (mg2,) = _enumerate(g, s, h2, [h1], strategy)
    return SplitResult(mg1, mg2, compose_metapath_graphs(mg1, mg2), h1, h2)


def compose_metapath_graphs(mg1: MetapathGraph, mg2: MetapathGraph) -> MetapathGraph:
    """Sparse product: ``w(a, c) = sum_b w1(a, b) * w2(b, c)``."""
    if mg1.num_vertices != mg2.num_vertices:
        raise GraphError(f"vertex counts differ: {mg1.num_vertices} != {mg2.num_vertices}")
    indptr = counts_to_indptr(_kernels.spgemm_counts(mg1.indptr, mg1.indices, mg2.indptr, mg2.indices))
    idx, w = _kernels.spgemm(mg1.indptr, mg1.indices, mg1.weights, mg2.indptr, mg2.indices, mg2.weights, indptr)
    return MetapathGraph(mg1.num_vertices, indptr, idx, w)


def _transpose(mg: MetapathGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    return _kernels.csr_transpose(mg.indptr, mg.indices, np.ascontiguousarray(mg.weights, dtype=np.float64))


def compose_backward(
    mg1: MetapathGraph, mg2: MetapathGraph, grad_mg: MetapathGraph
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients on the edge weights of ``mg1`` and ``mg2`` given d/dMG.

    The second factor's gradient is the first factor's gradient of the
    transposed product, ``(A B)^T = B^T A^T``.
    """
    ga = _kernels.spgemm_grad_left(
        mg1.indptr, mg1.indices, mg2.indptr, mg2.indices, mg2.weights,
        grad_mg.indptr, grad_mg.indices, grad_mg.weights,
    )
    at_indptr, at_idx, at_w, _ = _transpose(mg1)
    bt_indptr, bt_idx, _, bt_perm = _transpose(mg2)
    gt_indptr, gt_idx, gt_w, _ = _transpose(grad_mg)
    gbt = _kernels.spgemm_grad_left(bt_indptr, bt_idx, at_indptr, at_idx, at_w, gt_indptr, gt_idx, gt_w)
    gb = np.empty_like(gbt)
    gb[bt_perm] = gbt
    return ga, gb


def _paths_backward(g, s, length, offset, grad_mg, strategy) -> np.ndarray:
    kernel = _kernels.level_backward if strategy is EnumStrategy.LEVEL_BY_LEVEL else _kernels.dfs_backward
    return kernel(
        g.indptr, g.dst, g.etype, s, length, offset,
        grad_mg.indptr, grad_mg.indices, np.ascontiguousarray(grad_mg.weights, dtype=np.float64),
    )


def backward_scores(
    g: HeteroGraph,
    table: ScoreTable,
    l: int,
    grad_mg: MetapathGraph,
    strategy: EnumStrategy = EnumStrategy.LEVEL_BY_LEVEL,
) -> np.ndarray:
    """d/d(score table) of ``sum over (u, v) of grad_mg(u, v) * MG(u, v)``.

    Paths are re-enumerated from every source that has a non-empty gradient row.
    """
    s = _check_table(table, g, l)
    if grad_mg.num_vertices != g.num_vertices:
        raise GraphError("gradient graph has the wrong vertex count")
    return _paths_backward(g, s, l, 0, grad_mg, EnumStrategy(strategy))


def backward_split(
    g: HeteroGraph,
    table: ScoreTable,
    split: SplitResult,
    grad_mg: MetapathGraph,
    strategy: EnumStrategy = EnumStrategy.LEVEL_BY_LEVEL,
) -> np.ndarray:
    """Score-table gradient through the composition of the two half graphs."""
    l = split.first_len + split.second_len
    s = _check_table(table, g, l)
    g1, g2 = compose_backward(split.mg1, split.mg2, grad_mg)
    strategy = EnumStrategy(strategy)
    grad = _paths_backward(g, s, split.first_len, 0, split.mg1.with_weights(g1), strategy)
    grad += _paths_backward(g, s, split.second_len, split.first_len, split.mg2.with_weights(g2), strategy)
    return grad
