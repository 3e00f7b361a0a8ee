"""Dense matrix-chain reference for metapath graphs. Test use only.

One n x n score-scaled adjacency matrix per position, multiplied left to
right. Deliberately naive: no BLAS, no sparsity tricks beyond skipping zero
multipliers.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from graphgtn.graph import HeteroGraph
from graphgtn.scoring import ScoreTable

MAX_VERTICES = 2048


class OracleSizeError(ValueError):
    pass


def _check_n(n: int) -> None:
    if n > MAX_VERTICES:
        raise OracleSizeError(f"dense oracle is capped at {MAX_VERTICES} vertices, got {n}")


def build_position_matrix(g: HeteroGraph, table: ScoreTable, pos: int) -> np.ndarray:
    """Entry (u, v) is the sum of ``s[pos][t]`` over edges (u, v, t); ``pos`` is 1-based."""
    _check_n(g.num_vertices)
    if not 1 <= pos <= table.num_positions:
        raise ValueError(f"position {pos} outside 1..{table.num_positions}")
    a = np.zeros((g.num_vertices, g.num_vertices))
    for u, v, t in g.edges():
        a[u, v] += table.s[pos - 1, t]
    return a


def chain_product(mats: Sequence[np.ndarray]) -> np.ndarray:
    if not mats:
        raise ValueError("empty chain")
    n = mats[0].shape[0]
    _check_n(n)
    for m in mats:
        if m.shape != (n, n):
            raise ValueError(f"matrix of shape {m.shape} in a chain of {n}x{n}")
    out = np.array(mats[0], dtype=np.float64)
    for b in mats[1:]:
        out = _matmul(out, b)
    return out


def _matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    out = np.zeros((n, b.shape[1]))
    for i in range(n):
        row = out[i]
        for k in range(n):
            aik = a[i, k]
            if aik != 0.0:
                row += aik * b[k]
    return out


def dense_metapath(g: HeteroGraph, table: ScoreTable, l: int) -> np.ndarray:
    return chain_product([build_position_matrix(g, table, p) for p in range(1, l + 1)])
