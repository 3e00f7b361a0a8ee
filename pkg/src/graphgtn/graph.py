"""Typed directed graphs in compressed adjacency form, and weighted metapath graphs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from graphgtn import _kernels


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class HeteroGraph:
    """Immutable heterogeneous graph; edges are grouped by source vertex.

    ``self_type`` is the id of the reserved self-edge type once
    :func:`add_self_edges` has been applied, otherwise ``None``.
    """

    num_vertices: int
    num_edge_types: int
    indptr: np.ndarray
    dst: np.ndarray
    etype: np.ndarray
    self_type: int | None = None

    @property
    def num_edges(self) -> int:
        return int(self.indptr[-1])

    @property
    def src(self) -> np.ndarray:
        return np.repeat(np.arange(self.num_vertices, dtype=np.int64), np.diff(self.indptr))

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def out_degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def out_edges(self, v: int) -> list[tuple[int, int]]:
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return list(zip(self.dst[lo:hi].tolist(), self.etype[lo:hi].tolist()))

    def edges(self) -> Iterator[tuple[int, int, int]]:
        yield from zip(self.src.tolist(), self.dst.tolist(), self.etype.tolist())

    def validate(self) -> None:
        n = self.num_vertices
        if self.indptr.shape != (n + 1,) or self.indptr[0] != 0:
            raise GraphError("indptr must have num_vertices + 1 entries starting at 0")
        if np.any(np.diff(self.indptr) < 0):
            raise GraphError("indptr must be non-decreasing")
        m = self.num_edges
        if self.dst.shape != (m,) or self.etype.shape != (m,):
            raise GraphError("edge arrays do not match indptr")
        if m and (self.dst.min() < 0 or self.dst.max() >= n):
            raise GraphError("edge destination out of range")
        if m and (self.etype.min() < 0 or self.etype.max() >= self.num_edge_types):
            raise GraphError("edge type out of range")


def build_graph(
    edges: Iterable[Sequence[int]] | np.ndarray, num_vertices: int, num_types: int
) -> HeteroGraph:
    """Build a :class:`HeteroGraph` from ``(src, dst, type)`` triples.

    Edges are grouped by source; a source's edges keep their input order.
    """
    if num_types < 1:
        raise GraphError("num_types must be >= 1")
    if num_vertices < 0:
        raise GraphError("num_vertices must be >= 0")
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise GraphError("edges must be (src, dst, type) triples")
    src, dst, etype = arr[:, 0], arr[:, 1], arr[:, 2]
    for name, col, bound in (("src", src, num_vertices), ("dst", dst, num_vertices), ("type", etype, num_types)):
        bad = np.flatnonzero((col < 0) | (col >= bound))
        if bad.size:
            i = int(bad[0])
            raise GraphError(f"edge {i}: {name} {int(col[i])} out of range")
    order = np.argsort(src, kind="stable")
    indptr = np.zeros(num_vertices + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=num_vertices), out=indptr[1:])
    return HeteroGraph(
        num_vertices=num_vertices,
        num_edge_types=num_types,
        indptr=indptr,
        dst=np.ascontiguousarray(dst[order]),
        etype=np.ascontiguousarray(etype[order]),
    )


def add_self_edges(g: HeteroGraph) -> HeteroGraph:
    """Append one ``(v, v, SELF_TYPE)`` edge to every vertex.

    SELF_TYPE is allocated as a new, last type id. Each self-edge is placed
    after the vertex's original out-edges.
    """
    if g.self_type is not None:
        raise GraphError("graph already has self-edges")
    n = g.num_vertices
    self_type = g.num_edge_types
    deg = g.out_degrees()
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg + 1, out=indptr[1:])
    dst = np.empty(g.num_edges + n, dtype=np.int64)
    etype = np.empty_like(dst)
    self_slots = indptr[1:] - 1
    keep = np.ones(dst.size, dtype=bool)
    keep[self_slots] = False
    dst[keep] = g.dst
    etype[keep] = g.etype
    dst[self_slots] = np.arange(n)
    etype[self_slots] = self_type
    return HeteroGraph(n, g.num_edge_types + 1, indptr, dst, etype, self_type=self_type)


def symbolic_metapath_size(g: HeteroGraph, length: int) -> np.ndarray:
    """Per-vertex count of distinct endpoints of exactly ``length``-edge paths."""
    if length < 1:
        raise GraphError("metapath length must be >= 1")
    return _kernels.endpoint_counts(g.indptr, g.dst, length)


def counts_to_indptr(counts: np.ndarray) -> np.ndarray:
    indptr = np.zeros(counts.size + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr


@dataclass(frozen=True, eq=False)
class MetapathGraph:
    """Weighted directed graph; columns are unique and sorted within each row."""

    num_vertices: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray

    @property
    def num_edges(self) -> int:
        return int(self.indptr[-1])

    @property
    def src(self) -> np.ndarray:
        return np.repeat(np.arange(self.num_vertices, dtype=np.int64), np.diff(self.indptr))

    def with_weights(self, weights: np.ndarray) -> "MetapathGraph":
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != self.indices.shape:
            raise GraphError("weight array does not match edge structure")
        return MetapathGraph(self.num_vertices, self.indptr, self.indices, weights)

    def to_dict(self) -> dict[tuple[int, int], float]:
        return dict(zip(zip(self.src.tolist(), self.indices.tolist()), self.weights.tolist()))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.num_vertices, self.num_vertices))
        out[self.src, self.indices] = self.weights
        return out

    def edge_keys(self) -> np.ndarray:
        """``src * n + dst`` per edge; globally sorted by construction."""
        return self.src * self.num_vertices + self.indices

    def lookup(self, src: np.ndarray, dst: np.ndarray, default: float = 0.0) -> np.ndarray:
        keys = self.edge_keys()
        q = np.asarray(src, dtype=np.int64) * self.num_vertices + np.asarray(dst, dtype=np.int64)
        pos = np.searchsorted(keys, q)
        pos = np.minimum(pos, max(keys.size - 1, 0))
        hit = keys.size > 0
        found = (keys[pos] == q) if hit else np.zeros(q.shape, dtype=bool)
        return np.where(found, self.weights[pos] if hit else default, default)

    def same_structure(self, other: "MetapathGraph") -> bool:
        return (
            self.num_vertices == other.num_vertices
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def validate(self) -> None:
        n = self.num_vertices
        if self.indptr.shape != (n + 1,) or self.indptr[0] != 0 or np.any(np.diff(self.indptr) < 0):
            raise GraphError("malformed indptr")
        if self.indices.shape != (self.num_edges,) or self.weights.shape != (self.num_edges,):
            raise GraphError("edge arrays do not match indptr")
        if self.num_edges and (self.indices.min() < 0 or self.indices.max() >= n):
            raise GraphError("destination out of range")
        if np.any(np.diff(self.edge_keys()) <= 0):
            raise GraphError("duplicate or unsorted (src, dst) pairs")

    @classmethod
    def empty(cls, num_vertices: int) -> "MetapathGraph":
        return cls(
            num_vertices,
            np.zeros(num_vertices + 1, dtype=np.int64),
            np.zeros(0, dtype=np.int64),
            np.zeros(0),
        )

    @classmethod
    def from_coo(cls, num_vertices: int, src, dst, weights) -> "MetapathGraph":
        """Build from (possibly repeated) coordinates; duplicates are summed in input order."""
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= num_vertices):
            raise GraphError("vertex id out of range")
        keys = src * num_vertices + dst
        uniq, inv = np.unique(keys, return_inverse=True)
        w = np.bincount(inv.ravel(), weights=weights, minlength=uniq.size)
        rows = uniq // max(num_vertices, 1)
        indptr = counts_to_indptr(np.bincount(rows, minlength=num_vertices))
        return cls(num_vertices, indptr, uniq - rows * num_vertices, w)

    @classmethod
    def from_dict(cls, num_vertices: int, weights: Mapping[tuple[int, int], float]) -> "MetapathGraph":
        if not weights:
            return cls.empty(num_vertices)
        (src, dst), w = zip(*weights.keys()), list(weights.values())
        return cls.from_coo(num_vertices, src, dst, w)
