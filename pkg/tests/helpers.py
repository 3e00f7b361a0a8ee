"""Independent reference computations shared by the tests."""
from collections import defaultdict

import numpy as np

from graphgtn.data import random_graph
from graphgtn.graph import HeteroGraph, add_self_edges
from graphgtn.scoring import ScoreParams, ScoreTable, materialize_softmax


def all_paths(g: HeteroGraph, length: int):
    """Every ``length``-edge path as (vertices, types), by plain recursion."""
    out = []

    def rec(verts, types):
        if len(types) == length:
            out.append((tuple(verts), tuple(types)))
            return
        for y, t in g.out_edges(verts[-1]):
            rec(verts + [y], types + [t])

    for v in range(g.num_vertices):
        rec([v], [])
    return out


def brute_metapath(g: HeteroGraph, s: np.ndarray, length: int, offset: int = 0):
    weights = defaultdict(float)
    for verts, types in all_paths(g, length):
        score = 1.0
        for i, t in enumerate(types):
            score *= s[offset + i, t]
        weights[(verts[0], verts[-1])] += score
    return dict(weights)


def brute_endpoint_counts(g: HeteroGraph, length: int):
    ends = defaultdict(set)
    for verts, _ in all_paths(g, length):
        ends[verts[0]].add(verts[-1])
    return np.array([len(ends[v]) for v in range(g.num_vertices)])


def central_diff(f, x: np.ndarray, h: float) -> np.ndarray:
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + h
        fp = f(x)
        x[idx] = orig - h
        fm = f(x)
        x[idx] = orig
        grad[idx] = (fp - fm) / (2 * h)
    return grad


def rel_err(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)
    return float(np.linalg.norm(a - b) / scale)


def random_instance(rng: np.random.Generator, n_max: int = 50, t_max: int = 4, density_max: float = 0.2,
                    self_edges: bool = False, l_max: int = 5):
    """A random typed graph and a softmax score table with ``l_max`` positions."""
    n = int(rng.integers(2, n_max + 1))
    num_types = int(rng.integers(1, t_max + 1))
    density = rng.uniform(0.0, density_max)
    m = int(rng.binomial(n * n, density))
    g = random_graph(n, m, num_types, int(rng.integers(1 << 31)))
    if self_edges:
        g = add_self_edges(g)
    table = materialize_softmax(ScoreParams(rng.normal(size=(l_max, g.num_edge_types))))
    return g, table


def random_table(rng: np.random.Generator, positions: int, types: int) -> ScoreTable:
    return ScoreTable(rng.uniform(0.1, 2.0, size=(positions, types)))
