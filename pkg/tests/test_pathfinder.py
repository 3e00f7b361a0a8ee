import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphgtn.data import random_graph
from graphgtn.graph import GraphError, MetapathGraph, add_self_edges, build_graph
from graphgtn.oracle import dense_metapath
from graphgtn.pathfinder import (
    EnumStrategy,
    backward_scores,
    backward_split,
    compose_backward,
    compose_metapath_graphs,
    generate_split,
    generate_vanilla,
    split_lengths,
)
from graphgtn.scoring import ScoreParams, materialize_softmax, softmax_backward

from conftest import A, B, C, D, DASHED, E, SOLID
from helpers import brute_metapath, central_diff, random_instance, random_table, rel_err

STRATEGIES = list(EnumStrategy)


def assert_same_mg(a: MetapathGraph, b: MetapathGraph, rtol: float):
    assert a.same_structure(b)
    np.testing.assert_allclose(a.weights, b.weights, rtol=rtol, atol=0)


def assert_mg_equals_dict(mg: MetapathGraph, expected: dict, rtol: float = 1e-12):
    got = mg.to_dict()
    assert set(got) == set(expected)
    for k, v in expected.items():
        assert got[k] == pytest.approx(v, rel=rtol, abs=1e-300)


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_fig1_vanilla(fig1_graph, fig1_table, strategy):
    mg = generate_vanilla(fig1_graph, fig1_table, 2, strategy)
    assert mg.to_dict() == {(A, C): 7.0, (A, E): 2.0}


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_fig1_split_halves(fig1_graph, fig1_table, strategy):
    res = generate_split(fig1_graph, fig1_table, 2, strategy)
    # position 1 scores for the first half, position 2 scores for the second
    assert res.mg1.to_dict() == {(A, B): 2.0, (A, D): 1.0, (B, C): 1.0, (D, C): 2.0, (D, E): 1.0}
    assert res.mg2.to_dict() == {(A, B): 3.0, (A, D): 2.0, (B, C): 2.0, (D, C): 3.0, (D, E): 2.0}
    assert res.mg.to_dict() == {(A, C): 7.0, (A, E): 2.0}
    assert (res.first_len, res.second_len) == (1, 1)


def test_length_one_sums_parallel_edges():
    g = build_graph([(0, 1, 0), (0, 1, 1), (1, 2, 1)], 3, 2)
    table = random_table(np.random.default_rng(0), 1, 2)
    mg = generate_vanilla(g, table, 1)
    s = table.s
    assert_mg_equals_dict(mg, {(0, 1): s[0, 0] + s[0, 1], (1, 2): s[0, 1]})


def test_length_exceeding_table(fig1_graph, fig1_table):
    with pytest.raises(GraphError, match="exceeds"):
        generate_vanilla(fig1_graph, fig1_table, 3)


def test_zero_length(fig1_graph, fig1_table):
    with pytest.raises(GraphError):
        generate_vanilla(fig1_graph, fig1_table, 0)


def test_split_needs_two(fig1_graph, fig1_table):
    with pytest.raises(GraphError):
        generate_split(fig1_graph, fig1_table, 1)


def test_split_lengths():
    assert split_lengths(2) == (1, 1)
    assert split_lengths(5) == (3, 2)
    assert split_lengths(6) == (3, 3)


def test_single_edge_with_self_loops_split_equals_vanilla():
    g = add_self_edges(build_graph([(0, 1, 0)], 2, 1))
    table = random_table(np.random.default_rng(1), 2, 2)
    van = generate_vanilla(g, table, 2)
    assert_same_mg(generate_split(g, table, 2).mg, van, 1e-12)
    s = table.s
    # 0 -> 1 via (edge, self) or (self, edge)
    assert van.to_dict()[(0, 1)] == pytest.approx(s[0, 0] * s[1, 1] + s[0, 1] * s[1, 0], rel=1e-14)


def test_random_vanilla_matches_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(10):
        g, table = random_instance(rng, n_max=15, density_max=0.25, self_edges=bool(rng.integers(2)), l_max=4)
        l = int(rng.integers(1, 5))
        assert_mg_equals_dict(generate_vanilla(g, table, l), brute_metapath(g, table.s, l), rtol=1e-12)


def test_random_n30_l3_equals_dense_oracle():
    g = random_graph(30, 90, 3, 11)
    table = random_table(np.random.default_rng(2), 3, 3)
    mg = generate_vanilla(g, table, 3)
    dense = dense_metapath(g, table, 3)
    assert np.array_equal(mg.to_dense() != 0, dense != 0)
    np.testing.assert_allclose(mg.to_dense(), dense, rtol=1e-10, atol=0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 5), st.booleans())
def test_strategy_equivalence(seed, l, self_edges):
    rng = np.random.default_rng(seed)
    g, table = random_instance(rng, n_max=100, density_max=0.04, self_edges=self_edges, l_max=5)
    dfs = generate_vanilla(g, table, l, EnumStrategy.DEPTH_FIRST)
    lvl = generate_vanilla(g, table, l, EnumStrategy.LEVEL_BY_LEVEL)
    assert_same_mg(dfs, lvl, 1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 5), st.booleans())
def test_split_equivalence(seed, l, self_edges):
    rng = np.random.default_rng(seed)
    g, table = random_instance(rng, self_edges=self_edges)
    van = generate_vanilla(g, table, l)
    res = generate_split(g, table, l, EnumStrategy.DEPTH_FIRST)
    assert_same_mg(res.mg, van, 1e-9)
    assert res.first_len + res.second_len == l


def test_compose_identity():
    rng = np.random.default_rng(3)
    g, table = random_instance(rng, n_max=20)
    mg1 = generate_vanilla(g, table, 2)
    n = g.num_vertices
    eye = MetapathGraph.from_coo(n, np.arange(n), np.arange(n), np.ones(n))
    assert_same_mg(compose_metapath_graphs(mg1, eye), mg1, 0)


def test_compose_matches_dense_product():
    rng = np.random.default_rng(4)
    for _ in range(5):
        m1 = (rng.random((20, 20)) < 0.15) * rng.uniform(0.1, 2, (20, 20))
        m2 = (rng.random((20, 20)) < 0.15) * rng.uniform(0.1, 2, (20, 20))
        mg1 = MetapathGraph.from_coo(20, *np.nonzero(m1), m1[np.nonzero(m1)])
        mg2 = MetapathGraph.from_coo(20, *np.nonzero(m2), m2[np.nonzero(m2)])
        out = compose_metapath_graphs(mg1, mg2)
        expected = m1 @ m2
        assert np.array_equal(out.to_dense() != 0, expected != 0)
        np.testing.assert_allclose(out.to_dense(), expected, rtol=1e-12)


def test_compose_vertex_mismatch():
    with pytest.raises(GraphError, match="vertex counts differ"):
        compose_metapath_graphs(MetapathGraph.empty(2), MetapathGraph.empty(3))


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_backward_zero(fig1_graph, fig1_table, strategy):
    mg = generate_vanilla(fig1_graph, fig1_table, 2)
    grad = backward_scores(fig1_graph, fig1_table, 2, mg.with_weights(np.zeros(mg.num_edges)), strategy)
    assert np.all(grad == 0)


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_backward_fig1_by_hand(fig1_graph, fig1_table, strategy):
    grad_mg = MetapathGraph.from_dict(5, {(A, C): 1.0})
    grad = backward_scores(fig1_graph, fig1_table, 2, grad_mg, strategy)
    # path A,B,C (solid, dashed) and path A,D,C (dashed, solid)
    assert grad[0, SOLID] == 2.0 and grad[0, DASHED] == 3.0
    assert grad[1, DASHED] == 2.0 and grad[1, SOLID] == 1.0
    split = generate_split(fig1_graph, fig1_table, 2, strategy)
    np.testing.assert_array_equal(backward_split(fig1_graph, fig1_table, split, grad_mg, strategy), grad)


def test_compose_backward_bilinear():
    rng = np.random.default_rng(5)
    dense = [(rng.random((8, 8)) < 0.3) * rng.uniform(0.5, 2, (8, 8)) for _ in range(2)]
    mg1, mg2 = (MetapathGraph.from_coo(8, *np.nonzero(m), m[np.nonzero(m)]) for m in dense)
    out = compose_metapath_graphs(mg1, mg2)
    up = rng.normal(size=out.num_edges)
    ga, gb = compose_backward(mg1, mg2, out.with_weights(up))
    gd = out.with_weights(up).to_dense()
    # d/dA <G, A B> = G B^T, d/dB = A^T G, restricted to the stored entries
    np.testing.assert_allclose(ga, (gd @ dense[1].T)[mg1.src, mg1.indices], rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(gb, (dense[0].T @ gd)[mg2.src, mg2.indices], rtol=1e-12, atol=1e-14)


def _fd_check(l, strategy, split, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(20, 50, 3, seed)
    raw = rng.normal(size=(l, 3))
    mg0 = generate_vanilla(g, materialize_softmax(ScoreParams(raw)), l)
    upstream = mg0.with_weights(rng.normal(size=mg0.num_edges))

    def objective(r):
        mg = generate_vanilla(g, materialize_softmax(ScoreParams(r)), l)
        return float(np.dot(mg.weights, upstream.weights))

    table = materialize_softmax(ScoreParams(raw))
    if split:
        gs = backward_split(g, table, generate_split(g, table, l, strategy), upstream, strategy)
    else:
        gs = backward_scores(g, table, l, upstream, strategy)
    analytic = softmax_backward(ScoreParams(raw), gs)
    assert rel_err(analytic, central_diff(objective, raw, 1e-6)) < 1e-5


@pytest.mark.parametrize("strategy", STRATEGIES)
@pytest.mark.parametrize("split", [False, True])
def test_backward_matches_finite_differences(strategy, split):
    _fd_check(3, strategy, split, 0)


@pytest.mark.parametrize("l", [2, 4, 5])
def test_backward_split_finite_differences_other_lengths(l):
    _fd_check(l, EnumStrategy.LEVEL_BY_LEVEL, True, l)


def test_backward_strategies_agree():
    rng = np.random.default_rng(9)
    g, table = random_instance(rng, n_max=40, density_max=0.1, self_edges=True)
    mg = generate_vanilla(g, table, 4)
    up = mg.with_weights(rng.normal(size=mg.num_edges))
    a = backward_scores(g, table, 4, up, EnumStrategy.DEPTH_FIRST)
    b = backward_scores(g, table, 4, up, EnumStrategy.LEVEL_BY_LEVEL)
    np.testing.assert_allclose(a, b, rtol=1e-10)


def test_thread_count_does_not_change_result():
    import numba

    rng = np.random.default_rng(10)
    g, table = random_instance(rng, n_max=50, density_max=0.2, self_edges=True)
    before = numba.get_num_threads()
    try:
        numba.set_num_threads(1)
        one = generate_vanilla(g, table, 4)
        numba.set_num_threads(min(4, numba.config.NUMBA_NUM_THREADS))
        many = generate_vanilla(g, table, 4)
    finally:
        numba.set_num_threads(before)
    assert one.same_structure(many)
    assert np.array_equal(one.weights, many.weights)
