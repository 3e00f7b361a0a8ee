"""Epoch-time measurements shared by the experiment scripts and the acceptance suite."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from graphgtn.data import generate_synthetic, random_graph
from graphgtn.graph import HeteroGraph, add_self_edges
from graphgtn.model import glorot
from graphgtn.pathfinder import EnumStrategy
from graphgtn.scoring import ScoreParams, init_score_params, materialize_softmax
from graphgtn.train import Mode, RunConfig, train


@dataclass
class BenchConfig:
    num_vertices: int = 2000
    num_edges: int = 12000
    num_types: int = 4
    layers: int = 3
    epochs: int = 4
    hidden: int = 64
    seed: int = 0


def path_count(g: HeteroGraph, length: int) -> int:
    """Number of ``length``-edge paths, counting parallel edges separately."""
    adj = sp.csr_matrix((np.ones(g.num_edges), g.dst, g.indptr), shape=(g.num_vertices,) * 2)
    c = np.ones(g.num_vertices)
    for _ in range(length):
        c = adj @ c
    return int(round(c.sum()))


def steady_epoch_seconds(result) -> float:
    # the first epoch pays for allocation warmup
    secs = [m.seconds for m in result.epochs[1:]] or [m.seconds for m in result.epochs]
    return float(np.mean(secs))


def time_mode(bundle, cfg: BenchConfig, mode: Mode, num_walks: int = 0,
              strategy: EnumStrategy = EnumStrategy.LEVEL_BY_LEVEL) -> float:
    run = RunConfig(mode=mode, transformer_layers=cfg.layers, num_walks=num_walks, hidden=cfg.hidden,
                    epochs=cfg.epochs, seed=cfg.seed, eval_every=cfg.epochs, enum_strategy=strategy)
    res = train(bundle.graph, bundle.features, bundle.labels, bundle.masks, run)
    return steady_epoch_seconds(res)


def dense_epoch_seconds(g: HeteroGraph, features: np.ndarray, cfg: BenchConfig, repeats: int = 2) -> float:
    """One training epoch of the dense matrix-chain formulation, using BLAS.

    Forward: one n x n score-scaled adjacency per position, l - 1 dense
    products and a dense GCN aggregation. Backward: suffix products and the
    per-position gradients ``prefix^T G suffix^T`` reduced onto the score
    table. The dense layers are left out; they cost the same in every mode.
    """
    ga = add_self_edges(g) if g.self_type is None else g
    l = cfg.layers + 1
    rng = np.random.default_rng(cfg.seed)
    table = materialize_softmax(ScoreParams(init_score_params(l, ga.num_edge_types, rng).raw))
    w = glorot(rng, features.shape[1], cfg.hidden)
    n = ga.num_vertices
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        mats = []
        for pos in range(l):
            a = np.zeros((n, n))
            np.add.at(a, (ga.src, ga.dst), table.s[pos, ga.etype])
            mats.append(a)
        prefix = [mats[0]]
        for a in mats[1:]:
            prefix.append(prefix[-1] @ a)
        mg = prefix[-1]
        deg = mg.sum(axis=1, keepdims=True)
        norm = np.divide(mg, deg, out=np.zeros_like(mg), where=deg != 0)
        xw = features @ w
        pre = norm.T @ xw
        dpre = rng.normal(size=pre.shape) * (pre > 0)
        grad_mg = xw @ dpre.T
        suffix = [mats[-1]]
        for a in reversed(mats[1:-1]):
            suffix.append(a @ suffix[-1])
        suffix.reverse()
        grad_table = np.zeros_like(table.s)
        for k in range(l):
            gk = grad_mg
            if k > 0:
                gk = prefix[k - 1].T @ gk
            if k < l - 1:
                gk = gk @ suffix[k].T
            np.add.at(grad_table[k], ga.etype, gk[ga.src, ga.dst])
        best = min(best, time.perf_counter() - t0)
    return best


def relative_epoch_times(cfg: BenchConfig, num_walks: int = 50) -> dict:
    g = random_graph(cfg.num_vertices, cfg.num_edges, cfg.num_types, cfg.seed)
    bundle = generate_synthetic(g, cfg.seed)
    l = cfg.layers + 1
    times = {
        "paths": path_count(add_self_edges(g), l),
        f"wgtn-{num_walks}": time_mode(bundle, cfg, Mode.W_GTN, num_walks),
        "ggtn-split": time_mode(bundle, cfg, Mode.G_GTN_SPLIT),
        "ggtn-vanilla": time_mode(bundle, cfg, Mode.G_GTN_VANILLA),
        "ggtn-vanilla-dfs": time_mode(bundle, cfg, Mode.G_GTN_VANILLA, strategy=EnumStrategy.DEPTH_FIRST),
        "ggtn-split-dfs": time_mode(bundle, cfg, Mode.G_GTN_SPLIT, strategy=EnumStrategy.DEPTH_FIRST),
        "dense": dense_epoch_seconds(g, bundle.features, cfg),
    }
    return times


def scaling_epoch_times(num_vertices: int, num_edges: int, lengths, walk_counts, epochs: int = 5,
                        num_types: int = 4, seed: int = 0, hidden: int = 64) -> dict:
    """Average epoch seconds of W-GTN for each (l, num_walks)."""
    warm = generate_synthetic(random_graph(50, 200, num_types, seed), seed)
    train(warm.graph, warm.features, warm.labels, warm.masks,
          RunConfig(mode=Mode.W_GTN, transformer_layers=1, num_walks=2, hidden=8, epochs=1))
    g = random_graph(num_vertices, num_edges, num_types, seed)
    bundle = generate_synthetic(g, seed)
    out = {}
    for l in lengths:
        for nw in walk_counts:
            run = RunConfig(mode=Mode.W_GTN, transformer_layers=l - 1, num_walks=nw, hidden=hidden,
                            epochs=epochs, seed=seed, eval_every=epochs)
            res = train(bundle.graph, bundle.features, bundle.labels, bundle.masks, run)
            out[(l, nw)] = res.avg_epoch_seconds
    return out
