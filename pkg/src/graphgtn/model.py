"""Weighted GCN layer, dense layers, softmax cross-entropy and Adam, with manual backward passes."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from graphgtn import _kernels
from graphgtn.graph import MetapathGraph


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


@dataclass
class GCNCache:
    mg: MetapathGraph
    src: np.ndarray
    coef: np.ndarray
    deg: np.ndarray
    adj: sp.csr_matrix
    x: np.ndarray
    w: np.ndarray
    xw: np.ndarray
    pre: np.ndarray


def _normalized(mg: MetapathGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    src = mg.src
    deg = np.bincount(src, weights=mg.weights, minlength=mg.num_vertices)
    denom = deg[src]
    coef = np.divide(mg.weights, denom, out=np.zeros_like(mg.weights), where=denom != 0)
    return src, coef, deg


def gcn_layer(mg: MetapathGraph, x: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, GCNCache]:
    """``ReLU(agg @ w)`` with ``agg[v] = sum_(u->v) w_uv / deg_w(u) * x[u]``.

    ``deg_w(u)`` is u's total outgoing edge weight; a vertex whose outgoing
    weights sum to zero sends nothing.
    """
    if x.shape[0] != mg.num_vertices:
        raise ValueError(f"{x.shape[0]} feature rows for {mg.num_vertices} vertices")
    if x.shape[1] != w.shape[0]:
        raise ValueError(f"feature dim {x.shape[1]} != weight rows {w.shape[0]}")
    src, coef, deg = _normalized(mg)
    adj = sp.csr_matrix((coef, mg.indices, mg.indptr), shape=(mg.num_vertices,) * 2)
    xw = x @ w
    pre = np.asarray(adj.T @ xw)
    return relu(pre), GCNCache(mg, src, coef, deg, adj, x, w, xw, pre)


def gcn_forward(mg: MetapathGraph, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    return gcn_layer(mg, x, w)[0]


def gcn_backward(
    dout: np.ndarray, cache: GCNCache, input_grad: bool = False, edge_grad: bool = False
) -> tuple[np.ndarray, np.ndarray | None, np.ndarray | None]:
    """Returns (d weight, d input features, d metapath edge weights)."""
    dpre = dout * (cache.pre > 0)
    dxw = np.asarray(cache.adj @ dpre)
    dw = cache.x.T @ dxw
    dx = dxw @ cache.w.T if input_grad else None
    dedge = _edge_grad(dpre, cache) if edge_grad else None
    return dw, dx, dedge


def _edge_grad(dpre: np.ndarray, cache: GCNCache) -> np.ndarray:
    mg = cache.mg
    m = mg.num_edges
    dcoef = _kernels.edge_dots(mg.indptr, mg.indices, np.ascontiguousarray(dpre), np.ascontiguousarray(cache.xw))
    # quotient rule through deg_w(u) = sum of u's outgoing weights
    per_src = np.bincount(cache.src, weights=dcoef * cache.coef, minlength=mg.num_vertices)
    denom = cache.deg[cache.src]
    return np.divide(dcoef - per_src[cache.src], denom, out=np.zeros(m), where=denom != 0)


def dense_layer(x: np.ndarray, w: np.ndarray, activation: bool) -> np.ndarray:
    pre = x @ w
    return relu(pre) if activation else pre


def cross_entropy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy over ``mask`` rows; gradient is zero elsewhere."""
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise ValueError("empty mask")
    y = np.asarray(labels)[mask]
    if np.any(y < 0):
        raise ValueError("unlabeled vertex in mask")
    z = logits[mask]
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -logp[np.arange(mask.size), y].mean()
    grad = np.zeros_like(logits)
    p = np.exp(logp)
    p[np.arange(mask.size), y] -= 1.0
    grad[mask] = p / mask.size
    return float(loss), grad


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


@dataclass
class AdamState:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], opt: AdamState) -> AdamState:
    """Bias-corrected Adam, no weight decay; updates ``params`` in place."""
    for name, g in grads.items():
        if g.shape != params[name].shape:
            raise ValueError(f"gradient for {name!r} has shape {g.shape}, param {params[name].shape}")
    opt.step += 1
    t = opt.step
    for name, g in grads.items():
        m = opt.m.setdefault(name, np.zeros_like(params[name]))
        v = opt.v.setdefault(name, np.zeros_like(params[name]))
        m *= opt.beta1
        m += (1 - opt.beta1) * g
        v *= opt.beta2
        v += (1 - opt.beta2) * g * g
        mhat = m / (1 - opt.beta1**t)
        vhat = v / (1 - opt.beta2**t)
        params[name] -= opt.lr * mhat / (np.sqrt(vhat) + opt.eps)
    return opt
