"""GTN-style node classification: metapath graph -> GCN -> dense -> dense -> softmax."""
from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numba
import numpy as np

from graphgtn import model as nn
from graphgtn.graph import HeteroGraph, MetapathGraph, add_self_edges
from graphgtn.pathfinder import EnumStrategy, backward_scores, backward_split, generate_split, generate_vanilla
from graphgtn.scoring import ScoreParams, ScoreTable, init_score_params, materialize_softmax, softmax_backward
from graphgtn.walker import WalkSet, backward_sampled, generate_sampled, sample_walks

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class Mode(enum.Enum):
    GCN_BASELINE = "gcn"
    G_GTN_VANILLA = "ggtn-vanilla"
    G_GTN_SPLIT = "ggtn-split"
    W_GTN = "wgtn"


@dataclass
class RunConfig:
    mode: Mode = Mode.G_GTN_SPLIT
    transformer_layers: int = 3
    num_walks: int = 0
    hidden: int = 64
    epochs: int = 300
    lr: float = 0.01
    seed: int = 0
    eval_every: int = 5
    timeout_seconds: float = 28_800.0
    enum_strategy: EnumStrategy = EnumStrategy.LEVEL_BY_LEVEL
    freeze_walks: bool = False
    deterministic: bool = False
    self_edges: bool = True

    @property
    def metapath_length(self) -> int:
        # k transformer layers consider metapaths of up to k + 1 edges
        return self.transformer_layers + 1

    def validate(self) -> None:
        self.mode = Mode(self.mode)
        self.enum_strategy = EnumStrategy(self.enum_strategy)
        for name in ("transformer_layers", "hidden", "epochs", "eval_every"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.lr <= 0 or self.timeout_seconds <= 0:
            raise ConfigError("lr and timeout_seconds must be positive")
        if self.num_walks < 0:
            raise ConfigError("num_walks must be >= 0")
        if self.mode is Mode.W_GTN:
            if self.num_walks < 1:
                raise ConfigError("wgtn mode needs num_walks >= 1")
            if not self.self_edges:
                raise ConfigError("wgtn mode samples over self-edge augmented graphs")
        elif self.num_walks:
            raise ConfigError(f"num_walks is only meaningful in wgtn mode, not {self.mode.value}")
        if self.freeze_walks and self.mode is not Mode.W_GTN:
            raise ConfigError("freeze_walks requires wgtn mode")


@dataclass
class ModelState:
    params: dict[str, np.ndarray]
    adam: nn.AdamState

    @property
    def score_params(self) -> ScoreParams | None:
        raw = self.params.get("score_raw")
        return None if raw is None else ScoreParams(raw)


def init_state(
    config: RunConfig, feature_dim: int, num_classes: int, num_types: int, learn_scores: bool = True
) -> ModelState:
    rng = np.random.default_rng(config.seed)
    h = config.hidden
    params = {"w_gcn": nn.glorot(rng, feature_dim, h)}
    if config.mode is Mode.GCN_BASELINE:
        params["w_gcn2"] = nn.glorot(rng, h, h)
    else:
        params["w_dense1"] = nn.glorot(rng, h, h)
    params["w_dense2"] = nn.glorot(rng, h, num_classes)
    if config.mode is not Mode.GCN_BASELINE and learn_scores:
        params["score_raw"] = init_score_params(config.metapath_length, num_types, rng).raw
    return ModelState(params, nn.AdamState(lr=config.lr))


@dataclass
class ForwardCache:
    gcn: list[nn.GCNCache]
    hidden: np.ndarray
    dense_pre: np.ndarray | None = None


def model_forward(mg: MetapathGraph, x: np.ndarray, params: dict[str, np.ndarray]) -> tuple[np.ndarray, ForwardCache]:
    """Logits for every vertex; softmax is left to the loss.

    GTN: ``ReLU(GCN(x)) -> ReLU(dense1) -> dense2``.
    Baseline (``w_gcn2`` present): ``GCN -> GCN -> dense2``.
    """
    h1, c1 = nn.gcn_layer(mg, x, params["w_gcn"])
    if "w_gcn2" in params:
        h2, c2 = nn.gcn_layer(mg, h1, params["w_gcn2"])
        return h2 @ params["w_dense2"], ForwardCache([c1, c2], h2)
    pre = h1 @ params["w_dense1"]
    h2 = nn.relu(pre)
    return h2 @ params["w_dense2"], ForwardCache([c1], h2, pre)


def model_backward(
    dlogits: np.ndarray, cache: ForwardCache, params: dict[str, np.ndarray], edge_grad: bool
) -> tuple[dict[str, np.ndarray], np.ndarray | None]:
    grads = {"w_dense2": cache.hidden.T @ dlogits}
    dh2 = dlogits @ params["w_dense2"].T
    if "w_gcn2" in params:
        grads["w_gcn2"], dh1, _ = nn.gcn_backward(dh2, cache.gcn[1], input_grad=True)
        grads["w_gcn"], _, _ = nn.gcn_backward(dh1, cache.gcn[0])
        return grads, None
    dpre = dh2 * (cache.dense_pre > 0)
    h1 = nn.relu(cache.gcn[0].pre)
    grads["w_dense1"] = h1.T @ dpre
    dh1 = dpre @ params["w_dense1"].T
    grads["w_gcn"], _, dedge = nn.gcn_backward(dh1, cache.gcn[0], edge_grad=edge_grad)
    return grads, dedge


def walk_seed(seed: int, epoch: int) -> int:
    return int(np.random.SeedSequence([seed, epoch]).generate_state(1, np.uint64)[0])


def unit_weight_graph(g: HeteroGraph) -> MetapathGraph:
    return MetapathGraph.from_coo(g.num_vertices, g.src, g.dst, np.ones(g.num_edges))


@dataclass
class Pipeline:
    """Everything needed to evaluate the loss and its gradient for one epoch.

    ``graph`` is the graph actually traversed (self-edges already added when
    configured). ``fixed_table`` replaces the learnable scores when given.
    """

    graph: HeteroGraph
    features: np.ndarray
    labels: np.ndarray
    train_idx: np.ndarray
    config: RunConfig
    fixed_table: ScoreTable | None = None
    _baseline_mg: MetapathGraph | None = field(default=None, repr=False)

    def table(self, params: dict[str, np.ndarray]) -> ScoreTable:
        if self.fixed_table is not None:
            return self.fixed_table
        return materialize_softmax(ScoreParams(params["score_raw"]))

    def sample(self, params: dict[str, np.ndarray], epoch: int) -> WalkSet:
        cfg = self.config
        return sample_walks(
            self.graph, self.table(params), cfg.metapath_length, cfg.num_walks, walk_seed(cfg.seed, epoch)
        )

    def metapath(
        self, params: dict[str, np.ndarray], walks: WalkSet | None = None
    ) -> tuple[MetapathGraph, Callable[[MetapathGraph], np.ndarray] | None]:
        """Metapath graph plus a function mapping d/dMG to d/d(score table)."""
        cfg = self.config
        g, l = self.graph, cfg.metapath_length
        if cfg.mode is Mode.GCN_BASELINE:
            if self._baseline_mg is None:
                self._baseline_mg = unit_weight_graph(g)
            return self._baseline_mg, None
        table = self.table(params)
        if cfg.mode is Mode.G_GTN_VANILLA:
            mg = generate_vanilla(g, table, l, cfg.enum_strategy)
            return mg, lambda gm: backward_scores(g, table, l, gm, cfg.enum_strategy)
        if cfg.mode is Mode.G_GTN_SPLIT:
            split = generate_split(g, table, l, cfg.enum_strategy)
            return split.mg, lambda gm: backward_split(g, table, split, gm, cfg.enum_strategy)
        if walks is None:
            raise ConfigError("wgtn mode needs walks")
        mg = generate_sampled(g, table, walks, validate=False)
        return mg, lambda gm: backward_sampled(table, walks, gm)

    def loss_and_grads(
        self, params: dict[str, np.ndarray], walks: WalkSet | None = None
    ) -> tuple[float, dict[str, np.ndarray], np.ndarray, MetapathGraph]:
        mg, score_backward = self.metapath(params, walks)
        logits, cache = model_forward(mg, self.features, params)
        loss, dlogits = nn.cross_entropy(logits, self.labels, self.train_idx)
        learn = "score_raw" in params
        grads, dedge = model_backward(dlogits, cache, params, edge_grad=learn and score_backward is not None)
        if learn and score_backward is not None:
            grad_table = score_backward(mg.with_weights(dedge))
            grads["score_raw"] = softmax_backward(ScoreParams(params["score_raw"]), grad_table)
        return loss, grads, logits, mg

    def loss(self, params: dict[str, np.ndarray], walks: WalkSet | None = None) -> float:
        mg, _ = self.metapath(params, walks)
        logits, _ = model_forward(mg, self.features, params)
        return nn.cross_entropy(logits, self.labels, self.train_idx)[0]


@dataclass
class EpochMetrics:
    epoch: int
    loss: float
    seconds: float
    train_accuracy: float
    test_accuracy: float | None = None
    val_accuracy: float | None = None


@dataclass
class TrainResult:
    epochs: list[EpochMetrics]
    timed_out: bool
    state: ModelState
    first_mg: MetapathGraph | None
    vertex_count: int

    @property
    def eval_accuracies(self) -> list[tuple[int, float]]:
        return [(m.epoch, m.test_accuracy) for m in self.epochs if m.test_accuracy is not None]

    @property
    def peak_accuracy(self) -> float | None:
        accs = [a for _, a in self.eval_accuracies]
        return max(accs) if accs else None

    @property
    def avg_epoch_seconds(self) -> float:
        return float(np.mean([m.seconds for m in self.epochs])) if self.epochs else 0.0

    @property
    def losses(self) -> list[float]:
        return [m.loss for m in self.epochs]


def accuracy(logits: np.ndarray, labels: np.ndarray, idx: np.ndarray) -> float:
    if len(idx) == 0:
        return float("nan")
    return float(np.mean(np.argmax(logits[idx], axis=1) == labels[idx]))


def make_pipeline(
    graph: HeteroGraph,
    features: np.ndarray,
    labels: np.ndarray,
    train_idx: np.ndarray,
    config: RunConfig,
    score_table: ScoreTable | None = None,
) -> Pipeline:
    config.validate()
    g = add_self_edges(graph) if config.self_edges and graph.self_type is None else graph
    if score_table is not None and score_table.num_types != g.num_edge_types:
        raise ConfigError(f"fixed score table has {score_table.num_types} types, graph has {g.num_edge_types}")
    return Pipeline(g, np.asarray(features, dtype=np.float64), np.asarray(labels), np.asarray(train_idx), config, score_table)


def train(
    graph: HeteroGraph,
    features: np.ndarray,
    labels: np.ndarray,
    masks,
    config: RunConfig,
    *,
    score_table: ScoreTable | None = None,
    walks: WalkSet | None = None,
    on_epoch: Callable[[EpochMetrics], None] | None = None,
) -> TrainResult:
    """Train for ``config.epochs`` epochs or until the wall-clock budget runs out.

    ``walks`` (W-GTN only) pins the walk set for every epoch; otherwise walks
    are resampled each epoch with the current scores, or sampled once when
    ``config.freeze_walks`` is set.
    """
    pipe = make_pipeline(graph, features, labels, masks.train, config, score_table)
    labels = pipe.labels
    num_classes = int(labels.max()) + 1
    state = init_state(config, pipe.features.shape[1], num_classes, pipe.graph.num_edge_types,
                       learn_scores=score_table is None)
    pinned = walks is not None
    threads = numba.get_num_threads()
    if config.deterministic:
        numba.set_num_threads(1)
    try:
        return _train_loop(pipe, masks, config, state, walks, pinned, on_epoch)
    finally:
        numba.set_num_threads(threads)


def _train_loop(pipe, masks, config, state, walks, pinned, on_epoch) -> TrainResult:
    labels = pipe.labels
    history: list[EpochMetrics] = []
    first_mg = None
    timed_out = False
    started = time.perf_counter()
    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        if config.mode is Mode.W_GTN and not pinned and (walks is None or not config.freeze_walks):
            walks = pipe.sample(state.params, epoch)
        loss, grads, logits, mg = pipe.loss_and_grads(state.params, walks)
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite loss at epoch {epoch}")
        nn.adam_step(state.params, grads, state.adam)
        seconds = time.perf_counter() - t0
        if first_mg is None:
            first_mg = mg
        metrics = EpochMetrics(epoch, loss, seconds, accuracy(logits, labels, masks.train))
        if (epoch + 1) % config.eval_every == 0 or epoch == config.epochs - 1:
            if len(masks.test):
                metrics.test_accuracy = accuracy(logits, labels, masks.test)
            if len(masks.val):
                metrics.val_accuracy = accuracy(logits, labels, masks.val)
        history.append(metrics)
        if on_epoch is not None:
            on_epoch(metrics)
        if time.perf_counter() - started > config.timeout_seconds:
            log.warning("wall-clock budget of %.0fs exceeded after epoch %d", config.timeout_seconds, epoch)
            timed_out = True
            break
    return TrainResult(history, timed_out, state, first_mg, pipe.graph.num_vertices)
