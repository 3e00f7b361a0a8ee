"""Dataset directories, synthetic metadata, and generated benchmark graphs.

A dataset directory holds::

    manifest.json   {"num_vertices", "num_edge_types", "num_classes", "feature_dim",
                     optional "vertex_names", "edge_type_names", "class_names",
                     "self_edges" (default true)}
    edges.tsv       src<TAB>dst<TAB>type_id, directed
    features.tsv    one row per vertex, space-separated (optional)
    labels.tsv      vertex<TAB>class_id, labeled vertices only (optional)
    splits.tsv      vertex<TAB>train|val|test (optional)
    score_table.tsv fixed score table, one row per position (optional)

Vertex columns hold names from ``vertex_names`` when it is present, dense
integer ids otherwise.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from graphgtn.graph import HeteroGraph, build_graph
from graphgtn.scoring import ScoreTable


class DatasetError(Exception):
    pass


class MissingFileError(DatasetError):
    pass


class MalformedLineError(DatasetError):
    def __init__(self, path: Path, lineno: int, msg: str):
        super().__init__(f"{path.name}:{lineno}: {msg}")
        self.path = path
        self.lineno = lineno


class InconsistentDatasetError(DatasetError):
    pass


SPLIT_NAMES = ("train", "val", "test")


@dataclass
class SplitMasks:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def validate(self, num_vertices: int) -> None:
        sets = [set(self.train.tolist()), set(self.val.tolist()), set(self.test.tolist())]
        if sets[0] & sets[1] or sets[0] & sets[2] or sets[1] & sets[2]:
            raise InconsistentDatasetError("train/val/test splits overlap")
        for idx in (self.train, self.val, self.test):
            if idx.size and (idx.min() < 0 or idx.max() >= num_vertices):
                raise InconsistentDatasetError("split vertex out of range")


@dataclass
class DatasetBundle:
    graph: HeteroGraph
    features: np.ndarray | None
    labels: np.ndarray
    masks: SplitMasks
    num_classes: int
    vertex_names: list[str] | None = None
    edge_type_names: list[str] | None = None
    class_names: list[str] | None = None
    self_edges: bool = True
    score_table: ScoreTable | None = None
    extra: dict = field(default_factory=dict)

    @property
    def num_vertices(self) -> int:
        return self.graph.num_vertices

    def vertex_name(self, v: int) -> str:
        return self.vertex_names[v] if self.vertex_names else str(v)

    def validate(self) -> None:
        n = self.graph.num_vertices
        if self.features is not None and self.features.shape[0] != n:
            raise InconsistentDatasetError(f"{self.features.shape[0]} feature rows for {n} vertices")
        if self.labels.shape != (n,):
            raise InconsistentDatasetError("label array must have one entry per vertex")
        self.masks.validate(n)
        for idx in (self.masks.train, self.masks.val, self.masks.test):
            if np.any(self.labels[idx] < 0):
                raise InconsistentDatasetError("split contains an unlabeled vertex")
        if np.any(self.labels >= self.num_classes):
            raise InconsistentDatasetError("class id exceeds num_classes")

    def equals(self, other: "DatasetBundle") -> bool:
        a, b = self.graph, other.graph
        same_graph = (
            a.num_vertices == b.num_vertices
            and a.num_edge_types == b.num_edge_types
            and np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.dst, b.dst)
            and np.array_equal(a.etype, b.etype)
        )
        same_features = (self.features is None and other.features is None) or (
            self.features is not None and other.features is not None and np.array_equal(self.features, other.features)
        )
        same_table = (self.score_table is None and other.score_table is None) or (
            self.score_table is not None
            and other.score_table is not None
            and np.array_equal(self.score_table.s, other.score_table.s)
        )
        return (
            same_graph
            and same_features
            and same_table
            and np.array_equal(self.labels, other.labels)
            and all(np.array_equal(getattr(self.masks, k), getattr(other.masks, k)) for k in SPLIT_NAMES)
            and self.num_classes == other.num_classes
            and self.vertex_names == other.vertex_names
            and self.edge_type_names == other.edge_type_names
            and self.class_names == other.class_names
            and self.self_edges == other.self_edges
        )


def _rows(path: Path):
    with path.open() as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if line.strip() and not line.startswith("#"):
                yield lineno, line


def load_dataset(directory: str | Path) -> DatasetBundle:
    d = Path(directory)
    manifest_path = d / "manifest.json"
    if not d.is_dir():
        raise MissingFileError(f"dataset directory {d} does not exist")
    if not manifest_path.exists():
        raise MissingFileError(f"{manifest_path} not found")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise MalformedLineError(manifest_path, e.lineno, e.msg) from None
    for key in ("num_vertices", "num_edge_types", "num_classes", "feature_dim"):
        if not isinstance(manifest.get(key), int):
            raise InconsistentDatasetError(f"manifest.json: {key!r} must be an integer")
    n = manifest["num_vertices"]
    num_types = manifest["num_edge_types"]
    names = manifest.get("vertex_names")
    if names is not None and len(names) != n:
        raise InconsistentDatasetError(f"{len(names)} vertex_names for {n} vertices")
    ids = {name: i for i, name in enumerate(names)} if names else None

    def vertex(token: str, path: Path, lineno: int) -> int:
        if ids is not None:
            if token not in ids:
                raise MalformedLineError(path, lineno, f"undeclared vertex {token!r}")
            return ids[token]
        try:
            v = int(token)
        except ValueError:
            raise MalformedLineError(path, lineno, f"vertex id {token!r} is not an integer") from None
        if not 0 <= v < n:
            raise MalformedLineError(path, lineno, f"undeclared vertex {v}")
        return v

    edges_path = d / "edges.tsv"
    if not edges_path.exists():
        raise MissingFileError(f"{edges_path} not found")
    edges = []
    for lineno, line in _rows(edges_path):
        parts = line.split("\t")
        if len(parts) != 3:
            raise MalformedLineError(edges_path, lineno, f"expected 3 tab-separated fields, got {len(parts)}")
        src = vertex(parts[0], edges_path, lineno)
        dst = vertex(parts[1], edges_path, lineno)
        try:
            t = int(parts[2])
        except ValueError:
            raise MalformedLineError(edges_path, lineno, f"edge type {parts[2]!r} is not an integer") from None
        if not 0 <= t < num_types:
            raise MalformedLineError(edges_path, lineno, f"edge type {t} out of range")
        edges.append((src, dst, t))
    graph = build_graph(edges, n, num_types)

    features = None
    feat_path = d / "features.tsv"
    if feat_path.exists():
        dim = manifest["feature_dim"]
        rows = []
        for lineno, line in _rows(feat_path):
            try:
                row = [float(x) for x in line.split()]
            except ValueError:
                raise MalformedLineError(feat_path, lineno, "non-numeric feature") from None
            if len(row) != dim:
                raise MalformedLineError(feat_path, lineno, f"expected {dim} features, got {len(row)}")
            rows.append(row)
        if len(rows) != n:
            raise InconsistentDatasetError(f"features.tsv has {len(rows)} rows for {n} vertices")
        features = np.array(rows, dtype=np.float64).reshape(n, dim)

    labels = np.full(n, -1, dtype=np.int64)
    labels_path = d / "labels.tsv"
    if labels_path.exists():
        for lineno, line in _rows(labels_path):
            parts = line.split("\t")
            if len(parts) != 2:
                raise MalformedLineError(labels_path, lineno, "expected vertex<TAB>class")
            v = vertex(parts[0], labels_path, lineno)
            try:
                c = int(parts[1])
            except ValueError:
                raise MalformedLineError(labels_path, lineno, f"class {parts[1]!r} is not an integer") from None
            if not 0 <= c < manifest["num_classes"]:
                raise MalformedLineError(labels_path, lineno, f"class {c} out of range")
            labels[v] = c

    split_lists: dict[str, list[int]] = {k: [] for k in SPLIT_NAMES}
    splits_path = d / "splits.tsv"
    if splits_path.exists():
        for lineno, line in _rows(splits_path):
            parts = line.split("\t")
            if len(parts) != 2 or parts[1] not in split_lists:
                raise MalformedLineError(splits_path, lineno, "expected vertex<TAB>train|val|test")
            split_lists[parts[1]].append(vertex(parts[0], splits_path, lineno))
    masks = SplitMasks(*(np.array(split_lists[k], dtype=np.int64) for k in SPLIT_NAMES))

    table = None
    table_path = d / "score_table.tsv"
    if table_path.exists():
        rows = []
        for lineno, line in _rows(table_path):
            try:
                rows.append([float(x) for x in line.split()])
            except ValueError:
                raise MalformedLineError(table_path, lineno, "non-numeric score") from None
        try:
            table = ScoreTable.from_rows(rows)
        except ValueError as e:
            raise InconsistentDatasetError(f"score_table.tsv: {e}") from None

    bundle = DatasetBundle(
        graph=graph,
        features=features,
        labels=labels,
        masks=masks,
        num_classes=manifest["num_classes"],
        vertex_names=names,
        edge_type_names=manifest.get("edge_type_names"),
        class_names=manifest.get("class_names"),
        self_edges=bool(manifest.get("self_edges", True)),
        score_table=table,
    )
    bundle.validate()
    return bundle


def save_dataset(bundle: DatasetBundle, directory: str | Path) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    g = bundle.graph
    name = bundle.vertex_name
    manifest = {
        "num_vertices": g.num_vertices,
        "num_edge_types": g.num_edge_types,
        "num_classes": bundle.num_classes,
        "feature_dim": 0 if bundle.features is None else bundle.features.shape[1],
    }
    for key in ("vertex_names", "edge_type_names", "class_names"):
        if getattr(bundle, key) is not None:
            manifest[key] = getattr(bundle, key)
    if not bundle.self_edges:
        manifest["self_edges"] = False
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    with (d / "edges.tsv").open("w") as f:
        for u, v, t in g.edges():
            f.write(f"{name(u)}\t{name(v)}\t{t}\n")
    if bundle.features is not None:
        with (d / "features.tsv").open("w") as f:
            for row in bundle.features:
                f.write(" ".join(repr(float(x)) for x in row) + "\n")
    with (d / "labels.tsv").open("w") as f:
        for v in np.flatnonzero(bundle.labels >= 0):
            f.write(f"{name(int(v))}\t{int(bundle.labels[v])}\n")
    with (d / "splits.tsv").open("w") as f:
        for split in SPLIT_NAMES:
            for v in getattr(bundle.masks, split):
                f.write(f"{name(int(v))}\t{split}\n")
    if bundle.score_table is not None:
        with (d / "score_table.tsv").open("w") as f:
            for row in bundle.score_table.s:
                f.write(" ".join(repr(float(x)) for x in row) + "\n")


@dataclass
class SyntheticOptions:
    feature_dim: int = 50
    feature_value: float = 2.0
    num_types: int = 4
    num_classes: int = 3
    split: tuple[float, float, float] = (0.2, 0.1, 0.7)
    retype_edges: bool = False


def split_counts(n: int, fractions: tuple[float, float, float]) -> tuple[int, int, int]:
    train = int(round(fractions[0] * n))
    val = int(round(fractions[1] * n))
    return train, val, n - train - val


def generate_synthetic(g: HeteroGraph, seed: int, opts: SyntheticOptions | None = None) -> DatasetBundle:
    """Filler features, labels, splits (and optionally edge types) for a bare graph.

    Every feature is the same constant; labels are uniform over the classes;
    vertices are shuffled into train/val/test by ``opts.split``.
    """
    opts = opts or SyntheticOptions()
    rng = np.random.default_rng(seed)
    n = g.num_vertices
    if opts.retype_edges:
        etype = rng.integers(0, opts.num_types, size=g.num_edges)
        g = HeteroGraph(n, opts.num_types, g.indptr.copy(), g.dst.copy(), etype)
    features = np.full((n, opts.feature_dim), opts.feature_value)
    labels = rng.integers(0, opts.num_classes, size=n)
    perm = rng.permutation(n)
    a, b, _ = split_counts(n, opts.split)
    masks = SplitMasks(np.sort(perm[:a]), np.sort(perm[a : a + b]), np.sort(perm[a + b :]))
    return DatasetBundle(g, features, labels, masks, opts.num_classes)


def random_graph(num_vertices: int, num_edges: int, num_types: int, seed: int) -> HeteroGraph:
    """Uniform random directed multigraph with uniform random edge types."""
    rng = np.random.default_rng(seed)
    edges = np.stack(
        [
            rng.integers(0, num_vertices, size=num_edges),
            rng.integers(0, num_vertices, size=num_edges),
            rng.integers(0, num_types, size=num_edges),
        ],
        axis=1,
    )
    return build_graph(edges, num_vertices, num_types)


def class_correlated_dataset(
    num_vertices: int = 200,
    seed: int = 0,
    num_classes: int = 2,
    feature_dim: int = 8,
    signal: float = 1.5,
    noise: float = 2.0,
    same_class_degree: int = 4,
    mixed_degree: int = 4,
    mixed_same_class: float = 0.5,
    split: tuple[float, float, float] = (0.2, 0.1, 0.7),
) -> DatasetBundle:
    """Two edge types whose metapaths carry class information.

    Type 0 edges always join vertices of the same class; type 1 edges join a
    same-class vertex with probability ``mixed_same_class`` and a uniform
    random vertex otherwise. Features are a class centroid plus heavy
    Gaussian noise, so a vertex alone is a weak predictor of its class and
    aggregating over the right metapath neighbourhood recovers it.
    Edges are emitted in both directions.
    """
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, num_classes, size=num_vertices)
    members = [np.flatnonzero(labels == c) for c in range(num_classes)]
    centroids = rng.normal(size=(num_classes, feature_dim))
    centroids *= signal / np.linalg.norm(centroids, axis=1, keepdims=True)
    features = centroids[labels] + rng.normal(scale=noise, size=(num_vertices, feature_dim))
    edges = []
    for v in range(num_vertices):
        same = members[labels[v]]
        for u in rng.choice(same, size=same_class_degree):
            edges.append((v, int(u), 0))
        for _ in range(mixed_degree):
            u = rng.choice(same) if rng.random() < mixed_same_class else rng.integers(num_vertices)
            edges.append((v, int(u), 1))
    edges += [(u, v, t) for v, u, t in edges]
    graph = build_graph(edges, num_vertices, 2)
    perm = rng.permutation(num_vertices)
    a, b, _ = split_counts(num_vertices, split)
    masks = SplitMasks(np.sort(perm[:a]), np.sort(perm[a : a + b]), np.sort(perm[a + b :]))
    return DatasetBundle(graph, features, labels, masks, num_classes)


def separable_dataset(num_vertices: int = 20, seed: int = 0) -> DatasetBundle:
    """Two linearly separable classes on a ring; every vertex is in the train split."""
    rng = np.random.default_rng(seed)
    labels = np.arange(num_vertices) % 2
    features = np.stack([labels * 2.0 - 1.0, rng.normal(scale=0.1, size=num_vertices)], axis=1)
    edges = [(v, (v + 1) % num_vertices, v % 2) for v in range(num_vertices)]
    edges += [(u, v, t) for v, u, t in edges]
    graph = build_graph(edges, num_vertices, 2)
    idx = np.arange(num_vertices)
    masks = SplitMasks(idx, np.zeros(0, np.int64), np.zeros(0, np.int64))
    return DatasetBundle(graph, features, labels, masks, 2)
