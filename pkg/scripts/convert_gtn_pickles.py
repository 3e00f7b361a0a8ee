"""Convert a GTN-style pickle release (ACM, DBLP, IMDB) into a dataset directory.

The release holds ``node_features.pkl`` (n x d array), ``edges.pkl`` (one
n x n sparse adjacency per edge type) and ``labels.pkl`` (three lists of
[vertex, class] pairs: train, val, test).

    python3 scripts/convert_gtn_pickles.py path/to/ACM datasets/acm
"""
import argparse
import pickle
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from graphgtn.data import DatasetBundle, SplitMasks, save_dataset
from graphgtn.graph import build_graph


def convert(src: Path) -> DatasetBundle:
    with (src / "node_features.pkl").open("rb") as f:
        features = np.asarray(pickle.load(f), dtype=np.float64)
    with (src / "edges.pkl").open("rb") as f:
        adjs = [sp.coo_matrix(a) for a in pickle.load(f)]
    with (src / "labels.pkl").open("rb") as f:
        splits = [np.asarray(s, dtype=np.int64).reshape(-1, 2) for s in pickle.load(f)]
    n = features.shape[0]
    edges = np.concatenate(
        [np.stack([a.row, a.col, np.full(a.nnz, t)], axis=1) for t, a in enumerate(adjs)]
    ).astype(np.int64)
    graph = build_graph(edges, n, len(adjs))
    labels = np.full(n, -1, dtype=np.int64)
    for s in splits:
        labels[s[:, 0]] = s[:, 1]
    masks = SplitMasks(*(np.sort(s[:, 0]) for s in splits))
    bundle = DatasetBundle(graph, features, labels, masks, int(labels.max()) + 1)
    bundle.validate()
    return bundle


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("source", type=Path)
    p.add_argument("out", type=Path)
    args = p.parse_args()
    bundle = convert(args.source)
    save_dataset(bundle, args.out)
    g = bundle.graph
    print(f"{g.num_vertices} vertices, {g.num_edges} edges, {g.num_edge_types} types -> {args.out}")


if __name__ == "__main__":
    main()
