"""Average epoch time of each mode on one synthetic graph.

    python3 scripts/bench_relative.py --vertices 2000 --edges 12000 --layers 3
"""
import argparse
import json

from graphgtn.bench import BenchConfig, relative_epoch_times


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--vertices", type=int, default=2000)
    p.add_argument("--edges", type=int, default=12000)
    p.add_argument("--types", type=int, default=4)
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--epochs", type=int, default=4)
    p.add_argument("--num-walks", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    cfg = BenchConfig(args.vertices, args.edges, args.types, args.layers, args.epochs, seed=args.seed)
    times = relative_epoch_times(cfg, args.num_walks)
    paths = times.pop("paths")
    print(f"{paths} paths of length {args.layers + 1}")
    fastest = min(times.values())
    for name, secs in sorted(times.items(), key=lambda kv: kv[1]):
        print(f"{name:18s} {secs:9.4f} s/epoch  {secs / fastest:7.1f}x")
    print(json.dumps({"paths": paths, **times}))


if __name__ == "__main__":
    main()
