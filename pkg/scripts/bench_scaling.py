"""W-GTN average epoch time over metapath lengths and walk counts (5 epochs each).

    python3 scripts/bench_scaling.py --vertices 50000 --edges 1000000
"""
import argparse

from graphgtn.bench import scaling_epoch_times


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--vertices", type=int, default=50_000)
    p.add_argument("--edges", type=int, default=1_000_000)
    p.add_argument("--lengths", type=int, nargs="+", default=[2, 3, 4, 5, 6])
    p.add_argument("--walks", type=int, nargs="+", default=[10, 50, 100])
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    times = scaling_epoch_times(args.vertices, args.edges, args.lengths, args.walks, args.epochs, seed=args.seed)
    print("l\t" + "\t".join(f"w={w}" for w in args.walks))
    for l in args.lengths:
        print(f"{l}\t" + "\t".join(f"{times[(l, w)]:.3f}" for w in args.walks))


if __name__ == "__main__":
    main()
