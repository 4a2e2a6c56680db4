"""Time the compiled chart kernel against the pure-Python fill.

    python benchmarks/bench_kernel.py --lengths 8 16 32 --repeat 3
"""

import argparse
import random
import time

from otparse import engine, example_parser


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--lengths", type=int, nargs="+", default=[8, 16, 32, 64])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    parser = example_parser()
    rng = random.Random(args.seed)
    backends = ["python"] + (["compiled"] if engine._kernel is not None else [])
    if len(backends) == 1:
        print("compiled kernel not built; timing the Python fill only")
    print(f"{'J':>4}  {'combines':>9}  " + "  ".join(f"{b + ' (s)':>13}" for b in backends) + ("  speedup" if len(backends) == 2 else ""))
    for n in args.lengths:
        word = "".join(rng.choice("CV") for _ in range(n))
        times = {}
        for b in backends:
            # the compiled run is timed with result assembly, since callers always need the tree
            times[b] = best_of(lambda: parser.parse(word, backend=b), args.repeat)
        combines = parser.run(word, backend=backends[-1]).combine_count
        row = f"{n:>4}  {combines:>9}  " + "  ".join(f"{times[b]:>13.4f}" for b in backends)
        if len(backends) == 2:
            row += f"  {times['python'] / times['compiled']:>7.1f}x"
        print(row)


if __name__ == "__main__":
    main()
