"""Compiled vs pure-Python sampling kernel.

    python benchmarks/bench_kernels.py [--shots N] [--repeat R]

Both backends must return identical counts; the script checks that before timing.
"""
import argparse
import timeit

import numpy as np

from swapnet import kernels


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--shots", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--batch", type=int, default=64, help="seeds in the batched call")
    args = ap.parse_args()

    backends = {"python": kernels.pure}
    if kernels.compiled is not None:
        backends["cython"] = kernels.compiled
    else:
        print("compiled kernel not loaded (not built, or SWAPNET_PURE_PYTHON is set); timing the fallback only")

    seeds = np.arange(args.batch, dtype=np.uint64)
    batch_shots = max(1, args.shots // args.batch)
    counts = {name: mod.count_below(0.3, args.shots, 2024) for name, mod in backends.items()}
    batches = {name: list(mod.count_below_batch(0.3, batch_shots, seeds)) for name, mod in backends.items()}
    if len(set(counts.values())) != 1 or len({tuple(b) for b in batches.values()}) != 1:
        raise SystemExit(f"backends disagree: {counts}")

    print(f"shots={args.shots} repeat={args.repeat} active backend={kernels.BACKEND}")
    timings = {}
    for name, mod in backends.items():
        single = min(timeit.repeat(lambda: mod.count_below(0.3, args.shots, 2024), number=1, repeat=args.repeat))
        batch = min(timeit.repeat(lambda: mod.count_below_batch(0.3, batch_shots, seeds), number=1, repeat=args.repeat))
        timings[name] = single
        rate = args.shots / single / 1e6
        print(f"{name:>7}: single {single * 1e3:8.2f} ms ({rate:6.1f} Mshots/s)  batch[{args.batch}] {batch * 1e3:8.2f} ms")
    if "cython" in timings:
        print(f"speedup: {timings['python'] / timings['cython']:.1f}x")


if __name__ == "__main__":
    main()
