"""Time the numpy and numba kernel backends on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--seed 0]

Each kernel is checked for identical output across backends before timing.
The numba column excludes the one-off compilation (a warm-up call runs first).
"""

import argparse
import time

import numpy as np

from twentyq import kernels


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return min(times)


def cases(rng):
    irt_like = (rng.random((22, 5000)) < 0.6).astype(np.uint8)
    pairs_a = rng.integers(0, 2, size=(100_000, 40), dtype=np.uint8)
    pairs_b = rng.integers(0, 2, size=(100_000, 40), dtype=np.uint8)
    masks = kernels.pair_masks(rng.integers(0, 2, size=(8, 24), dtype=np.uint8))
    big = rng.integers(0, 2, size=(400, 2000), dtype=np.uint8)
    cols = np.ascontiguousarray(irt_like[:, :600].T)
    return [
        ("first_difference 1e5x40", "first_difference", (pairs_a, pairs_b)),
        ("pairwise_first_difference 400x2000", "pairwise_first_difference", (big,)),
        ("hamming 400x2000", "hamming", (big,)),
        ("block_max 600 columns, L=22", "block_max", (cols,)),
        ("subset_pair_counts C(24,6)", "subset_pair_counts",
         (masks, 6, np.zeros(masks.shape[1], dtype=np.uint64))),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    if kernels.NUMBA is None:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':40s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    for label, name, inputs in cases(rng):
        f_np = getattr(kernels.NUMPY, name)
        f_nb = getattr(kernels.NUMBA, name)
        if not np.array_equal(f_np(*inputs), f_nb(*inputs)):  # also warms up numba
            raise SystemExit(f"{name}: backends disagree")
        t_np = best_of(f_np, inputs, args.repeat)
        t_nb = best_of(f_nb, inputs, args.repeat)
        print(f"{label:40s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
