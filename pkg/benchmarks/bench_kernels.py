"""Time the JIT kernels against the pure-numpy fallbacks on identical inputs.

Run from the repo root:

    python3 benchmarks/bench_kernels.py [--size 256] [--repeats 50]

The selected path depends on the environment: with numba importable and
FILTERGYM_DISABLE_NUMBA / NUMBA_DISABLE_JIT unset the module compiles the
JIT kernels, otherwise the selected path IS the fallback and the two columns
match. Outputs are asserted equal before timing so the comparison is honest.
"""

import argparse
import statistics
import time

import numpy as np

from filtergym import accel


def bench(fn, args, repeats):
    fn(*args)  # warm up (also triggers JIT compilation)
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        samples.append(time.perf_counter() - t0)
    return min(samples), statistics.median(samples)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=256, help="square image side")
    parser.add_argument("--repeats", type=int, default=50, help="timed repetitions")
    args = parser.parse_args(argv)

    rng = np.random.Generator(np.random.PCG64(0))
    pixels = rng.integers(0, 256, size=(args.size, args.size, 3), dtype=np.uint8)
    gray = rng.integers(0, 256, size=(args.size, args.size), dtype=np.uint8)
    sharpen = np.array([[0, -1, 0], [-1, 5, -1], [0, -1, 0]], dtype=np.float64)

    print(f"jit enabled: {accel.JIT_ENABLED}  image: {args.size}x{args.size}  repeats: {args.repeats}")
    rows = [
        ("convolve_u8", accel.convolve_u8, accel.fallback_convolve_u8, (pixels, sharpen)),
        ("laplacian_response", accel.laplacian_response, accel.fallback_laplacian, (gray,)),
    ]
    print(f"{'kernel':<20} {'selected best':>14} {'fallback best':>14} {'speedup':>8}")
    for name, selected, fallback, inputs in rows:
        if not np.array_equal(selected(*inputs), fallback(*inputs)):
            raise SystemExit(f"error: {name} paths disagree; benchmark aborted")
        sel_best, _ = bench(selected, inputs, args.repeats)
        fb_best, _ = bench(fallback, inputs, args.repeats)
        print(f"{name:<20} {sel_best * 1e3:>11.3f} ms {fb_best * 1e3:>11.3f} ms {fb_best / sel_best:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
