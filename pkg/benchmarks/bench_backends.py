#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the hot kernels on training-shaped workloads and prints a table of
per-call times and the numba speedup. Both implementations are imported
directly, so the INKSIG_NUMBA flag does not matter here.

    python benchmarks/bench_backends.py [--batch 20] [--repeat 5]
"""

import argparse
import time

import numpy as np

from inksig import _numba_kernels as nbk
from inksig import _numpy_kernels as npk
from inksig.cnn import DESK_CONV_WIDTHS, DESK_FC_UNITS, Network
from inksig.signature import sig_dim
from inksig.trajectory import resample


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_conv(impl, batch, rng):
    x = rng.standard_normal((batch, 15, 96, 96)).astype(np.float32)
    w = rng.standard_normal((12, 15, 3, 3)).astype(np.float32)
    b = np.zeros(12, dtype=np.float32)
    y = impl.conv2d_forward(x, w, b)
    dy = rng.standard_normal(y.shape).astype(np.float32)

    return {
        "conv2d_forward": lambda: impl.conv2d_forward(x, w, b),
        "conv2d_input_grad": lambda: impl.conv2d_input_grad(dy, w, 96, 96),
        "conv2d_param_grad": lambda: impl.conv2d_param_grad(x, dy, 3),
        "maxpool2_forward": lambda: impl.maxpool2_forward(y),
    }


def bench_signatures(impl, rng):
    stroke = resample(rng.uniform(0, 96, (40, 2)), 0.5)

    def windowed():
        impl.windowed_signatures_flat(stroke, 3, 2)

    pts = rng.uniform(0, 96, (30, 2))
    return {
        f"windowed_sigs ({len(stroke)} pts, level 3)": windowed,
        "path_signature (30 pts, level 4)": lambda: impl.path_signature_flat(pts, 4),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--batch", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    print(f"{'kernel':40s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    conv_nb = bench_conv(nbk, args.batch, np.random.default_rng(0))
    conv_np = bench_conv(npk, args.batch, np.random.default_rng(0))
    sig_nb = bench_signatures(nbk, np.random.default_rng(1))
    sig_np = bench_signatures(npk, np.random.default_rng(1))
    rows = [(name, conv_nb[name], conv_np[name]) for name in conv_nb]
    rows += [(name, sig_nb[name], sig_np[name]) for name in sig_nb]

    for name, fn_nb, fn_np in rows:
        fn_nb()  # trigger compilation outside the timed region
        t_nb = timeit(fn_nb, args.repeat)
        t_np = timeit(fn_np, args.repeat)
        print(f"{name:40s} {t_nb * 1e3:9.2f}ms {t_np * 1e3:9.2f}ms {t_np / t_nb:7.1f}x")

    # end-to-end: one SGD minibatch through the desk-size network
    from inksig import kernels
    print(f"\nend-to-end training step (dispatched backend: {kernels.BACKEND})")
    net = Network.build(sig_dim(3), 10, conv_widths=DESK_CONV_WIDTHS,
                        fc_units=DESK_FC_UNITS, seed=0)
    x = np.random.default_rng(2).standard_normal((args.batch, 15, 96, 96)).astype(np.float32)
    y = np.arange(args.batch) % 10

    def step():
        probs, cache = net.forward(x, training=True, rng=np.random.default_rng(0))
        net.backward(cache, y)

    step()
    t = timeit(step, args.repeat)
    print(f"forward+backward, batch {args.batch}: {t * 1e3:.1f} ms "
          f"({t / args.batch * 1e3:.2f} ms/sample)")


if __name__ == "__main__":
    main()
