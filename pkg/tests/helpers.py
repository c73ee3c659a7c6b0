"""Shared test utilities: fixtures builders and error metrics."""

import numpy as np

from inksig import InkCharacter


def make_char(strokes, writer="w00", label="c000", normalized=False):
    return InkCharacter(strokes=[np.asarray(s, dtype=np.float64) for s in strokes],
                        writer_id=writer, char_label=label, normalized=normalized)


def block_rel_err(got, want, level):
    """Worst per-level relative error between two flat signatures.

    Each level block is compared against the magnitude of the reference
    block, which keeps near-zero entries from blowing up the metric.
    """
    got = np.asarray(got)
    want = np.asarray(want)
    worst = 0.0
    for k in range(level + 1):
        lo, hi = 2 ** k - 1, 2 ** (k + 1) - 1
        scale = max(np.abs(want[lo:hi]).max(), 1e-30)
        worst = max(worst, np.abs(got[lo:hi] - want[lo:hi]).max() / scale)
    return worst


def random_polyline(rng, max_points=30, lo=0.0, hi=96.0, min_points=2):
    n = int(rng.integers(min_points, max_points + 1))
    return rng.uniform(lo, hi, (n, 2))
