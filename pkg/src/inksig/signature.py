"""Truncated path signatures of planar polylines.

The signature of a path is the sequence of its iterated integrals. For a
single straight segment with displacement d the level-k block is the
k-fold tensor power d^(x)k / k!, and signatures of concatenated paths
multiply in the truncated tensor algebra, which makes the computation
exact for piecewise-linear pen trajectories.

Layout: values are stored flat, level by level. Level k starts at offset
2^k - 1 and holds 2^k entries, one per word over the two coordinate
letters (1 = x-increment, 2 = y-increment) in lexicographic order with
the first letter most significant. Total length for truncation level n
is 2^{n+1} - 1.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidInputError


def sig_dim(n: int) -> int:
    """Number of signature entries (= feature-map channels) at level n."""
    if n < 0:
        raise InvalidInputError(f"truncation level must be >= 0, got {n}")
    return 2 ** (n + 1) - 1


def level_offset(k: int) -> int:
    """Flat index where the level-k block starts."""
    return 2 ** k - 1


def word_index(word) -> int:
    """Flat index of a signature word, e.g. (1, 2, 2) -> entry 10."""
    idx = 0
    for letter in word:
        if letter not in (1, 2):
            raise InvalidInputError(f"word letters must be 1 or 2, got {letter}")
        idx = idx * 2 + (letter - 1)
    return level_offset(len(word)) + idx


@dataclass
class SignatureVector:
    """A signature truncated at `level`, stored flat (see module docs)."""

    level: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (sig_dim(self.level),):
            raise InvalidInputError(
                f"level {self.level} signature needs {sig_dim(self.level)} values, "
                f"got shape {self.values.shape}"
            )

    def level_block(self, k: int) -> np.ndarray:
        return self.values[level_offset(k): level_offset(k + 1)]

    def entry(self, word) -> float:
        return float(self.values[word_index(word)])


def identity_signature(n: int) -> SignatureVector:
    values = np.zeros(sig_dim(n))
    values[0] = 1.0
    return SignatureVector(n, values)


def segment_signature(d, n: int) -> SignatureVector:
    """Signature of one straight segment with displacement d = (dx, dy)."""
    dx, dy = float(d[0]), float(d[1])
    return SignatureVector(n, kernels.segment_signature_flat(dx, dy, n))


def chen_concat(a: SignatureVector, b: SignatureVector) -> SignatureVector:
    """Signature of the concatenated path: truncated tensor product a (x) b."""
    if a.level != b.level:
        raise InvalidInputError(f"level mismatch: {a.level} vs {b.level}")
    return SignatureVector(a.level, kernels.chen_concat_flat(a.values, b.values, a.level))


def path_signature(points, n: int) -> SignatureVector:
    """Signature of the polyline through `points` ((N, 2) array-like)."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
        raise InvalidInputError(f"points must be a non-empty (N, 2) array, got shape {pts.shape}")
    if n < 0:
        raise InvalidInputError(f"truncation level must be >= 0, got {n}")
    return SignatureVector(n, kernels.path_signature_flat(pts, n))


def windowed_signature_array(stroke, n: int, delta=2) -> np.ndarray:
    """Per-point signatures over sliding windows, as an (N, sig_dim(n)) array.

    Point i gets the signature of the sub-polyline over indices
    [max(0, i - delta), min(last, i + delta)]; windows never cross stroke
    boundaries. delta=None selects the growing-prefix variant (whole
    stroke up to the point).
    """
    pts = np.ascontiguousarray(stroke, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
        raise InvalidInputError(f"stroke must be a non-empty (N, 2) array, got shape {pts.shape}")
    if delta is None:
        d = -1
    else:
        d = int(delta)
        if d < 1:
            raise InvalidInputError(f"window radius must be >= 1, got {delta}")
    return kernels.windowed_signatures_flat(pts, n, d)


def windowed_signatures(stroke, n: int, delta=2):
    """Like windowed_signature_array but as a list of SignatureVector."""
    arr = windowed_signature_array(stroke, n, delta)
    return [SignatureVector(n, row) for row in arr]
