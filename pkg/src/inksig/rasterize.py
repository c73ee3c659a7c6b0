"""Painting signature values onto feature maps, plus visualization export.

A rendered character is an (M, 96, 96) tensor, M = sig_dim(n). Every
stroke is resampled to sub-pixel density and each resampled point writes
its windowed signature vector into the pixel under it; background pixels
stay exactly zero. Channel 0 carries the level-0 value 1.0 and therefore
doubles as the binary pen-trace bitmap.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidInputError
from .signature import sig_dim
from .trajectory import DEFAULT_MAX_STEP, GRID_SIZE, InkCharacter, resample

DEFAULT_WINDOW = 2


@dataclass
class FeatureTensor:
    """Signature feature maps for one character."""

    maps: np.ndarray  # (channels, 96, 96) float64
    level: int
    delta: object  # window radius, or None for prefix windows

    @property
    def channels(self):
        return self.maps.shape[0]

    def trace_mask(self) -> np.ndarray:
        return self.maps[0] != 0.0


def render(ch: InkCharacter, n: int, delta=DEFAULT_WINDOW,
           max_step: float = DEFAULT_MAX_STEP, collision: str = "last") -> FeatureTensor:
    """Rasterize a normalized character into signature feature maps.

    Strokes are processed in order and points in point order; on pixel
    collisions the last write wins ("last") or the max-magnitude value
    per channel ("max").
    """
    if not ch.normalized:
        raise InvalidInputError("render expects a normalized character")
    if collision not in ("last", "max"):
        raise InvalidInputError(f"unknown collision policy: {collision!r}")
    paint = kernels.paint_maps_last if collision == "last" else kernels.paint_maps_maxmag
    d = -1 if delta is None else int(delta)
    maps = np.zeros((sig_dim(n), GRID_SIZE, GRID_SIZE), dtype=np.float64)
    for stroke in ch.strokes:
        pts = resample(stroke, max_step)
        sigs = kernels.windowed_signatures_flat(pts, n, d)
        px = np.minimum(np.floor(pts[:, 0]), GRID_SIZE - 1).astype(np.int64)
        py = np.minimum(np.floor(pts[:, 1]), GRID_SIZE - 1).astype(np.int64)
        if px.min() < 0 or py.min() < 0:
            raise InvalidInputError("character has points outside the grid")
        paint(maps, px, py, sigs)
    return FeatureTensor(maps=maps, level=n, delta=delta)


def equalize(channel: np.ndarray, mask: np.ndarray = None) -> np.ndarray:
    """Histogram-equalize one channel over its trace pixels.

    Background pixels stay 0; trace pixels are replaced by the empirical
    CDF of their values, so the output lies in (0, 1]. With mask=None the
    nonzero pixels are treated as the trace. An all-background channel is
    returned unchanged.
    """
    if mask is None:
        mask = channel != 0.0
    out = np.zeros_like(channel, dtype=np.float64)
    vals = channel[mask]
    if vals.size == 0:
        return out
    uniq, counts = np.unique(vals, return_counts=True)
    cdf = np.cumsum(counts) / vals.size
    out[mask] = cdf[np.searchsorted(uniq, vals)]
    return out


def _scale_linear(channel, mask):
    out = np.zeros_like(channel, dtype=np.float64)
    vals = channel[mask]
    if vals.size == 0:
        return out
    lo, hi = vals.min(), vals.max()
    out[mask] = 1.0 if hi == lo else (vals - lo) / (hi - lo)
    return out


def export_images(t: FeatureTensor, directory, equalized: bool = True):
    """Write one 8-bit binary PGM per channel; returns the file paths.

    Channels are equalized over the trace by default, or min-max scaled
    when equalized=False.
    """
    os.makedirs(directory, exist_ok=True)
    mask = t.trace_mask()
    paths = []
    for c in range(t.channels):
        img = equalize(t.maps[c], mask) if equalized else _scale_linear(t.maps[c], mask)
        data = np.round(img * 255.0).astype(np.uint8)
        path = os.path.join(directory, f"channel_{c:02d}.pgm")
        try:
            with open(path, "wb") as f:
                f.write(b"P5\n%d %d\n255\n" % (data.shape[1], data.shape[0]))
                f.write(data.tobytes())
        except OSError as e:
            raise OSError(f"failed writing feature map image {path}: {e}") from e
        paths.append(path)
    return paths
