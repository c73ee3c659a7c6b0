"""Ink representation and geometric preprocessing.

A character is an ordered list of strokes; a stroke is an (N, 2) float
array of pen positions. The sample index (row number) is the only
timestamp kept: signatures are invariant under reparameterization, so
point order is all that matters.

Characters are normalized into a 96x96 grid: the tight bounding box is
scaled (aspect ratio preserved) so its larger side spans 48 pixels and
centered at (48, 48), leaving a 24-pixel margin all around for the
augmentation jitter.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError

GRID_SIZE = 96
BOX_SIZE = 48
GRID_CENTER = GRID_SIZE / 2.0
DEFAULT_MAX_STEP = 0.5


@dataclass
class InkCharacter:
    """One handwritten character: ordered strokes with identity labels."""

    strokes: list
    writer_id: str
    char_label: str
    normalized: bool = False

    def __post_init__(self):
        if not self.strokes:
            raise InvalidInputError("character must have at least one stroke")
        checked = []
        for s in self.strokes:
            arr = np.asarray(s, dtype=np.float64)
            if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
                raise InvalidInputError(f"stroke must be a non-empty (N, 2) array, got shape {arr.shape}")
            checked.append(arr)
        self.strokes = checked

    @property
    def n_strokes(self):
        return len(self.strokes)

    @property
    def n_points(self):
        return sum(s.shape[0] for s in self.strokes)

    def all_points(self):
        if len(self.strokes) == 1:
            return self.strokes[0]
        return np.concatenate(self.strokes, axis=0)

    def bounding_box(self):
        """(xmin, ymin, xmax, ymax) over all points."""
        pts = self.all_points()
        xmin, ymin = pts.min(axis=0)
        xmax, ymax = pts.max(axis=0)
        return float(xmin), float(ymin), float(xmax), float(ymax)


@dataclass(frozen=True)
class DistortLimits:
    """Ranges for the random affine train-time distortion.

    Translation in pixels, rotation in degrees (about the grid center),
    isotropic scale factor range.
    """

    shift: float = 4.0
    rotate_deg: float = 10.0
    scale: tuple = (0.9, 1.1)

    @classmethod
    def identity(cls):
        return cls(shift=0.0, rotate_deg=0.0, scale=(1.0, 1.0))


def normalize(ch: InkCharacter) -> InkCharacter:
    """Scale and center a character into the 48x48-in-96x96 layout.

    Aspect ratio is preserved: the larger bounding-box side is scaled to
    48 pixels. Degenerate boxes scale by their nonzero extent; a single
    dot is centered without scaling.
    """
    xmin, ymin, xmax, ymax = ch.bounding_box()
    extent = max(xmax - xmin, ymax - ymin)
    scale = BOX_SIZE / extent if extent > 0 else 1.0
    cx = (xmin + xmax) / 2.0
    cy = (ymin + ymax) / 2.0
    center = np.array([cx, cy])
    strokes = [(s - center) * scale + GRID_CENTER for s in ch.strokes]
    return replace(ch, strokes=strokes, normalized=True)


def resample(stroke: np.ndarray, max_step: float = DEFAULT_MAX_STEP) -> np.ndarray:
    """Subdivide segments so consecutive points are at most max_step apart.

    Original vertices are all retained; inserted points lie on the
    connecting segments. A single-point stroke is returned unchanged.
    """
    if max_step <= 0:
        raise InvalidInputError(f"max_step must be positive, got {max_step}")
    stroke = np.asarray(stroke, dtype=np.float64)
    if stroke.shape[0] < 2:
        return stroke
    deltas = np.diff(stroke, axis=0)
    dists = np.hypot(deltas[:, 0], deltas[:, 1])
    counts = np.maximum(np.ceil(dists / max_step).astype(np.int64), 1)
    if np.all(counts == 1):
        return stroke
    total = int(counts.sum()) + 1
    out = np.empty((total, 2), dtype=np.float64)
    pos = 0
    for i in range(stroke.shape[0] - 1):
        c = counts[i]
        ts = np.arange(c, dtype=np.float64) / c
        out[pos:pos + c] = stroke[i] + ts[:, None] * deltas[i]
        pos += c
    out[-1] = stroke[-1]
    return out


def affine_transform(ch: InkCharacter, tx: float, ty: float,
                     angle_deg: float, scale: float) -> InkCharacter:
    """Rotate and scale about the grid center, then translate.

    If the transformed ink would leave the 96x96 grid it is re-normalized;
    with the default distortion limits a normalized character can never
    escape.
    """
    if not ch.normalized:
        raise InvalidInputError("affine_transform expects a normalized character")
    angle = math.radians(angle_deg)
    ca, sa = math.cos(angle), math.sin(angle)
    rot = np.array([[ca, -sa], [sa, ca]]) * scale
    shift = np.array([GRID_CENTER + tx, GRID_CENTER + ty])
    strokes = [(s - GRID_CENTER) @ rot.T + shift for s in ch.strokes]
    out = replace(ch, strokes=strokes)
    pts = out.all_points()
    if pts.min() < 0 or pts.max() >= GRID_SIZE:
        out = normalize(out)
    return out


def affine_distort(ch: InkCharacter, rng: np.random.Generator,
                   limits: DistortLimits = DistortLimits()) -> InkCharacter:
    """Apply a random translate + rotate + scale about the grid center.

    Draw order is fixed (tx, ty, angle, scale) so runs are reproducible.
    """
    tx = rng.uniform(-limits.shift, limits.shift)
    ty = rng.uniform(-limits.shift, limits.shift)
    angle_deg = rng.uniform(-limits.rotate_deg, limits.rotate_deg)
    scale = rng.uniform(limits.scale[0], limits.scale[1])
    return affine_transform(ch, tx, ty, angle_deg, scale)
