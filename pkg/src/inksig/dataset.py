"""Corpus ingestion, statistics, splits, and the synthetic-writer generator.

Two interchange formats are supported: the binary per-writer POT sample
stream (so real ink corpora can be ingested) and JSON-lines, the
canonical format used by the CLI and tests. The synthetic generator
produces writers with controlled, well-separated style parameters so
identification experiments run at desk scale without external data.
"""

import json
import logging
import math
import struct
from dataclasses import dataclass

import numpy as np

from .dropstroke import drop_count, variant_count
from .errors import ConfigError, InvalidInputError, ParseError
from .trajectory import InkCharacter

log = logging.getLogger(__name__)


@dataclass
class Corpus:
    characters: list
    provenance: str = "memory"

    def __len__(self):
        return len(self.characters)

    def writers(self):
        return sorted({ch.writer_id for ch in self.characters})

    def char_labels(self):
        return sorted({ch.char_label for ch in self.characters})

    def by_writer(self):
        """writer_id -> characters, in corpus order."""
        out = {}
        for ch in self.characters:
            out.setdefault(ch.writer_id, []).append(ch)
        return out


# ---------------------------------------------------------------------------
# POT binary format
# ---------------------------------------------------------------------------
# Per sample, little-endian:
#   uint16 sample byte size (includes this field and both terminators)
#   4-byte tag code (the character label)
#   uint16 stroke count
#   per stroke: int16 (x, y) pairs, closed by the pair (-1, 0)
#   after the last stroke: the pair (-1, -1)

_STROKE_END = (-1, 0)
_SAMPLE_END = (-1, -1)


def parse_pot(data: bytes, writer_id: str, swap_tag_bytes: bool = False):
    """Decode one POT stream (one writer per file) into characters."""
    chars = []
    off = 0
    n = len(data)
    while off < n:
        start = off
        if n - off < 8:
            raise ParseError("truncated sample header", offset=off)
        (size,) = struct.unpack_from("<H", data, off)
        tag = data[off + 2: off + 6]
        if swap_tag_bytes:
            tag = tag[::-1]
        (stroke_count,) = struct.unpack_from("<H", data, off + 6)
        off += 8
        if stroke_count < 1:
            raise ParseError(f"sample declares {stroke_count} strokes", offset=start + 6)
        strokes = []
        pts = []
        while True:
            if n - off < 4:
                raise ParseError("truncated point data", offset=off)
            x, y = struct.unpack_from("<hh", data, off)
            off += 4
            if (x, y) == _SAMPLE_END:
                break
            if (x, y) == _STROKE_END:
                if not pts:
                    raise ParseError("empty stroke before terminator", offset=off - 4)
                strokes.append(np.array(pts, dtype=np.float64))
                pts = []
                continue
            if x < 0 or y < 0:
                raise ParseError(f"negative coordinate ({x}, {y})", offset=off - 4)
            pts.append((x, y))
        if pts:
            raise ParseError("sample terminator inside an unterminated stroke", offset=off - 4)
        if len(strokes) != stroke_count:
            raise ParseError(
                f"stroke count field says {stroke_count}, stream has {len(strokes)}",
                offset=start + 6,
            )
        if off - start != size:
            raise ParseError(
                f"sample size field says {size} bytes, sample occupies {off - start}",
                offset=start,
            )
        chars.append(InkCharacter(strokes=strokes, writer_id=writer_id,
                                  char_label=tag.hex(), normalized=False))
    return chars


def _label_to_tag(label: str) -> bytes:
    if len(label) == 8:
        try:
            return bytes.fromhex(label)
        except ValueError:
            pass
    raw = label.encode("utf-8")
    if len(raw) > 4:
        raise InvalidInputError(f"label {label!r} does not fit a 4-byte tag code")
    return raw.ljust(4, b"\x00")


def write_pot(characters) -> bytes:
    """Encode characters as a POT stream (integer coordinates required)."""
    out = bytearray()
    for ch in characters:
        body = bytearray()
        for stroke in ch.strokes:
            for x, y in stroke:
                xi, yi = round(float(x)), round(float(y))
                if not (0 <= xi <= 32767 and 0 <= yi <= 32767):
                    raise InvalidInputError(
                        f"coordinate ({x}, {y}) outside the POT int16 range"
                    )
                body += struct.pack("<hh", xi, yi)
            body += struct.pack("<hh", *_STROKE_END)
        body += struct.pack("<hh", *_SAMPLE_END)
        size = 8 + len(body)
        if size > 0xFFFF:
            raise InvalidInputError("sample too large for the 16-bit size field")
        out += struct.pack("<H", size)
        out += _label_to_tag(ch.char_label)
        out += struct.pack("<H", ch.n_strokes)
        out += body
    return bytes(out)


# ---------------------------------------------------------------------------
# JSON-lines format
# ---------------------------------------------------------------------------

def _coord(v: float):
    return int(v) if float(v).is_integer() else float(v)


def write_jsonl(characters, fp):
    for ch in characters:
        rec = {
            "writer": ch.writer_id,
            "char": ch.char_label,
            "strokes": [[[_coord(x), _coord(y)] for x, y in s] for s in ch.strokes],
        }
        fp.write(json.dumps(rec, separators=(",", ":")) + "\n")


def parse_jsonl(lines):
    """Decode JSONL records (an open file or any iterable of lines)."""
    chars = []
    for i, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            strokes = [np.array(s, dtype=np.float64) for s in rec["strokes"]]
            chars.append(InkCharacter(strokes=strokes, writer_id=str(rec["writer"]),
                                      char_label=str(rec["char"]), normalized=False))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise ParseError(f"bad JSONL record on line {i}: {e}") from e
    return chars


def load_corpus_jsonl(path) -> Corpus:
    with open(path, "r", encoding="utf-8") as f:
        return Corpus(parse_jsonl(f), provenance="jsonl")


def save_corpus_jsonl(corpus: Corpus, path):
    with open(path, "w", encoding="utf-8") as f:
        write_jsonl(corpus.characters, f)


# ---------------------------------------------------------------------------
# statistics and splits
# ---------------------------------------------------------------------------

def stroke_stats(corpus: Corpus, with_dropstroke: bool = False):
    """Histogram of characters per stroke count, and the total count.

    With DropStroke, every n-stroke prototype expands to 2^n - 1 variants
    and the histogram redistributes them over the surviving stroke counts
    j with weight C(n, j).
    """
    hist = {}
    if not with_dropstroke:
        for ch in corpus.characters:
            hist[ch.n_strokes] = hist.get(ch.n_strokes, 0) + 1
        return hist, len(corpus.characters)
    total = 0
    for ch in corpus.characters:
        n = ch.n_strokes
        total += variant_count(n)
        for j in range(1, n + 1):
            hist[j] = hist.get(j, 0) + drop_count(n, j)
    return hist, total


@dataclass(frozen=True)
class SplitSpec:
    """Disjoint character-class label sets for a text-independent split."""

    train_labels: frozenset
    test_labels: frozenset
    seed: int = 0

    def __post_init__(self):
        overlap = self.train_labels & self.test_labels
        if overlap:
            raise ConfigError(f"train/test classes overlap: {sorted(overlap)[:5]} ...")

    @classmethod
    def random(cls, labels, n_train: int, seed: int):
        labels = sorted(labels)
        if not 0 < n_train < len(labels):
            raise ConfigError(
                f"need 0 < n_train < {len(labels)} character classes, got {n_train}"
            )
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(labels))
        train = frozenset(labels[i] for i in order[:n_train])
        test = frozenset(labels[i] for i in order[n_train:])
        return cls(train_labels=train, test_labels=test, seed=seed)


def make_split(corpus: Corpus, spec: SplitSpec):
    """Split by character class; both sides keep corpus order."""
    train = [ch for ch in corpus.characters if ch.char_label in spec.train_labels]
    test = [ch for ch in corpus.characters if ch.char_label in spec.test_labels]
    train_writers = {ch.writer_id for ch in train}
    for w in corpus.writers():
        if w not in train_writers:
            log.warning("writer %s has no training characters and cannot be identified", w)
    return Corpus(train, corpus.provenance), Corpus(test, corpus.provenance)


# ---------------------------------------------------------------------------
# synthetic corpus
# ---------------------------------------------------------------------------

TEMPLATE_BOX = 100.0
_BASE_STROKE_POINTS = 14

STYLE_BOUNDS = {
    "slant_deg": (-25.0, 25.0),
    "curvature": (-0.35, 0.35),
    "length_scale": (0.8, 1.2),
    "jitter": (0.1, 1.5),
    "speed": (0.5, 1.8),
    "reverse_rate": (0.0, 1.0),
}

_SLANTS = (-20.0, -10.0, 0.0, 10.0, 20.0)
_CURVATURES = (-0.30, 0.30, 0.0, -0.15, 0.15)
_LENGTH_SCALES = (1.0, 0.85, 1.15, 0.93, 1.07)
_JITTERS = (0.15, 0.75, 1.35, 0.45, 1.05)


@dataclass(frozen=True)
class WriterStyle:
    """Per-writer handwriting parameters.

    Writers come in pairs: members of a pair share the static shape
    parameters (slant, curvature, length scale, jitter) and differ in the
    dynamic ones (stroke direction habit and pen speed), which leave the
    rendered bitmap almost unchanged but flip the signature dynamics.
    """

    slant_deg: float
    curvature: float
    length_scale: float
    jitter: float
    speed: float
    reverse_rate: float

    def __post_init__(self):
        for name, (lo, hi) in STYLE_BOUNDS.items():
            v = getattr(self, name)
            if not lo <= v <= hi:
                raise InvalidInputError(f"style parameter {name}={v} outside [{lo}, {hi}]")


def writer_style(index: int, rng: np.random.Generator) -> WriterStyle:
    """Deterministic style grid plus a small random perturbation."""
    group = index // 2
    g = group % 5
    drift = 3.0 * (group // 5)

    def clamp(name, v):
        lo, hi = STYLE_BOUNDS[name]
        return float(min(max(v, lo), hi))

    return WriterStyle(
        slant_deg=clamp("slant_deg", _SLANTS[g] + drift + rng.uniform(-1.5, 1.5)),
        curvature=clamp("curvature", _CURVATURES[g] + rng.uniform(-0.02, 0.02)),
        length_scale=clamp("length_scale", _LENGTH_SCALES[g] + rng.uniform(-0.02, 0.02)),
        jitter=clamp("jitter", _JITTERS[g] + rng.uniform(-0.05, 0.05)),
        speed=clamp("speed", (0.75 if index % 2 else 1.35) + rng.uniform(-0.05, 0.05)),
        reverse_rate=1.0 if index % 2 else 0.0,
    )


_STROKE_VOCAB_SIZE = 14


def _make_stroke_vocab(rng: np.random.Generator):
    """Shared stroke archetypes (start, direction, length, bow).

    Character classes are arrangements of these archetypes, so a writer's
    habits recur on familiar stroke forms even in character classes never
    seen during training.
    """
    vocab = []
    for i in range(_STROKE_VOCAB_SIZE):
        # like real handwriting, strokes run mostly rightward or downward
        base = 0.0 if i % 2 == 0 else math.pi / 2.0
        vocab.append({
            "p0": rng.uniform(12.0, 88.0, size=2),
            "theta": float(base + rng.uniform(-0.6, 0.6)),
            "length": float(rng.uniform(35.0, 80.0)),
            "bow": float(rng.uniform(-0.25, 0.25)),
        })
    return vocab


def _stroke_from_arc(arc, offset, length_tweak):
    p0 = arc["p0"] + offset
    length = arc["length"] * length_tweak
    p1 = p0 + length * np.array([math.cos(arc["theta"]), math.sin(arc["theta"])])
    p0 = np.clip(p0, 4.0, 96.0)
    p1 = np.clip(p1, 4.0, 96.0)
    chord = p1 - p0
    normal = np.array([-chord[1], chord[0]])
    ctrl = (p0 + p1) / 2.0 + arc["bow"] * normal
    t = np.linspace(0.0, 1.0, _BASE_STROKE_POINTS)[:, None]
    return (1 - t) ** 2 * p0 + 2 * (1 - t) * t * ctrl + t ** 2 * p1


def _make_template(rng: np.random.Generator, vocab):
    """One character class: 3-10 vocabulary strokes, individually placed."""
    n_strokes = int(rng.integers(3, 11))
    strokes = []
    for _ in range(n_strokes):
        arc = vocab[int(rng.integers(0, len(vocab)))]
        offset = rng.uniform(-8.0, 8.0, size=2)
        length_tweak = float(rng.uniform(0.9, 1.1))
        strokes.append(_stroke_from_arc(arc, offset, length_tweak))
    return strokes


def _apply_style(template, style: WriterStyle, rng: np.random.Generator):
    strokes = []
    shift = rng.uniform(-3.0, 3.0, size=2)
    slant = math.tan(math.radians(style.slant_deg))
    for base in template:
        pts = base.copy()
        centroid = pts.mean(axis=0)
        pts = centroid + (pts - centroid) * style.length_scale
        chord = pts[-1] - pts[0]
        norm = np.hypot(chord[0], chord[1])
        if norm > 0:
            normal = np.array([-chord[1], chord[0]]) / norm
            t = np.linspace(0.0, 1.0, pts.shape[0])
            pts = pts + normal[None, :] * (style.curvature * norm * 4.0 * t * (1 - t))[:, None]
        pts[:, 0] += slant * (pts[:, 1] - TEMPLATE_BOX / 2.0)
        count = max(4, round(pts.shape[0] * style.speed))
        src = np.arange(pts.shape[0], dtype=np.float64)
        dst = np.linspace(0.0, pts.shape[0] - 1, count)
        pts = np.stack([np.interp(dst, src, pts[:, 0]), np.interp(dst, src, pts[:, 1])], axis=1)
        pts = pts + rng.normal(0.0, style.jitter, size=pts.shape)
        if rng.random() < style.reverse_rate:
            pts = pts[::-1].copy()
        strokes.append(pts + shift)
    return strokes


def synth_corpus(num_writers: int, chars_per_writer: int, rng: np.random.Generator,
                 num_classes: int = None) -> Corpus:
    """Generate a corpus of synthetic writers over shared templates.

    Character classes are shared templates; each writer renders them in
    their own style. Instances of a class cycle through each writer's
    sequence, so sequential grouping of one writer's characters mixes
    classes the way lines of running text would.
    """
    if num_writers < 1 or chars_per_writer < 1:
        raise ConfigError("need at least one writer and one character per writer")
    if num_classes is None:
        num_classes = min(40, chars_per_writer)
    if num_classes < 1:
        raise ConfigError(f"need at least one character class, got {num_classes}")
    vocab = _make_stroke_vocab(rng)
    templates = [_make_template(rng, vocab) for _ in range(num_classes)]
    styles = [writer_style(i, rng) for i in range(num_writers)]
    chars = []
    for w in range(num_writers):
        for j in range(chars_per_writer):
            cls = j % num_classes
            strokes = _apply_style(templates[cls], styles[w], rng)
            chars.append(InkCharacter(strokes=strokes, writer_id=f"w{w:02d}",
                                      char_label=f"c{cls:03d}", normalized=False))
    return Corpus(chars, provenance="synthetic")
