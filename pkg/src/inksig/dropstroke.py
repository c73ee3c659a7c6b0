"""Stroke-dropout augmentation (DropStroke).

An n-stroke character yields 2^n - 1 non-empty stroke subsets (the
original included, the empty character excluded), so a handful of
prototypes per writer expands into a far larger training population.
Because the subset count depends only on n, writers with elaborate
characters would dominate a naive expansion; `balanced_training_stream`
equalizes writer exposure by sampling prototypes uniformly per writer
before dropping.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, InvalidInputError
from .trajectory import InkCharacter

ENUMERATION_GUARD = 20

MODE_ENUMERATE = "enumerate"
MODE_UNIFORM_VARIANT = "sample-uniform-variant"
MODE_UNIFORM_M = "sample-uniform-m"


@dataclass(frozen=True)
class DropPolicy:
    """How variants are drawn.

    sample-uniform-m draws the number of dropped strokes m uniformly from
    {0, ..., floor(max_drop_fraction * n)} and then a uniform m-subset;
    sample-uniform-variant draws uniformly over all 2^n - 1 non-empty
    subsets (max_drop_fraction does not apply there).
    """

    mode: str = MODE_UNIFORM_M
    max_drop_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.mode not in (MODE_ENUMERATE, MODE_UNIFORM_VARIANT, MODE_UNIFORM_M):
            raise InvalidInputError(f"unknown drop mode: {self.mode!r}")
        if not 0.0 <= self.max_drop_fraction < 1.0:
            raise InvalidInputError(
                f"max_drop_fraction must be in [0, 1), got {self.max_drop_fraction}"
            )


def variant_count(n_strokes: int) -> int:
    """2^n - 1 non-empty stroke subsets of an n-stroke character."""
    if n_strokes < 1:
        raise InvalidInputError(f"need at least one stroke, got {n_strokes}")
    return 2 ** n_strokes - 1


def drop_count(n: int, m: int) -> int:
    """Number of ways to drop m of n strokes: the binomial C(n, m)."""
    if m < 0 or m > n:
        raise InvalidInputError(f"need 0 <= m <= n, got n={n}, m={m}")
    return math.comb(n, m)


def _subset(ch: InkCharacter, mask: int) -> InkCharacter:
    strokes = [s for i, s in enumerate(ch.strokes) if mask >> i & 1]
    return replace(ch, strokes=strokes)


def enumerate_variants(ch: InkCharacter):
    """All non-empty stroke subsets, in ascending subset-bitmask order.

    Bit i of the mask selects stroke i; stroke order and stroke data are
    inherited from the prototype unchanged.
    """
    n = ch.n_strokes
    if n > ENUMERATION_GUARD:
        raise InvalidInputError(
            f"refusing to enumerate 2^{n} - 1 variants (> {ENUMERATION_GUARD} strokes); "
            "use sampling instead"
        )
    return [_subset(ch, mask) for mask in range(1, 2 ** n)]


def sample_variant(ch: InkCharacter, policy: DropPolicy, rng: np.random.Generator) -> InkCharacter:
    """Draw one variant of a character per the policy."""
    n = ch.n_strokes
    if n == 1:
        return ch
    if policy.mode == MODE_UNIFORM_VARIANT:
        mask = int(rng.integers(1, 2 ** n))
        return _subset(ch, mask)
    max_m = int(policy.max_drop_fraction * n)
    m = int(rng.integers(0, max_m + 1))
    if m == 0:
        return ch
    dropped = set(rng.choice(n, size=m, replace=False).tolist())
    strokes = [s for i, s in enumerate(ch.strokes) if i not in dropped]
    return replace(ch, strokes=strokes)


def balanced_training_stream(prototypes_by_writer: dict, per_writer_quota: int,
                             policy: DropPolicy, rng: np.random.Generator):
    """Yield augmented characters, balanced per writer.

    Each block of quota * n_writers consecutive samples (one epoch)
    contains exactly per_writer_quota samples per writer: a uniformly
    chosen prototype of that writer with one sampled variant applied.
    Sample order within an epoch is shuffled. The generator is infinite.
    """
    writers = sorted(prototypes_by_writer)
    for w in writers:
        if not prototypes_by_writer[w]:
            raise ConfigError(f"writer {w!r} has no prototypes")
    if per_writer_quota < 1:
        raise ConfigError(f"per-writer quota must be >= 1, got {per_writer_quota}")
    while True:
        epoch = []
        for w in writers:
            protos = prototypes_by_writer[w]
            picks = rng.integers(0, len(protos), size=per_writer_quota)
            for p in picks:
                epoch.append(sample_variant(protos[p], policy, rng))
        order = rng.permutation(len(epoch))
        for i in order:
            yield epoch[i]
