"""End-to-end wiring: corpus -> augmented features -> trained network.

The training pipeline per sample is drop -> normalize -> distort ->
render: stroke dropout happens on raw ink, the surviving strokes are
re-normalized into the grid (a variant is a new character), distorted,
and rasterized into signature feature maps. All randomness flows from a
single run seed through named substreams, so runs are reproducible.
"""

from dataclasses import dataclass, field

import numpy as np

from .cnn import (DROPOUT_RATES, PAPER_CONV_WIDTHS, PAPER_FC_UNITS,
                  Network, TrainConfig, train)
from .dataset import Corpus
from .dropstroke import MODE_UNIFORM_M, DropPolicy, balanced_training_stream
from .errors import ConfigError
from .rasterize import DEFAULT_WINDOW, render
from .signature import sig_dim
from .trajectory import DistortLimits, affine_distort, normalize


def character_features(ch, level, delta=DEFAULT_WINDOW, collision="last",
                       dtype=np.float32):
    """Normalize (if needed) and render one character; (M, 96, 96) array."""
    c = ch if ch.normalized else normalize(ch)
    return render(c, level, delta, collision=collision).maps.astype(dtype)


@dataclass
class TrainSettings:
    """Everything a training run depends on, in one reproducible bundle."""

    seed: int
    level: int = 3
    delta: int = DEFAULT_WINDOW
    dropstroke: bool = True
    drop_mode: str = MODE_UNIFORM_M
    max_drop_fraction: float = 0.5
    distort: bool = True
    distort_limits: DistortLimits = field(default_factory=DistortLimits)
    conv_widths: tuple = PAPER_CONV_WIDTHS
    fc_units: int = PAPER_FC_UNITS
    dropout_rates: tuple = DROPOUT_RATES
    epochs: int = 10
    quota: int = 60  # samples per writer per epoch
    minibatch: int = 100
    lr: float = 0.01
    lr_decay: float = 0.7
    collision: str = "last"

    def drop_policy(self) -> DropPolicy:
        if not self.dropstroke:
            # uniform-m with zero drop fraction always yields the prototype
            return DropPolicy(mode=MODE_UNIFORM_M, max_drop_fraction=0.0)
        return DropPolicy(mode=self.drop_mode, max_drop_fraction=self.max_drop_fraction)

    def substream(self, name: str) -> np.random.Generator:
        """Named child RNG derived from the run seed."""
        offsets = {"stream": 0, "distort": 1, "dropout": 2, "init": 3, "eval": 4}
        return np.random.default_rng([self.seed, offsets[name]])


def training_stream(train_corpus: Corpus, settings: TrainSettings, writer_index: dict):
    """Yield (features, writer_index) pairs, balanced per writer."""
    protos = train_corpus.by_writer()
    policy = settings.drop_policy()
    rng = settings.substream("stream")
    distort_rng = settings.substream("distort")
    for ch in balanced_training_stream(protos, settings.quota, policy, rng):
        c = normalize(ch)
        if settings.distort:
            c = affine_distort(c, distort_rng, settings.distort_limits)
        yield (character_features(c, settings.level, settings.delta,
                                  collision=settings.collision),
               writer_index[ch.writer_id])


def train_writer_model(train_corpus: Corpus, settings: TrainSettings):
    """Train a fresh network on a corpus; returns (net, epoch_rows, writers).

    Writer classes are indexed in sorted writer-id order, which is also
    the convention evaluation uses to map corpus writers onto model
    outputs.
    """
    writers = train_corpus.writers()
    if not writers:
        raise ConfigError("training corpus has no characters")
    writer_index = {w: i for i, w in enumerate(writers)}
    net = Network.build(
        sig_dim(settings.level), len(writers),
        conv_widths=settings.conv_widths, fc_units=settings.fc_units,
        dropout_rates=settings.dropout_rates,
        seed=settings.substream("init"),
    )
    cfg = TrainConfig(
        epochs=settings.epochs,
        samples_per_epoch=settings.quota * len(writers),
        minibatch=settings.minibatch,
        lr=settings.lr,
        lr_decay=settings.lr_decay,
        seed=settings.substream("dropout"),
    )
    rows = train(net, training_stream(train_corpus, settings, writer_index), cfg)
    return net, rows, writers
