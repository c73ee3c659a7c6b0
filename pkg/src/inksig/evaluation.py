"""Identification protocol: variant-averaged prediction, top-k, groups.

A character can be tested several times (fresh stroke-dropout variants
of it) and the prediction vectors averaged. Groups emulate larger
writing samples: each writer's test characters are partitioned
sequentially into blocks of g characters and the block members'
predictions are combined into one identification decision.
"""

import csv
import json

import numpy as np

from .dataset import Corpus
from .dropstroke import DropPolicy, sample_variant
from .errors import ConfigError, InvalidInputError
from .pipeline import character_features
from .rasterize import DEFAULT_WINDOW

TOPK_DEFAULT = (1, 5, 10, 15, 20)
GROUP_SIZES_DEFAULT = (1, 2, 3, 4, 5, 6, 10, 15, 20)


def averaged_predict(net, ch, k, policy: DropPolicy, rng, level, delta=DEFAULT_WINDOW):
    """Mean probability vector over k dropout variants of one character.

    k=1 tests the prototype itself with no dropping.
    """
    if k < 1:
        raise InvalidInputError(f"tests per character must be >= 1, got {k}")
    if k == 1:
        variants = [ch]
    else:
        variants = [sample_variant(ch, policy, rng) for _ in range(k)]
    batch = np.stack([character_features(v, level, delta) for v in variants])
    probs, _ = net.forward(batch)
    return probs.mean(axis=0)


def topk_accuracy(probs, labels, ks=TOPK_DEFAULT):
    """Fraction of samples whose true writer ranks in the top k.

    Ties in probability break toward the lower writer index.
    """
    probs = np.asarray(probs)
    labels = np.asarray(labels)
    if probs.ndim != 2 or probs.shape[0] != labels.shape[0] or probs.shape[0] < 1:
        raise InvalidInputError(f"need matching predictions and labels, got {probs.shape}")
    order = np.argsort(-probs, axis=1, kind="stable")
    inv = np.empty_like(order)
    rows = np.arange(probs.shape[0])[:, None]
    inv[rows, order] = np.arange(probs.shape[1])[None, :]
    rank = inv[np.arange(probs.shape[0]), labels]
    return {int(k): float(np.mean(rank < k)) for k in ks}


def combine_predictions(probs, mode="mean"):
    """Fuse several prediction vectors into one distribution."""
    probs = np.asarray(probs)
    if mode == "mean":
        return probs.mean(axis=0)
    if mode == "logprob":
        score = np.log(np.maximum(probs, 1e-300)).sum(axis=0)
        score -= score.max()
        e = np.exp(score)
        return e / e.sum()
    raise InvalidInputError(f"unknown combination mode: {mode!r}")


def predict_corpus(net, corpus: Corpus, writers, tests_per_char=1,
                   policy: DropPolicy = DropPolicy(), seed=0, level=3,
                   delta=DEFAULT_WINDOW):
    """Averaged predictions for every character, in corpus order.

    Returns (probs (S, W), labels (S,)). Each character draws from its
    own RNG substream indexed by corpus position, so the result is
    independent of evaluation order.
    """
    index = {w: i for i, w in enumerate(writers)}
    unknown = {ch.writer_id for ch in corpus.characters} - set(index)
    if unknown:
        raise ConfigError(f"corpus writers {sorted(unknown)} are not enrolled in the model")
    if len(writers) != net.num_writers:
        raise ConfigError(
            f"model identifies {net.num_writers} writers, corpus enrolls {len(writers)}"
        )
    if not corpus.characters:
        raise ConfigError("evaluation corpus is empty")
    probs = np.empty((len(corpus.characters), net.num_writers))
    labels = np.empty(len(corpus.characters), dtype=np.int64)
    for i, ch in enumerate(corpus.characters):
        rng = np.random.default_rng([seed, i])
        probs[i] = averaged_predict(net, ch, tests_per_char, policy, rng, level, delta)
        labels[i] = index[ch.writer_id]
    return probs, labels


def group_rank_table(probs, labels, group_size, ks=TOPK_DEFAULT, combine="mean"):
    """Top-k table after combining sequential per-writer groups.

    Characters of each writer are taken in their given order, cut into
    blocks of exactly group_size (trailing remainder dropped), and each
    block's predictions are fused into a single one.
    """
    if group_size < 1:
        raise InvalidInputError(f"group size must be >= 1, got {group_size}")
    probs = np.asarray(probs)
    labels = np.asarray(labels)
    gp, gl = [], []
    for w in np.unique(labels):
        rows = np.flatnonzero(labels == w)
        for s in range(0, len(rows) - group_size + 1, group_size):
            gp.append(combine_predictions(probs[rows[s:s + group_size]], combine))
            gl.append(w)
    if not gp:
        raise ConfigError(
            f"no writer has {group_size} test characters; nothing to group"
        )
    return topk_accuracy(np.stack(gp), np.array(gl), ks)


def group_eval(net, corpus: Corpus, writers, group_size, tests_per_char=1,
               policy: DropPolicy = DropPolicy(), seed=0, level=3,
               delta=DEFAULT_WINDOW, ks=TOPK_DEFAULT, combine="mean"):
    """Predict a corpus and score it at one mimic-material group size."""
    probs, labels = predict_corpus(net, corpus, writers, tests_per_char,
                                   policy, seed, level, delta)
    return group_rank_table(probs, labels, group_size, ks, combine)


def write_rank_csv(path, table):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["k", "accuracy"])
        for k in sorted(table):
            w.writerow([k, f"{table[k]:.6f}"])


def write_summary_json(path, summary):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
