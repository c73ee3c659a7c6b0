import numpy as np
import pytest

from helpers import make_char

from inksig import (ConfigError, Corpus, DropPolicy, InvalidInputError,
                    averaged_predict, combine_predictions, group_rank_table,
                    predict_corpus, synth_corpus, topk_accuracy)
from inksig.cnn import Network
from inksig.evaluation import write_rank_csv


@pytest.fixture(scope="module")
def small_net():
    # untrained but deterministic; enough to exercise the protocol
    return Network.build(3, 4, conv_widths=(2, 2, 2, 2, 2, 2), fc_units=5, seed=3)


@pytest.fixture(scope="module")
def small_corpus():
    return synth_corpus(4, 6, np.random.default_rng(2), num_classes=3)


class TestAveragedPredict:
    def test_k1_equals_plain_predict(self, small_net, small_corpus):
        from inksig.pipeline import character_features
        ch = small_corpus.characters[0]
        rng = np.random.default_rng(0)
        p = averaged_predict(small_net, ch, 1, DropPolicy(), rng, level=1, delta=2)
        direct, _ = small_net.forward(character_features(ch, 1, 2)[None])
        assert np.allclose(p, direct[0], atol=1e-7)

    def test_zero_drop_fraction_matches_k1(self, small_net, small_corpus):
        ch = small_corpus.characters[1]
        policy = DropPolicy(max_drop_fraction=0.0)
        p1 = averaged_predict(small_net, ch, 1, policy, np.random.default_rng(0), 1, 2)
        p20 = averaged_predict(small_net, ch, 20, policy, np.random.default_rng(0), 1, 2)
        assert np.allclose(p1, p20, atol=1e-6)

    def test_mean_is_a_distribution(self, small_net, small_corpus):
        for i, ch in enumerate(small_corpus.characters[:6]):
            p = averaged_predict(small_net, ch, 5, DropPolicy(),
                                 np.random.default_rng(i), 1, 2)
            assert np.all(p >= 0.0)
            assert p.sum() == pytest.approx(1.0, abs=1e-6)

    def test_k_zero_rejected(self, small_net, small_corpus):
        with pytest.raises(InvalidInputError):
            averaged_predict(small_net, small_corpus.characters[0], 0,
                             DropPolicy(), np.random.default_rng(0), 1, 2)


class TestTopkAccuracy:
    def test_perfect_predictions(self):
        probs = np.eye(6)
        labels = np.arange(6)
        table = topk_accuracy(probs, labels, (1, 3, 6))
        assert table == {1: 1.0, 3: 1.0, 6: 1.0}

    def test_uniform_predictions_with_deterministic_tie_break(self):
        w = 8
        probs = np.full((w, w), 1.0 / w)
        labels = np.arange(w)
        table = topk_accuracy(probs, labels, range(1, w + 1))
        for k in range(1, w + 1):
            assert table[k] == pytest.approx(k / w)

    def test_monotone_in_k(self, rng):
        probs = rng.random((50, 9))
        probs /= probs.sum(axis=1, keepdims=True)
        labels = rng.integers(0, 9, 50)
        table = topk_accuracy(probs, labels, range(1, 10))
        vals = [table[k] for k in range(1, 10)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))
        assert table[9] == 1.0

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            topk_accuracy(np.empty((0, 3)), np.empty(0, dtype=int), (1,))


class TestGrouping:
    def test_g1_equals_per_character(self, rng):
        probs = rng.random((30, 5))
        probs /= probs.sum(axis=1, keepdims=True)
        labels = np.repeat(np.arange(5), 6)
        assert group_rank_table(probs, labels, 1) == topk_accuracy(probs, labels)

    def test_whole_writer_group_with_perfect_classifier(self):
        labels = np.repeat(np.arange(3), 4)
        probs = np.eye(3)[labels]
        table = group_rank_table(probs, labels, 4, ks=(1,))
        assert table[1] == 1.0

    def test_trailing_remainder_dropped(self):
        labels = np.array([0, 0, 0, 1, 1])
        probs = np.eye(2)[labels]
        # g=2: writer 0 contributes one group, writer 1 one group
        table = group_rank_table(probs, labels, 2, ks=(1,))
        assert table[1] == 1.0
        with pytest.raises(ConfigError):
            group_rank_table(probs, labels, 6)

    def test_grouping_recovers_noisy_majority(self, rng):
        # per-character predictions are right 70% of the time; groups of 5
        # must be more accurate than single characters
        w, per = 4, 100
        labels = np.repeat(np.arange(w), per)
        probs = np.full((w * per, w), 0.05)
        for i, y in enumerate(labels):
            winner = y if rng.random() < 0.7 else int(rng.integers(0, w))
            probs[i, winner] = 0.85
        probs /= probs.sum(axis=1, keepdims=True)
        t1 = group_rank_table(probs, labels, 1, ks=(1,))
        t5 = group_rank_table(probs, labels, 5, ks=(1,))
        assert t5[1] >= t1[1]

    def test_combine_modes(self, rng):
        probs = rng.random((4, 3))
        probs /= probs.sum(axis=1, keepdims=True)
        mean = combine_predictions(probs, "mean")
        assert mean.sum() == pytest.approx(1.0)
        lp = combine_predictions(probs, "logprob")
        assert lp.sum() == pytest.approx(1.0)
        assert lp.argmax() == np.log(probs).sum(axis=0).argmax()
        with pytest.raises(InvalidInputError):
            combine_predictions(probs, "votes")


def test_group_eval_wires_prediction_and_grouping(small_net, small_corpus):
    from inksig import group_eval
    writers = small_corpus.writers()
    table = group_eval(small_net, small_corpus, writers, group_size=2,
                       tests_per_char=1, seed=3, level=1, delta=2, ks=(1, 4))
    assert set(table) == {1, 4}
    assert table[4] == 1.0


class TestPredictCorpus:
    def test_order_independent_rng_streams(self, small_net, small_corpus):
        writers = small_corpus.writers()
        a, la = predict_corpus(small_net, small_corpus, writers, tests_per_char=3,
                               seed=5, level=1, delta=2)
        b, lb = predict_corpus(small_net, small_corpus, writers, tests_per_char=3,
                               seed=5, level=1, delta=2)
        assert np.array_equal(a, b)
        assert np.array_equal(la, lb)

    def test_unknown_writer_rejected(self, small_net, small_corpus):
        with pytest.raises(ConfigError):
            predict_corpus(small_net, small_corpus, ["w00", "w01", "w02", "zzz"],
                           seed=0, level=1)

    def test_writer_count_mismatch_rejected(self, small_net, small_corpus):
        with pytest.raises(ConfigError):
            predict_corpus(small_net, small_corpus, ["w00", "w01"], seed=0, level=1)


def test_rank_csv_format(tmp_path):
    path = tmp_path / "rank.csv"
    write_rank_csv(path, {5: 0.75, 1: 0.5})
    assert path.read_text() == "k,accuracy\n1,0.500000\n5,0.750000\n"
