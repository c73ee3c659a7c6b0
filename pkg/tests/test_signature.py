import numpy as np
import pytest

from helpers import block_rel_err, random_polyline
from oracle import discrete_signature

from inksig import (InvalidInputError, chen_concat, identity_signature,
                    path_signature, resample, segment_signature, sig_dim,
                    windowed_signature_array, windowed_signatures, word_index)
from inksig.signature import SignatureVector, level_offset


class TestDimensions:
    def test_sig_dim_values(self):
        assert sig_dim(0) == 1
        assert sig_dim(2) == 7
        assert sig_dim(3) == 15

    def test_sig_dim_law(self):
        for n in range(7):
            assert sig_dim(n) == 2 ** (n + 1) - 1

    def test_sig_dim_negative_rejected(self):
        with pytest.raises(InvalidInputError):
            sig_dim(-1)

    def test_level_offsets_partition_the_vector(self):
        for n in range(5):
            assert level_offset(n + 1) == sig_dim(n)

    def test_word_index(self):
        assert word_index(()) == 0
        assert word_index((1,)) == 1
        assert word_index((2,)) == 2
        assert word_index((1, 1)) == 3
        assert word_index((1, 2, 2)) == 10


class TestSegmentSignature:
    def test_unit_x_displacement_level2(self):
        s = segment_signature((1.0, 0.0), 2)
        assert np.array_equal(s.values, [1.0, 1.0, 0.0, 0.5, 0.0, 0.0, 0.0])

    def test_zero_displacement_is_identity(self):
        s = segment_signature((0.0, 0.0), 4)
        assert s.values[0] == 1.0
        assert np.all(s.values[1:] == 0.0)

    def test_tensor_power_entry(self):
        # word (1,2,2) of displacement (1,2): 1*2*2 / 3!
        s = segment_signature((1.0, 2.0), 3)
        assert s.entry((1, 2, 2)) == pytest.approx(2.0 / 3.0, rel=1e-15)

    def test_level_blocks_are_scaled_tensor_powers(self, rng):
        d = rng.standard_normal(2)
        s = segment_signature(d, 3)
        fact = 1.0
        for k in range(4):
            if k:
                fact *= k
            want = np.array([1.0])
            for _ in range(k):
                want = np.multiply.outer(want, d).ravel()
            assert np.allclose(s.level_block(k), want / fact, rtol=1e-14)


class TestChenConcat:
    def test_identity_is_the_unit(self, rng):
        a = path_signature(random_polyline(rng, 8), 3)
        e = identity_signature(3)
        assert np.allclose(chen_concat(a, e).values, a.values, rtol=1e-14)
        assert np.allclose(chen_concat(e, a).values, a.values, rtol=1e-14)

    def test_displacements_add_at_level_one(self):
        a = segment_signature((1.0, 0.0), 1)
        b = segment_signature((1.0, 0.0), 1)
        c = chen_concat(a, b)
        assert np.allclose(c.values, [1.0, 2.0, 0.0])

    def test_cross_term_matches_oracle(self):
        a = segment_signature((1.0, 0.0), 2)
        b = segment_signature((0.0, 1.0), 2)
        c = chen_concat(a, b)
        assert c.entry((1, 2)) == pytest.approx(1.0, abs=1e-12)
        assert c.entry((2, 1)) == pytest.approx(0.0, abs=1e-12)
        want = discrete_signature([(0, 0), (1, 0), (1, 1)], 2, step_frac=1e-4)
        assert block_rel_err(c.values, want, 2) < 1e-6

    def test_level_mismatch_rejected(self):
        with pytest.raises(InvalidInputError):
            chen_concat(identity_signature(2), identity_signature(3))


class TestPathSignature:
    def test_single_point_is_identity(self):
        s = path_signature([(3.0, 4.0)], 3)
        assert np.array_equal(s.values, identity_signature(3).values)

    def test_collinear_split_agrees_with_merged_segment(self):
        s = path_signature([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], 2)
        assert s.entry((1, 1)) == pytest.approx(2.0, rel=1e-14)
        merged = segment_signature((2.0, 0.0), 2)
        assert np.allclose(s.values, merged.values, rtol=1e-14, atol=1e-14)

    def test_matches_discrete_oracle(self, rng):
        for _ in range(3):
            pts = rng.uniform(0, 96, (10, 2))
            got = path_signature(pts, 3).values
            want = discrete_signature(pts, 3)
            assert block_rel_err(got, want, 3) < 1e-6

    def test_level0_is_one(self, rng):
        for _ in range(20):
            s = path_signature(random_polyline(rng, 12), 3)
            assert s.values[0] == 1.0

    def test_empty_points_rejected(self):
        with pytest.raises(InvalidInputError):
            path_signature(np.empty((0, 2)), 2)


class TestAlgebraicProperties:
    def test_concatenation_consistency(self, rng):
        for _ in range(100):
            pts = random_polyline(rng, 12, min_points=3)
            cut = int(rng.integers(1, len(pts) - 1))
            whole = path_signature(pts, 3)
            joined = chen_concat(path_signature(pts[:cut + 1], 3),
                                 path_signature(pts[cut:], 3))
            assert block_rel_err(joined.values, whole.values, 3) < 1e-9

    def test_reparameterization_invariance(self, rng):
        for _ in range(100):
            pts = random_polyline(rng, 12)
            dense = resample(pts, 1.5)
            assert len(dense) >= len(pts)
            a = path_signature(pts, 3).values
            b = path_signature(dense, 3).values
            assert block_rel_err(b, a, 3) < 1e-9

    def test_scaling_homogeneity(self, rng):
        lam = 2.0
        factors = np.concatenate([[lam ** k] * 2 ** k for k in range(4)])
        for _ in range(100):
            pts = random_polyline(rng, 12)
            a = path_signature(pts, 3).values
            b = path_signature(pts * lam, 3).values
            assert block_rel_err(b, a * factors, 3) < 1e-12

    def test_reversal_inverse(self, rng):
        for _ in range(100):
            pts = random_polyline(rng, 12)
            s = path_signature(pts, 3)
            r = path_signature(pts[::-1], 3)
            ident = chen_concat(s, r)
            assert np.abs(ident.values[1:]).max() < 1e-9
            assert ident.values[0] == pytest.approx(1.0, rel=1e-12)


class TestWindowedSignatures:
    def test_straight_stroke_interior_collapses_to_segment(self):
        stroke = np.stack([np.linspace(0, 5, 11), np.zeros(11)], axis=1)
        arr = windowed_signature_array(stroke, 2, delta=2)
        mid = 5
        window_disp = stroke[mid + 2] - stroke[mid - 2]
        want = segment_signature(window_disp, 2).values
        assert np.allclose(arr[mid], want, rtol=1e-12, atol=1e-14)

    def test_endpoints_clip_to_one_side(self, rng):
        stroke = random_polyline(rng, 9, min_points=6)
        arr = windowed_signature_array(stroke, 3, delta=2)
        assert np.allclose(arr[0], path_signature(stroke[:3], 3).values, rtol=1e-12)
        assert np.allclose(arr[-1], path_signature(stroke[-3:], 3).values, rtol=1e-12)

    def test_each_window_matches_direct_recompute(self, rng):
        stroke = random_polyline(rng, 14, min_points=10)
        delta = 3
        arr = windowed_signature_array(stroke, 3, delta=delta)
        for i in range(len(stroke)):
            lo, hi = max(0, i - delta), min(len(stroke) - 1, i + delta)
            want = path_signature(stroke[lo:hi + 1], 3).values
            assert np.allclose(arr[i], want, rtol=1e-11, atol=1e-11)

    def test_prefix_variant_matches_growing_subpaths(self, rng):
        stroke = random_polyline(rng, 10, min_points=6)
        arr = windowed_signature_array(stroke, 2, delta=None)
        for i in range(len(stroke)):
            want = path_signature(stroke[:i + 1], 2).values
            assert np.allclose(arr[i], want, rtol=1e-11, atol=1e-11)

    def test_list_wrapper_returns_signature_vectors(self, rng):
        stroke = random_polyline(rng, 6, min_points=4)
        sigs = windowed_signatures(stroke, 2, delta=2)
        assert len(sigs) == len(stroke)
        assert all(isinstance(s, SignatureVector) and s.level == 2 for s in sigs)

    def test_bad_delta_rejected(self, rng):
        with pytest.raises(InvalidInputError):
            windowed_signature_array(random_polyline(rng, 5), 2, delta=0)
