import numpy as np
import pytest

from helpers import make_char

from inksig import (DistortLimits, InvalidInputError, affine_distort,
                    affine_transform, normalize, resample)
from inksig.trajectory import BOX_SIZE, GRID_SIZE, InkCharacter


class TestNormalize:
    def test_square_box_scales_and_centers(self):
        ch = make_char([[(0, 0), (480, 480)]])
        out = normalize(ch)
        assert out.normalized
        assert np.allclose(out.strokes[0], [(24, 24), (72, 72)])

    def test_single_dot_is_centered_without_scaling(self):
        ch = make_char([[(123.0, -7.0)]])
        out = normalize(ch)
        assert np.allclose(out.strokes[0], [(48, 48)])

    def test_wide_box_preserves_aspect_ratio(self):
        ch = make_char([[(0, 0), (100, 0)], [(0, 50), (100, 50)]])
        out = normalize(ch)
        xmin, ymin, xmax, ymax = out.bounding_box()
        assert xmax - xmin == pytest.approx(48.0)
        assert ymax - ymin == pytest.approx(24.0)
        assert (xmin + xmax) / 2 == pytest.approx(48.0)
        assert (ymin + ymax) / 2 == pytest.approx(48.0)

    def test_vertical_line_scales_by_nonzero_extent(self):
        ch = make_char([[(5, 0), (5, 10)]])
        out = normalize(ch)
        assert np.allclose(out.strokes[0], [(48, 24), (48, 72)])

    def test_idempotent(self, rng):
        ch = make_char([rng.uniform(-50, 400, (7, 2)) for _ in range(3)])
        once = normalize(ch)
        twice = normalize(once)
        for a, b in zip(once.strokes, twice.strokes):
            assert np.allclose(a, b, atol=1e-9)

    def test_preserves_stroke_structure(self, rng):
        strokes = [rng.uniform(0, 300, (int(rng.integers(1, 9)), 2)) for _ in range(5)]
        out = normalize(make_char(strokes))
        assert out.n_strokes == 5
        assert [s.shape[0] for s in out.strokes] == [s.shape[0] for s in strokes]

    def test_empty_character_rejected(self):
        with pytest.raises(InvalidInputError):
            InkCharacter(strokes=[], writer_id="w", char_label="c")
        with pytest.raises(InvalidInputError):
            make_char([np.empty((0, 2))])


class TestResample:
    def test_vertical_segment_spacing(self):
        out = resample(np.array([(0.0, 0.0), (0.0, 2.0)]), 0.5)
        assert out.shape == (5, 2)
        assert np.allclose(out[:, 1], [0, 0.5, 1.0, 1.5, 2.0])

    def test_already_dense_is_unchanged(self):
        pts = np.array([(0.0, 0.0), (0.3, 0.0), (0.6, 0.0)])
        out = resample(pts, 0.5)
        assert np.array_equal(out, pts)

    def test_single_point_unchanged(self):
        pts = np.array([(1.0, 2.0)])
        assert np.array_equal(resample(pts, 0.5), pts)

    def test_gap_bound_and_endpoint_preservation(self, rng):
        pts = rng.uniform(0, 96, (12, 2))
        out = resample(pts, 0.5)
        gaps = np.hypot(*np.diff(out, axis=0).T)
        assert gaps.max() <= 0.5 + 1e-12
        for p in pts:
            assert np.min(np.hypot(out[:, 0] - p[0], out[:, 1] - p[1])) < 1e-9

    def test_inserted_points_are_collinear(self, rng):
        pts = rng.uniform(0, 96, (6, 2))
        out = resample(pts, 0.5)
        # every consecutive triple of inserted points has zero cross product
        # unless it spans an original vertex
        orig = {tuple(np.round(p, 9)) for p in pts}
        for i in range(1, len(out) - 1):
            if tuple(np.round(out[i], 9)) in orig:
                continue
            a, b, c = out[i - 1], out[i], out[i + 1]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            assert abs(cross) < 1e-9

    def test_nonpositive_step_rejected(self):
        with pytest.raises(InvalidInputError):
            resample(np.array([(0.0, 0.0), (1.0, 1.0)]), 0.0)


class TestAffine:
    def test_identity_limits_leave_input_unchanged(self, rng):
        ch = normalize(make_char([rng.uniform(0, 100, (5, 2))]))
        out = affine_distort(ch, rng, DistortLimits.identity())
        assert np.allclose(out.strokes[0], ch.strokes[0], atol=1e-12)

    def test_exact_quarter_rotation(self):
        ch = make_char([[(40.0, 48.0), (56.0, 48.0)]], normalized=True)
        out = affine_transform(ch, 0.0, 0.0, 90.0, 1.0)
        assert np.allclose(out.strokes[0], [(48, 40), (48, 56)], atol=1e-12)

    def test_default_limits_keep_ink_inside_grid(self, rng):
        ch = normalize(make_char([rng.uniform(0, 250, (8, 2)) for _ in range(3)]))
        limits = DistortLimits()
        for _ in range(1000):
            out = affine_distort(ch, rng, limits)
            pts = out.all_points()
            assert out.normalized
            assert pts.min() >= 0.0
            assert pts.max() < GRID_SIZE

    def test_unnormalized_input_rejected(self, rng):
        ch = make_char([[(0, 0), (500, 500)]])
        with pytest.raises(InvalidInputError):
            affine_distort(ch, rng)

    def test_escaping_transform_renormalizes(self):
        ch = make_char([[(24.0, 24.0), (72.0, 72.0)]], normalized=True)
        out = affine_transform(ch, 0.0, 0.0, 0.0, 3.0)
        pts = out.all_points()
        assert pts.min() >= 0.0 and pts.max() < GRID_SIZE
        xmin, ymin, xmax, ymax = out.bounding_box()
        assert max(xmax - xmin, ymax - ymin) == pytest.approx(BOX_SIZE)
