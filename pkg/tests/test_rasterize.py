import os

import numpy as np
import pytest

from helpers import make_char

from inksig import InvalidInputError, equalize, export_images, normalize, render
from inksig.signature import sig_dim


def _horizontal_char():
    return make_char([[(24.0, 48.0), (72.0, 48.0)]], normalized=True)


class TestRender:
    def test_level0_is_the_binary_trace_bitmap(self):
        t = render(_horizontal_char(), 0)
        assert t.maps.shape == (1, 96, 96)
        assert set(np.unique(t.maps[0])) <= {0.0, 1.0}
        assert t.maps[0, 48, 24:72].all()

    def test_background_is_exactly_zero(self, rng):
        ch = normalize(make_char([rng.uniform(0, 200, (6, 2)) for _ in range(2)]))
        t = render(ch, 3)
        mask = t.trace_mask()
        assert np.all(t.maps[:, ~mask] == 0.0)

    def test_horizontal_stroke_level1_channels(self):
        t = render(_horizontal_char(), 1)
        mask = t.trace_mask()
        # x-increment channel is positive along the trace, y-increment zero
        assert np.all(t.maps[1][mask] > 0.0)
        assert np.all(t.maps[2][mask] == 0.0)

    def test_channel_count_follows_dimension_law(self):
        ch = _horizontal_char()
        for n in range(4):
            assert render(ch, n).channels == sig_dim(n)

    def test_channels_share_the_trace_support(self, rng):
        ch = normalize(make_char([rng.uniform(0, 200, (7, 2)) for _ in range(3)]))
        t = render(ch, 3)
        mask = t.trace_mask()
        nonzero_anywhere = (t.maps != 0.0).any(axis=0)
        assert np.array_equal(nonzero_anywhere, mask)

    def test_deterministic(self, rng):
        ch = normalize(make_char([rng.uniform(0, 200, (9, 2)) for _ in range(3)]))
        a = render(ch, 2)
        b = render(ch, 2)
        assert np.array_equal(a.maps, b.maps)

    def test_unnormalized_input_rejected(self):
        with pytest.raises(InvalidInputError):
            render(make_char([[(0, 0), (500, 0)]]), 1)

    def test_max_magnitude_collision_policy(self):
        # two opposite-direction strokes painting the same pixel row
        ch = make_char([[(24.0, 48.2), (72.0, 48.2)], [(72.0, 48.7), (24.0, 48.7)]],
                       normalized=True)
        last = render(ch, 1, collision="last")
        mx = render(ch, 1, collision="max")
        mask = last.trace_mask()
        # last-write-wins: the later right-to-left stroke overwrites everything
        assert np.all(last.maps[1][mask] < 0.0)
        assert np.all(np.abs(mx.maps[1][mask]) >= np.abs(last.maps[1][mask]) - 1e-12)


class TestEqualize:
    def test_constant_trace_maps_to_one(self):
        m = np.zeros((96, 96))
        m[10, 10:20] = 7.5
        out = equalize(m)
        assert np.all(out[10, 10:20] == 1.0)
        assert out.sum() == 10.0

    def test_all_zero_channel_unchanged(self):
        out = equalize(np.zeros((96, 96)))
        assert np.all(out == 0.0)

    def test_two_valued_trace_hits_half_and_one(self):
        m = np.zeros((4, 4))
        m[0, :2] = 1.0
        m[0, 2:] = 5.0
        out = equalize(m)
        assert np.all(out[0, :2] == 0.5)
        assert np.all(out[0, 2:] == 1.0)

    def test_zero_valued_trace_pixels_need_the_mask(self):
        m = np.zeros((4, 4))
        mask = np.zeros((4, 4), dtype=bool)
        mask[1, :3] = True
        m[1, 0] = -2.0  # other two trace pixels carry value 0
        out = equalize(m, mask)
        assert out[1, 0] == pytest.approx(1 / 3)
        assert np.all(out[1, 1:3] == 1.0)
        assert np.all(out[~mask] == 0.0)


class TestExportImages:
    def test_writes_one_pgm_per_channel(self, tmp_path, rng):
        ch = normalize(make_char([rng.uniform(0, 200, (8, 2)) for _ in range(2)]))
        t = render(ch, 2)
        paths = export_images(t, tmp_path / "maps")
        assert len(paths) == sig_dim(2)
        names = sorted(os.path.basename(p) for p in paths)
        assert names[0] == "channel_00.pgm"
        data = open(paths[0], "rb").read()
        assert data.startswith(b"P5\n96 96\n255\n")
        assert len(data) == len(b"P5\n96 96\n255\n") + 96 * 96

    def test_export_is_bit_stable(self, tmp_path, rng):
        ch = normalize(make_char([rng.uniform(0, 200, (8, 2)) for _ in range(2)]))
        t = render(ch, 1)
        a = export_images(t, tmp_path / "a")
        b = export_images(t, tmp_path / "b")
        for pa, pb in zip(a, b):
            assert open(pa, "rb").read() == open(pb, "rb").read()
