import math

import numpy as np
import pytest

from rotbox.anchors import LevelSpec
from rotbox.errors import ShapeMismatch, ValidationError
from rotbox.geometry import OrientedBox, contains_point, rigid_transform
from rotbox.lasa import (
    DIAMOND5,
    DIAMOND9,
    DIAMOND13,
    PATTERNS,
    RECT9,
    ScoreMap,
    align_score,
    bilinear_sample,
    pattern_by_name,
    sampling_points,
)

LEVEL = LevelSpec("P2", 4, 64, 64)


def affine_map(a, b, c, level=LEVEL):
    ys, xs = np.mgrid[0:level.height, 0:level.width]
    px = (xs + 0.5) * level.stride
    py = (ys + 0.5) * level.stride
    return ScoreMap(level, (a * px + b * py + c)[None])


class TestPatterns:
    def test_point_counts(self):
        assert len(RECT9.points) == 9
        assert len(DIAMOND5.points) == 5
        assert len(DIAMOND9.points) == 9
        assert len(DIAMOND13.points) == 13

    def test_centrally_symmetric(self):
        for pattern in PATTERNS.values():
            pts = {(round(u, 12), round(v, 12)) for u, v in pattern.points}
            assert pts == {(round(-u, 12), round(-v, 12)) for u, v in pts}

    def test_points_sum_to_zero(self):
        for pattern in PATTERNS.values():
            total = np.asarray(pattern.points).sum(axis=0)
            assert np.abs(total).max() < 1e-12

    def test_unknown_name(self):
        with pytest.raises(ValidationError):
            pattern_by_name("hexagon7")


class TestSamplingPoints:
    def test_diamond5_fixture(self):
        pts = sampling_points(OrientedBox(20, 30, 8, 4, 0), DIAMOND5)
        expect = {(20, 30), (22, 30), (18, 30), (20, 31), (20, 29)}
        assert {(round(x, 9), round(y, 9)) for x, y in pts} == expect

    def test_all_points_strictly_inside(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            box = OrientedBox(float(rng.uniform(-20, 20)), float(rng.uniform(-20, 20)),
                              float(rng.uniform(1, 40)), float(rng.uniform(1, 40)),
                              float(rng.uniform(-math.pi / 4 + 1e-9, math.pi / 4)))
            for pattern in PATTERNS.values():
                assert all(contains_point(box, p) for p in sampling_points(box, pattern))

    def test_rotation_equivariance(self):
        rng = np.random.default_rng(18)
        for _ in range(100):
            box = OrientedBox(0, 0, float(rng.uniform(2, 30)),
                              float(rng.uniform(2, 30)), 0.1)
            phi = float(rng.uniform(-0.5, 0.5))
            rotated = rigid_transform(box, phi)
            c, s = math.cos(phi), math.sin(phi)
            for pattern in PATTERNS.values():
                base = sampling_points(box, pattern)
                moved = sampling_points(rotated, pattern)
                expect = np.stack([c * base[:, 0] - s * base[:, 1],
                                   s * base[:, 0] + c * base[:, 1]], axis=1)
                assert np.allclose(moved, expect, atol=1e-9)


class TestBilinear:
    def test_constant(self):
        m = ScoreMap(LEVEL, np.full((1, 64, 64), 0.37))
        assert bilinear_sample(m, (13.7, 55.2), 0) == pytest.approx(0.37)

    def test_cell_center_exact(self):
        values = np.zeros((1, 64, 64))
        values[0, 5, 9] = 0.8
        m = ScoreMap(LEVEL, values)
        # cell (y=5, x=9) center in image coordinates
        assert bilinear_sample(m, ((9 + 0.5) * 4, (5 + 0.5) * 4), 0) == 0.8

    def test_midpoint_between_cells(self):
        values = np.zeros((1, 64, 64))
        values[0, 5, 10] = 1.0
        m = ScoreMap(LEVEL, values)
        p = ((9.5 + 0.5) * 4, (5 + 0.5) * 4)  # halfway between x=9 and x=10
        assert bilinear_sample(m, p, 0) == pytest.approx(0.5)

    def test_clamp_to_edge(self):
        values = np.zeros((1, 64, 64))
        values[0, 0, 0] = 1.0
        m = ScoreMap(LEVEL, values)
        assert bilinear_sample(m, (-50.0, -50.0), 0) == 1.0

    def test_bad_channel(self):
        m = ScoreMap(LEVEL, np.zeros((2, 64, 64)))
        with pytest.raises(ValidationError):
            bilinear_sample(m, (0, 0), 5)


class TestAlignScore:
    def test_constant_pass_through(self):
        m = ScoreMap(LEVEL, np.full((1, 64, 64), 0.42))
        box = OrientedBox(130, 130, 36, 18, 0.2)
        for pattern in PATTERNS.values():
            assert align_score(box, 0, m, pattern) == pytest.approx(0.42, abs=1e-15)

    def test_affine_field_gives_center_value(self):
        a, b, c = 0.0011, 0.0017, 0.05
        m = affine_map(a, b, c)
        rng = np.random.default_rng(19)
        for _ in range(50):
            box = OrientedBox(float(rng.uniform(80, 170)), float(rng.uniform(80, 170)),
                              float(rng.uniform(8, 40)), float(rng.uniform(8, 40)),
                              float(rng.uniform(-math.pi / 4 + 1e-6, math.pi / 4)))
            expect = a * box.cx + b * box.cy + c
            for pattern in PATTERNS.values():
                assert align_score(box, 0, m, pattern) == pytest.approx(expect, abs=1e-6)

    def test_region_fixture(self):
        # score 1 inside a gt-shaped region, 0 outside
        gt = OrientedBox(128, 128, 60, 28, 0.3)
        ys, xs = np.mgrid[0:LEVEL.height, 0:LEVEL.width]
        pts = np.stack([(xs + 0.5) * 4, (ys + 0.5) * 4], axis=-1)
        from rotbox.geometry import contains_points
        values = contains_points(gt, pts.reshape(-1, 2)).reshape(64, 64)[None]
        m = ScoreMap(LEVEL, values.astype(float))
        assert align_score(gt, 0, m, DIAMOND9) > 0.95
        displaced = OrientedBox(40, 40, 60, 28, 0.3)
        assert align_score(displaced, 0, m, DIAMOND9) < 0.05

    def test_bounded_by_map_range(self):
        rng = np.random.default_rng(20)
        values = rng.uniform(0.2, 0.9, size=(1, 64, 64))
        m = ScoreMap(LEVEL, values)
        for _ in range(100):
            box = OrientedBox(float(rng.uniform(0, 256)), float(rng.uniform(0, 256)),
                              float(rng.uniform(2, 80)), float(rng.uniform(2, 80)),
                              float(rng.uniform(-math.pi / 4 + 1e-6, math.pi / 4)))
            for pattern in PATTERNS.values():
                v = align_score(box, 0, m, pattern)
                assert values.min() <= v <= values.max()

    def test_monotone_in_map(self):
        rng = np.random.default_rng(27)
        lo = rng.uniform(0.0, 0.5, size=(1, 64, 64))
        hi = lo + rng.uniform(0.0, 0.4, size=(1, 64, 64))
        m_lo, m_hi = ScoreMap(LEVEL, lo), ScoreMap(LEVEL, hi)
        for _ in range(50):
            box = OrientedBox(float(rng.uniform(20, 230)), float(rng.uniform(20, 230)),
                              float(rng.uniform(4, 60)), float(rng.uniform(4, 60)),
                              float(rng.uniform(-math.pi / 4 + 1e-6, math.pi / 4)))
            for pattern in PATTERNS.values():
                assert align_score(box, 0, m_hi, pattern) >= align_score(box, 0, m_lo, pattern)

    def test_subpixel_shift_is_continuous(self):
        rng = np.random.default_rng(28)
        values = rng.uniform(0.0, 1.0, size=(1, 64, 64))
        m = ScoreMap(LEVEL, values)
        box = OrientedBox(100, 100, 30, 14, 0.25)
        step = 0.05
        # bilinear is (max-min)/stride-Lipschitz per axis; x2 safety margin
        bound = 2.0 * 2.0 * (values.max() - values.min()) / LEVEL.stride * step
        for pattern in PATTERNS.values():
            scores = [align_score(
                OrientedBox(box.cx + dx, box.cy, box.w, box.h, box.theta),
                0, m, pattern) for dx in np.arange(0.0, 2.0, step)]
            jumps = np.abs(np.diff(scores))
            assert jumps.max() <= bound

    def test_score_map_validation(self):
        with pytest.raises(ShapeMismatch):
            ScoreMap(LEVEL, np.zeros((64, 64)))
        with pytest.raises(ShapeMismatch):
            ScoreMap(LEVEL, np.zeros((1, 32, 64)))
        with pytest.raises(ValidationError):
            ScoreMap(LEVEL, np.full((1, 64, 64), 1.5))
