import math

import numpy as np
import pytest

from rotbox.anchors import BACKGROUND, IGNORED, POSITIVE, LevelAssignment, LevelSpec
from rotbox.errors import NonPositiveDistance, ShapeMismatch
from rotbox.lasa import ScoreMap
from rotbox.losses import LossConfig, focal_loss, iou_loss, angle_loss, total_loss
from rotbox.postprocess import RegressionMap

LN2 = math.log(2.0)
LN3 = math.log(3.0)
FOCAL_HALF = 0.25 * 0.25 * LN2  # p=0.5, p*=1, alpha=0.25, gamma=2


class TestFocalLoss:
    def test_reference_value(self):
        assert focal_loss(0.5, 1, 0.25, 2.0) == pytest.approx(FOCAL_HALF, abs=1e-12)

    def test_reduces_to_cross_entropy(self):
        assert focal_loss(0.5, 1, alpha=1.0, gamma=0.0) == pytest.approx(LN2, abs=1e-12)

    def test_confident_correct_is_tiny(self):
        assert focal_loss(1.0 - 1e-9, 1, 0.25, 2.0) <= 1e-12

    def test_negative_label_uses_complement(self):
        assert focal_loss(0.5, 0, 0.25, 2.0) == pytest.approx(0.75 * 0.25 * LN2)

    def test_array_input(self):
        out = focal_loss(np.array([0.5, 0.5]), 1, 0.25, 2.0)
        assert np.allclose(out, FOCAL_HALF)


class TestIoULoss:
    def test_identical_zero(self):
        assert iou_loss([1, 2, 3, 4], [1, 2, 3, 4]) == pytest.approx(0.0, abs=1e-8)

    def test_ln2_fixture(self):
        assert iou_loss([1, 1, 1, 1], [2, 1, 2, 1]) == pytest.approx(LN2, abs=1e-6)

    def test_ln3_fixture(self):
        assert iou_loss([1, 2, 1, 2], [2, 1, 2, 1]) == pytest.approx(LN3, abs=1e-6)

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            d = rng.uniform(0.1, 10, size=4)
            ds = rng.uniform(0.1, 10, size=4)
            assert iou_loss(d, ds) == iou_loss(ds, d)

    def test_non_positive_rejected(self):
        with pytest.raises(NonPositiveDistance):
            iou_loss([1, 0, 1, 1], [1, 1, 1, 1])

    def test_scale_invariance(self):
        # prior scale cancels in the ratio, which total_loss relies on
        rng = np.random.default_rng(3)
        for _ in range(100):
            d = rng.uniform(0.1, 5, size=4)
            ds = rng.uniform(0.1, 5, size=4)
            hk, wk = rng.uniform(0.5, 20, size=2)
            scaled_d = d * [hk, wk, hk, wk]
            scaled_ds = ds * [hk, wk, hk, wk]
            assert iou_loss(scaled_d, scaled_ds) == pytest.approx(
                iou_loss(d, ds), rel=1e-9, abs=1e-9)


class TestAngleLoss:
    def test_zero(self):
        assert angle_loss(0.3, 0.3) == 0.0

    def test_sixty_degrees(self):
        assert angle_loss(math.pi / 6, -math.pi / 6) == pytest.approx(0.5, abs=1e-12)

    def test_max_on_canonical_range(self):
        assert angle_loss(math.pi / 4, -math.pi / 4) == pytest.approx(1.0, abs=1e-12)

    def test_symmetry_and_range(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            a, b = rng.uniform(-math.pi / 4, math.pi / 4, size=2)
            assert angle_loss(a, b) == angle_loss(b, a)
            assert 0.0 <= angle_loss(a, b) <= 1.0


def single_positive_fixture():
    """One positive cell whose terms equal the worked fixtures."""
    level = LevelSpec("P2", 4, 1, 1)
    labels = LevelAssignment(level,
                             np.full((1, 1, 1), POSITIVE, dtype=np.int8),
                             np.zeros((1, 1, 1), dtype=np.int32))
    scores = ScoreMap(level, np.full((1, 1, 1), 0.5))
    # decoded angles +pi/6 and -pi/6 -> angle delta pi/3 -> loss 0.5
    t0_pred, t0_star = math.log(5.0), math.log(0.2)
    reg = RegressionMap(level, np.array([0, 0, 0, 0, t0_pred]).reshape(1, 5, 1, 1))
    target = np.array([LN2, 0, LN2, 0, t0_star]).reshape(1, 5, 1, 1)
    return [scores], [reg], [labels], [target]


class TestTotalLoss:
    def test_single_positive_fixture(self):
        scores, regs, labels, targets = single_positive_fixture()
        report = total_loss(scores, regs, labels, targets, LossConfig())
        expect = FOCAL_HALF + LN2 + 10.0 * 0.5
        assert report.total == pytest.approx(expect, abs=1e-6)
        assert report.n_cls == report.n_reg == 1
        assert report.total == pytest.approx(
            report.l_cls / report.n_cls
            + (1.0 * report.l_dist + 10.0 * report.l_angle) / report.n_reg)

    def test_perfect_prediction(self):
        level = LevelSpec("P2", 4, 2, 2)
        status = np.full((1, 2, 2), BACKGROUND, dtype=np.int8)
        status[0, 0, 0] = POSITIVE
        labels = LevelAssignment(level, status, np.where(status == POSITIVE, 0, -1).astype(np.int32))
        values = np.full((1, 2, 2), 1e-9)
        values[0, 0, 0] = 1.0 - 1e-9
        scores = ScoreMap(level, values)
        t = np.zeros((1, 5, 2, 2))
        t[0, :, 0, 0] = [0.1, -0.2, 0.3, 0.05, 0.7]
        report = total_loss([scores], [RegressionMap(level, t)], [labels], [t.copy()])
        assert report.l_dist <= 1e-6
        assert report.l_angle <= 1e-6
        assert report.l_cls <= 1e-6
        assert report.total <= 1e-6

    def test_no_positives_eps_scores(self):
        level = LevelSpec("P2", 4, 4, 4)
        labels = LevelAssignment(level, np.zeros((1, 4, 4), dtype=np.int8),
                                 np.full((1, 4, 4), -1, dtype=np.int32))
        scores = ScoreMap(level, np.full((1, 4, 4), 1e-9))
        report = total_loss([scores], [RegressionMap(level, np.zeros((1, 5, 4, 4)))],
                            [labels], [np.zeros((1, 5, 4, 4))])
        assert report.total <= 1e-6
        assert report.n_cls == 1  # clamped to 1 with no positives

    def test_ignored_contributes_exactly_zero(self):
        level = LevelSpec("P2", 4, 2, 2)
        status = np.zeros((1, 2, 2), dtype=np.int8)
        status[0, 1, 1] = IGNORED
        labels = LevelAssignment(level, status, np.full((1, 2, 2), -1, dtype=np.int32))
        values = np.full((1, 2, 2), 0.2)
        base = total_loss([ScoreMap(level, values)],
                          [RegressionMap(level, np.zeros((1, 5, 2, 2)))],
                          [labels], [np.zeros((1, 5, 2, 2))])
        flipped = values.copy()
        flipped[0, 1, 1] = 0.97
        other = total_loss([ScoreMap(level, flipped)],
                           [RegressionMap(level, np.zeros((1, 5, 2, 2)))],
                           [labels], [np.zeros((1, 5, 2, 2))])
        assert base == other

    def test_level_order_invariance(self):
        rng = np.random.default_rng(9)
        levels = [LevelSpec("P2", 4, 3, 3), LevelSpec("P3", 8, 2, 2)]
        scores, regs, labels, targets = [], [], [], []
        for lv in levels:
            status = rng.integers(0, 3, size=(2, lv.height, lv.width)).astype(np.int8)
            labels.append(LevelAssignment(lv, status,
                                          np.where(status == POSITIVE, 0, -1).astype(np.int32)))
            scores.append(ScoreMap(lv, rng.uniform(0.05, 0.95, (2, lv.height, lv.width))))
            regs.append(RegressionMap(lv, rng.normal(0, 0.5, (2, 5, lv.height, lv.width))))
            targets.append(rng.normal(0, 0.5, (2, 5, lv.height, lv.width)))
        fwd = total_loss(scores, regs, labels, targets)
        rev = total_loss(scores[::-1], regs[::-1], labels[::-1], targets[::-1])
        assert fwd.total == pytest.approx(rev.total, rel=1e-12)
        assert fwd.l_cls == pytest.approx(rev.l_cls, rel=1e-12)

    def test_cell_permutation_invariance(self):
        rng = np.random.default_rng(10)
        lv = LevelSpec("P2", 4, 4, 4)
        status = rng.integers(0, 3, size=(1, 4, 4)).astype(np.int8)
        scores = rng.uniform(0.05, 0.95, (1, 4, 4))
        regs = rng.normal(0, 0.5, (1, 5, 4, 4))
        targets = rng.normal(0, 0.5, (1, 5, 4, 4))
        labels = LevelAssignment(lv, status, np.where(status == POSITIVE, 0, -1).astype(np.int32))
        base = total_loss([ScoreMap(lv, scores)], [RegressionMap(lv, regs)],
                          [labels], [targets])
        perm = rng.permutation(16)

        def shuffle(arr):
            flat = arr.reshape(*arr.shape[:-2], 16)[..., perm]
            return flat.reshape(arr.shape)

        labels2 = LevelAssignment(lv, shuffle(status),
                                  np.where(shuffle(status) == POSITIVE, 0, -1).astype(np.int32))
        other = total_loss([ScoreMap(lv, shuffle(scores))],
                           [RegressionMap(lv, shuffle(regs))], [labels2],
                           [shuffle(targets)])
        assert other.total == pytest.approx(base.total, rel=1e-9)

    def test_shape_mismatch(self):
        scores, regs, labels, targets = single_positive_fixture()
        with pytest.raises(ShapeMismatch):
            total_loss(scores, regs, labels, [np.zeros((1, 5, 2, 2))])
        with pytest.raises(ShapeMismatch):
            total_loss(scores, [], labels, targets)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            LossConfig(alpha=0.0)
        with pytest.raises(ValueError):
            LossConfig(gamma=-1.0)
        with pytest.raises(ValueError):
            LossConfig(eps=0.0)
