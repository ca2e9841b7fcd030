"""Operationalized rubric: every point level, monotonicity, and fitting."""

from dataclasses import replace

import pytest

from dcdt.evaluation import auc
from dcdt.rouleau import (
    DEFAULT_PARAMS,
    RouleauParams,
    RouleauScore,
    classify,
    fit_params,
    parse_params,
    rouleau_total,
    score_face,
    score_hands,
    score_numbers,
    serialize_params,
)

NAN = float("nan")


def fv_with(ideal_fv, **overrides):
    v = dict(ideal_fv)
    for key, val in overrides.items():
        v[key] = val
    return v


def blank_fv(ideal_fv):
    """Everything missing or at the empty-drawing pole."""
    v = {k: NAN for k in ideal_fv}
    for k in ideal_fv:
        if k.endswith(("_count",)) or k.endswith(
            ("_in_order", "_ccw", "_present", "_missing", "_points_10")
        ):
            v[k] = 0.0
    v["cmd_two_hands_missing"] = 1.0
    v["copy_two_hands_missing"] = 1.0
    return v


class TestParams:
    def test_eps_ordering_enforced(self):
        with pytest.raises(ValueError):
            RouleauParams(eps1_deg=50.0, eps2_deg=40.0)
        with pytest.raises(ValueError):
            RouleauParams(cut_score=11)

    def test_params_file_roundtrip(self):
        p = replace(DEFAULT_PARAMS, eps1_deg=12.0, cut_score=7)
        assert parse_params(serialize_params(p)) == p


class TestFaceItem:
    def test_ideal_face_scores_two(self, ideal_fv):
        assert score_face(ideal_fv, DEFAULT_PARAMS)[0] == 2

    def test_incomplete_face_scores_one(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_clockface_gap_deg=120.0)
        assert score_face(v, DEFAULT_PARAMS)[0] == 1

    def test_absent_face_scores_zero(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_clockface_gap_deg=NAN, cmd_ellipse_eccentricity=NAN)
        assert score_face(v, DEFAULT_PARAMS)[0] == 0

    def test_gross_and_open_scores_zero(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_clockface_gap_deg=220.0, cmd_ellipse_eccentricity=0.9)
        assert score_face(v, DEFAULT_PARAMS)[0] == 0


class TestNumbersItem:
    def test_ideal_scores_four(self, ideal_fv):
        assert score_numbers(ideal_fv, DEFAULT_PARAMS)[0] == 4

    def test_displaced_digit_scores_three(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_digit_max_angle_dev_deg=40.0)
        assert score_numbers(v, DEFAULT_PARAMS)[0] == 3

    def test_missing_digits_score_two(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_digits_present_count=10.0, cmd_digits_missing_count=2.0,
                    cmd_digits_in_order=0.0)
        assert score_numbers(v, DEFAULT_PARAMS)[0] == 2

    def test_counterclockwise_scores_two(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_digits_in_order=0.0, cmd_digits_ccw=1.0)
        assert score_numbers(v, DEFAULT_PARAMS)[0] == 2

    def test_all_present_gross_layout_scores_two(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_digit_max_angle_dev_deg=60.0)
        assert score_numbers(v, DEFAULT_PARAMS)[0] == 2

    def test_missing_plus_gross_scores_one(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_digits_present_count=9.0, cmd_digits_missing_count=3.0,
                    cmd_digits_in_order=0.0, cmd_digit_max_angle_dev_deg=60.0)
        assert score_numbers(v, DEFAULT_PARAMS)[0] == 1

    def test_two_digits_scores_zero(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_digits_present_count=2.0, cmd_digits_missing_count=10.0,
                    cmd_digits_in_order=0.0)
        assert score_numbers(v, DEFAULT_PARAMS)[0] == 0


class TestHandsItem:
    def test_exact_hands_score_four(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_hand_size_ratio=0.5)
        assert score_hands(v, DEFAULT_PARAMS)[0] == 4

    def test_slight_error_scores_three(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_minute_hand_angle_err_deg=20.0)
        assert score_hands(v, DEFAULT_PARAMS)[0] == 3

    def test_size_difference_missing_scores_three(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_hand_size_ratio=0.97)
        assert score_hands(v, DEFAULT_PARAMS)[0] == 3

    def test_minute_at_ten_scores_two(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_minute_hand_angle_err_deg=120.0)
        assert score_hands(v, DEFAULT_PARAMS)[0] == 2

    def test_both_hands_in_band_scores_two(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_hour_hand_angle_err_deg=30.0, cmd_minute_hand_angle_err_deg=30.0)
        assert score_hands(v, DEFAULT_PARAMS)[0] == 2

    def test_one_hand_scores_one(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_minute_hand_present=0.0, cmd_minute_hand_angle_err_deg=NAN,
                    cmd_hand_size_ratio=NAN, cmd_two_hands_missing=1.0)
        assert score_hands(v, DEFAULT_PARAMS)[0] == 1

    def test_no_hands_scores_zero(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_hour_hand_present=0.0, cmd_minute_hand_present=0.0,
                    cmd_hour_hand_angle_err_deg=NAN, cmd_minute_hand_angle_err_deg=NAN,
                    cmd_hand_size_ratio=NAN, cmd_two_hands_missing=1.0)
        assert score_hands(v, DEFAULT_PARAMS)[0] == 0

    def test_perseveration_scores_zero(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_hand_stroke_count=5.0, cmd_hand_direction_count=4.0)
        assert score_hands(v, DEFAULT_PARAMS)[0] == 0


class TestTotals:
    def test_ideal_total_ten_healthy(self, ideal_fv):
        s = rouleau_total(fv_with(ideal_fv, cmd_hand_size_ratio=0.5), DEFAULT_PARAMS)
        assert isinstance(s, RouleauScore)
        assert s.total == 10
        for cut in range(0, 11):
            assert classify(s, replace(DEFAULT_PARAMS, cut_score=cut)) == "healthy"

    def test_no_hands_ideal_rest_totals_six(self, ideal_fv):
        v = fv_with(ideal_fv, cmd_hour_hand_present=0.0, cmd_minute_hand_present=0.0,
                    cmd_hour_hand_angle_err_deg=NAN, cmd_minute_hand_angle_err_deg=NAN,
                    cmd_hand_size_ratio=NAN, cmd_two_hands_missing=1.0)
        assert rouleau_total(v, DEFAULT_PARAMS).total == 6

    def test_blank_test_totals_zero_impaired(self, ideal_fv):
        s = rouleau_total(blank_fv(ideal_fv), DEFAULT_PARAMS)
        assert s.total == 0
        assert classify(s, DEFAULT_PARAMS) == "impaired"

    def test_total_is_sum_and_rationale_present(self, ideal_fv):
        s = rouleau_total(ideal_fv, DEFAULT_PARAMS)
        assert s.total == s.face_pts + s.numbers_pts + s.hands_pts
        assert len(s.rationale) == 3

    def test_copy_clock_scoring_flag(self, ideal_fv):
        v = fv_with(ideal_fv, copy_clockface_gap_deg=NAN, copy_ellipse_eccentricity=NAN)
        assert rouleau_total(v, DEFAULT_PARAMS, clock="copy").face_pts == 0
        assert rouleau_total(v, DEFAULT_PARAMS, clock="cmd").face_pts == 2


class TestMonotonicity:
    def test_growing_hand_error_never_raises_total(self, ideal_fv):
        prev = 11
        for err in (0.0, 5.0, 12.0, 20.0, 30.0, 44.0, 50.0, 90.0, 120.0, 179.0):
            v = fv_with(ideal_fv, cmd_minute_hand_angle_err_deg=err, cmd_hand_size_ratio=0.5)
            total = rouleau_total(v, DEFAULT_PARAMS).total
            assert total <= prev
            prev = total

    def test_growing_gap_never_raises_total(self, ideal_fv):
        prev = 11
        for gap in (0.0, 20.0, 44.0, 46.0, 100.0, 181.0, 300.0):
            v = fv_with(ideal_fv, cmd_clockface_gap_deg=gap, cmd_ellipse_eccentricity=0.9)
            total = rouleau_total(v, DEFAULT_PARAMS).total
            assert total <= prev
            prev = total

    def test_growing_digit_deviation_never_raises_total(self, ideal_fv):
        prev = 11
        for dev in (0.0, 10.0, 22.5, 23.0, 45.0, 46.0, 120.0):
            v = fv_with(ideal_fv, cmd_digit_max_angle_dev_deg=dev)
            total = rouleau_total(v, DEFAULT_PARAMS).total
            assert total <= prev
            prev = total


class TestFit:
    def separable_examples(self, ideal_fv, n=10):
        healthy = fv_with(ideal_fv, cmd_hand_size_ratio=0.5)
        impaired = fv_with(
            ideal_fv,
            cmd_hour_hand_present=0.0, cmd_minute_hand_present=0.0,
            cmd_hour_hand_angle_err_deg=NAN, cmd_minute_hand_angle_err_deg=NAN,
            cmd_hand_size_ratio=NAN, cmd_two_hands_missing=1.0,
            cmd_digits_present_count=8.0, cmd_digits_missing_count=4.0,
            cmd_digits_in_order=0.0,
        )
        return [(healthy, -1)] * n + [(impaired, +1)] * n

    def test_separable_fixture_reaches_auc_one(self, ideal_fv):
        examples = self.separable_examples(ideal_fv)
        params = fit_params(examples)
        scores = [-rouleau_total(fv, params).total for fv, _ in examples]
        assert auc(scores, [y for _, y in examples]) == 1.0

    def test_single_point_grid_returned(self, ideal_fv):
        grid = {"eps1_deg": (11.0,), "eps2_deg": (33.0,)}
        params = fit_params(self.separable_examples(ideal_fv), grid)
        assert params.eps1_deg == 11.0 and params.eps2_deg == 33.0

    def test_superset_grid_no_worse(self, ideal_fv):
        examples = self.separable_examples(ideal_fv)
        small = {"eps1_deg": (15.0,), "eps2_deg": (45.0,)}
        big = {"eps1_deg": (10.0, 15.0), "eps2_deg": (30.0, 45.0)}
        ys = [y for _, y in examples]

        def train_auc(grid):
            p = fit_params(examples, grid)
            return auc([-rouleau_total(fv, p).total for fv, _ in examples], ys)

        assert train_auc(big) >= train_auc(small)

    def test_single_class_rejected(self, ideal_fv):
        with pytest.raises(ValueError):
            fit_params([(ideal_fv, -1)] * 5)

    def test_invalid_grid_rejected(self, ideal_fv):
        with pytest.raises(ValueError):
            fit_params(self.separable_examples(ideal_fv), {"eps1_deg": (50.0,), "eps2_deg": (40.0,)})
