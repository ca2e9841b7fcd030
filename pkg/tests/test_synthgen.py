"""Generator determinism, phenotype contracts, and noiseless ideals."""

import numpy as np
import pytest

from dcdt.features import digit_census, extract, hand_metrics
from dcdt.stroke_model import Group, SymbolKind, parse_strokes, serialize_strokes
from dcdt.synthgen import (
    DEFAULT_PHENOTYPES,
    GeneratorConfig,
    PhenotypeParams,
    generate_dataset,
    generate_test,
)

from conftest import fast, ideal_params


class TestParamValidation:
    def test_probability_bounds(self):
        with pytest.raises(ValueError):
            PhenotypeParams(Group.HC, digit_omission_prob=1.5)
        with pytest.raises(ValueError):
            PhenotypeParams(Group.HC, clockface_eccentricity=1.0)
        with pytest.raises(ValueError):
            PhenotypeParams(Group.HC, draw_speed_cm_per_s=0.0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            GeneratorConfig(counts={Group.HC: -1}, seed=0)
        with pytest.raises(ValueError):
            GeneratorConfig(counts={}, seed=0, sample_period_ms=0)


class TestNoiselessIdeal:
    def test_all_digits_and_exact_hands(self, ideal_test, ideal_fv):
        """Zero error probabilities and jitters give the textbook clock."""
        assert ideal_fv["cmd_digits_present_count"] == 12.0
        assert ideal_fv["copy_digits_present_count"] == 12.0
        hm = hand_metrics(ideal_test.command)
        assert hm.hour.present and hm.minute.present
        # target angles forced by 11:10
        assert abs(hm.hour.angle_deg - 335.0) < 1e-6
        assert abs(hm.minute.angle_deg - 60.0) < 1e-6
        assert ideal_fv["cmd_hour_hand_angle_err_deg"] < 1e-6
        assert ideal_fv["cmd_minute_hand_angle_err_deg"] < 1e-6

    def test_eccentricity_below_tolerance(self, ideal_fv):
        assert ideal_fv["cmd_ellipse_eccentricity"] < 1e-6
        assert ideal_fv["copy_ellipse_eccentricity"] < 1e-6

    def test_sampling_period_respected(self, ideal_test):
        for s in list(ideal_test.command) + list(ideal_test.copy):
            assert np.all(np.diff(s.t_ms) == 13)

    def test_time_origin_is_first_command_sample(self, ideal_test):
        assert ideal_test.command.strokes[0].t_ms[0] == 0
        cmd_end = max(s.end_t for s in ideal_test.command)
        assert min(s.start_t for s in ideal_test.copy) > cmd_end


class TestForcedModes:
    def test_hand_omission_prob_one_removes_hands(self):
        p = ideal_params(hand_omission_prob=1.0)
        t = generate_test(p, "x", 5)
        for drawing in (t.command, t.copy):
            assert not drawing.of_kind(
                SymbolKind.HOUR_HAND, SymbolKind.MINUTE_HAND,
                SymbolKind.ARROWHEAD_HOUR, SymbolKind.ARROWHEAD_MINUTE,
            )

    def test_omission_prob_one_removes_digits(self):
        t = generate_test(ideal_params(digit_omission_prob=1.0), "x", 5)
        assert not t.command.of_kind(SymbolKind.DIGIT)

    def test_repetition_prob_one_doubles_every_digit(self):
        t = generate_test(fast(ideal_params(digit_repetition_prob=1.0)), "x", 5)
        census = digit_census(t.command)
        assert all(rec.count >= 2 for rec in census.values())

    def test_crossing_prob_one_marks_every_digit(self):
        t = generate_test(fast(ideal_params(crossed_out_digit_prob=1.0)), "x", 5)
        fv = extract(t)
        assert fv["cmd_crossed_out_count"] >= 12.0

    def test_minute_to_ten_error(self):
        t = generate_test(ideal_params(minute_to_10_error_prob=1.0), "x", 5)
        hm = hand_metrics(t.command)
        assert abs(hm.minute.angle_deg - 300.0) < 1e-6
        assert hm.minute_points_to_10


class TestDeterminism:
    def test_same_inputs_byte_identical_across_seeds(self):
        p = fast(DEFAULT_PHENOTYPES[Group.MID])
        for seed in range(50):
            a = generate_test(p, f"s{seed}", 1000 + seed)
            b = generate_test(p, f"s{seed}", 1000 + seed)
            assert serialize_strokes([a]) == serialize_strokes([b])

    def test_dataset_repeatable_and_seed_sensitive(self):
        phen = {g: fast(p) for g, p in DEFAULT_PHENOTYPES.items()}
        cfg1 = GeneratorConfig(counts={Group.HC: 4, Group.MID: 4}, seed=9)
        cfg2 = GeneratorConfig(counts={Group.HC: 4, Group.MID: 4}, seed=10)
        d1 = generate_dataset(cfg1, phen)
        d2 = generate_dataset(cfg1, phen)
        d3 = generate_dataset(cfg2, phen)
        assert serialize_strokes(d1) == serialize_strokes(d2)
        # different seeds move the digits
        c1 = digit_census(d1[0].command)
        c3 = digit_census(d3[0].command)
        assert any(
            abs(c1[d].angle_deg - c3[d].angle_deg) > 1e-9
            for d in range(1, 13)
            if c1[d].present and c3[d].present
        )

    def test_count_subsets_reproducible(self):
        """Shrinking one group's count must not disturb the others."""
        phen = {g: fast(p) for g, p in DEFAULT_PHENOTYPES.items()}
        big = generate_dataset(GeneratorConfig(counts={Group.HC: 3, Group.MID: 5}, seed=4), phen)
        small = generate_dataset(GeneratorConfig(counts={Group.HC: 3, Group.MID: 2}, seed=4), phen)
        assert serialize_strokes(big[:5]) == serialize_strokes(small)


class TestDatasetShape:
    def test_paper_scale_counts(self):
        """406 HC vs a 244-strong impaired arm: the desk-scale cohort split."""
        phen = {g: fast(p, 40.0) for g, p in DEFAULT_PHENOTYPES.items()}
        cfg = GeneratorConfig(counts={Group.HC: 406, Group.MID: 244, Group.VCD: 0, Group.PD: 0}, seed=1)
        tests = generate_dataset(cfg, phen)
        assert len(tests) == 650
        assert sum(1 for t in tests if t.group is Group.HC) == 406
        assert sum(1 for t in tests if t.group is Group.MID) == 244

    def test_zero_counts_empty(self):
        assert generate_dataset(GeneratorConfig(counts={}, seed=0)) == []

    def test_every_generated_test_parses_cleanly(self):
        phen = {g: fast(p) for g, p in DEFAULT_PHENOTYPES.items()}
        cfg = GeneratorConfig(counts={Group.HC: 3, Group.MID: 3, Group.VCD: 3, Group.PD: 3}, seed=2)
        tests = generate_dataset(cfg, phen)
        parsed = parse_strokes(serialize_strokes(tests))
        assert len(parsed) == 12


class TestPhenotypeEffects:
    def test_hand_error_effect_is_monotone(self):
        """Raising the pointing-error sigma raises the mean extracted error."""
        means = []
        for sigma in (3.0, 10.0, 25.0):
            errs = []
            for seed in range(200):
                t = generate_test(
                    fast(ideal_params(hand_angle_error_deg=sigma)), "x", 70_000 + seed
                )
                hm = hand_metrics(t.command)
                errs.extend([hm.hour.angle_error_deg, hm.minute.angle_error_deg])
            means.append(float(np.mean(errs)))
        assert means[0] < means[1] < means[2]

    def test_gap_parameter_recovered(self):
        """Mean extracted clockface gap tracks the configured mean, and the
        closure angle measures the same arc opening per drawing."""
        target = 60.0
        gaps = []
        for seed in range(60):
            # moderate speed: the angular sampling step (~1.5 deg) stays well
            # below the gaps being measured
            t = generate_test(fast(ideal_params(clockface_gap_deg=target), 8.0), "x", 80_000 + seed)
            fv = extract(t)
            gaps.append(fv["cmd_clockface_gap_deg"])
            if 10.0 < fv["cmd_clockface_gap_deg"] < 170.0:
                assert fv["cmd_closure_angle_deg"] == pytest.approx(
                    fv["cmd_clockface_gap_deg"], abs=2.5
                )
        assert abs(np.mean(gaps) - target) < 0.35 * target
