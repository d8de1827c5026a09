import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from it2sail.boat import RunLog, SimParams, course_from_offset, run_simulation
from it2sail.errors import EmptyLog, EmptySeries, ZeroDenominator
from it2sail.fuzzy import default_rule_base
from it2sail.metrics import (
    BD_FLOOR, absolute_performance, base_difficulty, compute_metrics, normalize_series,
    relative_performance, rmse, uncertainty_measure, wind_direction_value, wind_speed_value,
)
from it2sail.wind import config_from_label


def make_log(errors=(0.0,), wind_dir=None, wind_speed=None):
    n = len(errors)
    z = np.zeros(n)
    wd = np.full(n, 180.0) if wind_dir is None else np.asarray(wind_dir, float)
    ws = np.full(n, 7.0) if wind_speed is None else np.asarray(wind_speed, float)
    actual = np.full(n, 90.0)
    return RunLog(np.arange(n) * 0.1, actual + np.asarray(errors, float), actual, wd, ws, z, z, actual, z, z)


def streaming_rmse(errors):
    total, count = 0.0, 0
    for e in errors:
        total += e * e
        count += 1
    return math.sqrt(total / count)


class TestRMSE:
    @pytest.mark.parametrize("errors, expected", [([0, 0, 0], 0.0), ([3, -3, 3, -3], 3.0),
                                                  ([1, 2, 2, 1], 1.5811388300841898)])
    def test_examples(self, errors, expected):
        assert rmse(errors) == pytest.approx(expected, abs=1e-12)
        assert rmse(make_log(errors)) == pytest.approx(expected, abs=1e-12)

    def test_wraps_the_error(self):
        log = make_log([0.0])
        log.desired_bearing[:] = 5.0
        log.actual_bearing[:] = 355.0
        assert rmse(log) == pytest.approx(10.0)

    @given(st.lists(st.floats(-180, 180), min_size=1, max_size=200))
    def test_matches_streaming_oracle(self, errors):
        assert rmse(errors) == pytest.approx(streaming_rmse(errors), rel=1e-12, abs=1e-12)

    def test_empty(self):
        with pytest.raises(EmptyLog):
            rmse([])

    @given(st.floats(0, 1e3))
    def test_absolute_performance_is_identity(self, x):
        assert absolute_performance([x]) == pytest.approx(x)

    def test_table_row_value(self):
        assert absolute_performance([6.54, -6.54]) == pytest.approx(6.54)


class TestUncertaintyMeasure:
    def test_constant_wind(self):
        assert uncertainty_measure(make_log([0] * 10)) == 0.0

    def test_product_of_sds(self):
        d = 180 + 20 * np.array([1, -1] * 5)
        s = 7 + 3 * np.array([1, -1] * 5)
        assert uncertainty_measure(make_log([0] * 10, d, s)) == pytest.approx(60.0)

    def test_config_i_exceeds_config_a(self):
        rb, params = default_rule_base(0), SimParams()
        for seed in range(3):
            um = {lb: uncertainty_measure(run_simulation(rb, course_from_offset(25), config_from_label(lb),
                                                         params, seed)) for lb in "AI"}
            assert um["I"] > um["A"]

    def test_empty(self):
        with pytest.raises(EmptyLog):
            uncertainty_measure(make_log([]))


class TestBaseDifficulty:
    @pytest.mark.parametrize("speed, value", [(0, 0.0), (7, 0.5), (14, 0.5), (14.0001, 1.0), (15, 1.0),
                                              (1e-9, 0.5)])
    def test_wind_speed_value(self, speed, value):
        assert wind_speed_value(speed) == value

    @pytest.mark.parametrize("delta, value", [(0, 1.0), (180, 0.0), (90, 0.5), (-90, 0.5), (360, 1.0)])
    def test_wind_direction_value(self, delta, value):
        assert wind_direction_value(90 + delta, 90) == pytest.approx(value, abs=1e-12)

    def test_examples(self):
        assert base_difficulty(90, 7, 90) == pytest.approx(0.5)
        assert base_difficulty(180, 0, 90) == BD_FLOOR
        assert base_difficulty(270, 15, 90) == BD_FLOOR
        assert base_difficulty(180, 7, 90) == pytest.approx(0.25)

    @given(st.floats(-720, 720), st.floats(0, 30))
    def test_range(self, d, s):
        assert BD_FLOOR <= base_difficulty(d, s, 90) <= 1.0


class TestRelativePerformance:
    def test_table_row(self):
        v = relative_performance(6.20, 152.34, 28.89)
        assert v == pytest.approx(6.20 / (152.34 * 28.89), rel=1e-12)
        assert f"{v:.4e}" == "1.4087e-03"

    def test_zero_numerator(self):
        assert relative_performance(0, 3, 0.5) == 0

    def test_zero_denominator(self):
        with pytest.raises(ZeroDenominator):
            relative_performance(1, 0, 0.5)

    @given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.01, 1), st.floats(0.01, 100))
    def test_linear_in_abs_perf(self, ap, um, bd, c):
        assert relative_performance(c * ap, um, bd) == pytest.approx(c * relative_performance(ap, um, bd))

    @given(st.floats(0.1, 100), st.floats(0.01, 1), st.floats(0.01, 100), st.floats(0.01, 100))
    def test_strictly_decreasing_in_um(self, ap, bd, um1, um2):
        if um1 == um2:
            return
        lo, hi = sorted((um1, um2))
        assert relative_performance(ap, hi, bd) < relative_performance(ap, lo, bd)

    def test_ranking_invariance(self):
        rng = np.random.default_rng(0)
        ap, um, bd = rng.uniform(1, 10, 50), rng.uniform(1, 200, 50), rng.uniform(0.01, 1, 50)
        rank = np.argsort([relative_performance(*t) for t in zip(ap, um, bd)])
        scaled = np.argsort([relative_performance(3.7 * a, u, b) for a, u, b in zip(ap, um, bd)])
        np.testing.assert_array_equal(rank, scaled)


class TestNormalize:
    def test_examples(self):
        assert normalize_series([2, 4, 6]) == [0, 0.5, 1]
        assert normalize_series([5, 5, 5]) == [0, 0, 0]

    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=30))
    def test_extremes_map_exactly(self, values):
        out = normalize_series(values)
        assert all(0.0 <= v <= 1.0 for v in out)
        if max(values) > min(values):
            assert out[values.index(min(values))] == 0.0
            assert out[values.index(max(values))] == 1.0

    def test_empty(self):
        with pytest.raises(EmptySeries):
            normalize_series([])


class TestComputeMetrics:
    def test_record_consistency(self):
        log = run_simulation(default_rule_base(5), course_from_offset(50), config_from_label("E"),
                             SimParams(), 3)
        m = compute_metrics(log, 90.0)
        assert m.rmse == m.abs_perf == rmse(log)
        assert m.uncertainty_measure == pytest.approx(m.sd_dir * m.sd_speed)
        assert m.rel_perf == pytest.approx(m.abs_perf / (m.uncertainty_measure * m.base_difficulty))
        assert all(math.isfinite(v) for v in m.as_dict().values())
        # mean wind from the south on an eastbound course is a beam reach
        assert m.base_difficulty == pytest.approx(0.25, abs=0.02)

    def test_floor_is_configurable(self):
        log = make_log([1.0, -1.0], [180, 182], [0.1, 0.3])
        assert compute_metrics(log, 90.0).base_difficulty == pytest.approx(0.2456, abs=1e-3)
        assert compute_metrics(log, 90.0, bd_floor=0.3).base_difficulty == 0.3

    def test_constant_wind_has_no_relative_performance(self):
        with pytest.raises(ZeroDenominator):
            compute_metrics(make_log([1.0, -1.0]), 90.0)
