import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evschedule.sh import (
    RateModel,
    ShotResult,
    SocCone,
    commitment_value,
    cone_feasible,
    min_commitment_periods,
    sample_rate_path,
    shoot,
)


class TestRateModel:
    def test_nominal_rates_scale_with_type(self):
        m = RateModel()
        assert m.nominal(0) == pytest.approx(6.2)
        assert m.nominal(1) == pytest.approx(12.4)

    def test_stochastic_means_are_their_own_table(self):
        m = RateModel()
        assert m.mean(0) == pytest.approx(6.2)
        assert m.mean(1) == pytest.approx(12.5)

    def test_zero_spread_collapses_to_the_mean(self):
        m = RateModel(sd_frac=0.0, quantum=0.0)
        path = sample_rate_path(m, 1, 5, np.random.default_rng(0))
        assert np.allclose(path, 12.5)

    def test_draws_never_go_negative(self):
        m = RateModel(sd_frac=5.0)
        path = sample_rate_path(m, 0, 1000, np.random.default_rng(3))
        assert (path >= 0.0).all()

    def test_quantization_grid(self):
        m = RateModel(quantum=0.1)
        path = sample_rate_path(m, 0, 200, np.random.default_rng(4))
        assert np.allclose(path, np.round(path * 10) / 10)

    def test_deterministic_switch_returns_nominal(self):
        m = RateModel(deterministic=True)
        path = sample_rate_path(m, 1, 3, np.random.default_rng(5))
        assert np.allclose(path, 12.4)


class TestSocCone:
    def test_bounds_widen_linearly(self):
        cone = SocCone(base=10.0, lower=6.2, upper=12.4, horizon=3)
        assert cone.bounds(0) == (10.0, 10.0)
        assert cone.bounds(2) == pytest.approx((22.4, 34.8))

    def test_contains_is_inclusive(self):
        cone = SocCone(base=10.0, lower=6.2, upper=12.4, horizon=3)
        assert cone.contains(1, 16.2)
        assert cone.contains(1, 22.4)
        assert not cone.contains(1, 22.6)

    def test_out_of_window_queries_are_rejected(self):
        cone = SocCone(base=10.0, lower=6.2, upper=12.4, horizon=3)
        with pytest.raises(ValueError):
            cone.bounds(4)


class TestConeFeasible:
    def test_two_period_window_covers_the_gap(self):
        # average need 18.6 / 2 = 9.3 lies between the two rates
        assert cone_feasible(1.4, 2, 20.0, 6.2) is True

    def test_one_period_window_cannot(self):
        assert cone_feasible(1.4, 1, 20.0, 6.2) is False

    def test_met_threshold_is_trivially_feasible(self):
        assert cone_feasible(25.0, 1, 20.0, 6.2) is True

    def test_too_slow_a_need_is_outside_the_cone(self):
        # boundary reachability is exact: dawdling below pi misses it
        assert cone_feasible(10.0, 4, 12.0, 6.2) is False


class TestShoot:
    def test_nominal_two_slow_periods(self):
        m = RateModel(deterministic=True)
        res = shoot(m, 10.0, 2, 20.0, 0, 16, np.random.default_rng(0))
        assert res.survival == 1.0
        assert np.allclose(res.trajectory, [16.2, 22.4])

    def test_unreachable_threshold_is_marked(self):
        m = RateModel(deterministic=True)
        res = shoot(m, 10.0, 1, 40.0, 0, 16, np.random.default_rng(0))
        assert res.trajectory is None
        assert res.survival == 0.0

    def test_single_path_batch(self):
        m = RateModel()
        res = shoot(m, 10.0, 3, 0.0, 0, 1, np.random.default_rng(2))
        assert res.survival == 1.0
        assert res.trajectory.shape == (3,)

    def test_battery_caps_the_trajectory(self):
        m = RateModel(deterministic=True)
        res = shoot(m, 45.0, 2, 46.0, 1, 4, np.random.default_rng(0),
                    battery_capacity=50.0)
        assert np.allclose(res.trajectory, [50.0, 50.0])

    def test_survivors_all_clear_the_threshold(self):
        m = RateModel(sd_frac=0.10)
        rng = np.random.default_rng(9)
        for _ in range(20):
            res = shoot(m, 0.0, 2, 12.4, 0, 30, rng)
            if res.trajectory is not None:
                assert res.trajectory[-1] >= 12.4 - 1e-9


class TestCommitmentValue:
    def test_sure_commitment_prices_the_stage_alone(self):
        m = RateModel(deterministic=True)
        value, survival = commitment_value(
            m, 10.0, 2, 20.0, 0, 0.2, 1.0, 0.1, 4, 8, np.random.default_rng(0)
        )
        assert survival == 1.0
        # 1.0 * 0.2 * 2 charging + 0.1 * 2 idle periods
        assert value == pytest.approx(0.6)

    def test_hopeless_commitment_prices_the_fallback(self):
        m = RateModel(deterministic=True)
        value, survival = commitment_value(
            m, 10.0, 1, 40.0, 0, 0.2, 1.0, 0.1, 4, 8, np.random.default_rng(0)
        )
        assert survival == 0.0
        assert value == pytest.approx(0.4)

    def test_value_blends_linearly_in_survival(self):
        m = RateModel(sd_frac=0.10)
        value, survival = commitment_value(
            m, 0.0, 1, 6.2, 0, 0.2, 1.0, 0.1, 3, 64, np.random.default_rng(7)
        )
        stage = 1.0 * 0.2 * 1 + 0.1 * 2
        fallback = 0.1 * 3
        assert value == pytest.approx(survival * stage + (1 - survival) * fallback)


class TestMinCommitmentPeriods:
    def test_slow_charger_examples(self):
        assert min_commitment_periods(12.0, 6.2) == 2
        assert min_commitment_periods(12.0, 12.4) == 1

    def test_closed_gap_needs_no_periods(self):
        assert min_commitment_periods(0.0, 6.2) == 0
        assert min_commitment_periods(-3.0, 6.2) == 0

    def test_exact_multiples_do_not_round_up(self):
        assert min_commitment_periods(12.4, 6.2) == 2

    @given(
        gap=st.floats(min_value=0.001, max_value=200.0),
        rate=st.floats(min_value=0.5, max_value=20.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_result_is_the_smallest_sufficient_length(self, gap, rate):
        n = min_commitment_periods(gap, rate)
        assert n * rate >= gap - 1e-6
        if n > 1:
            assert (n - 1) * rate < gap + 1e-6
