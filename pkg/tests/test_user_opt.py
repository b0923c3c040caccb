import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evschedule.network import ChargerPool, Facility, Network
from evschedule.state import initial_state
from evschedule.user_opt import (
    INFEASIBLE,
    Action,
    CostWeights,
    MultiplierView,
    best_response,
    capacity_slack,
    feasible_durations,
    penalized_cost,
    user_cost,
)

from conftest import make_facility, make_network, make_user

W = CostWeights()


def _quiet_facility(lot=3, T=4, slow_cap=2, fast_cap=1, slow_price=2.0, fast_price=2.0):
    """Awareness 0 keeps waits out of the cost so prices stand alone."""
    return make_facility(lot, T=T, slow_cap=slow_cap, fast_cap=fast_cap,
                         awareness=0.0, slow_price=slow_price, fast_price=fast_price)


def test_cost_of_a_full_window_slow_booking():
    # travel 0.1 * 4.5, no wait, 1.0 * 2 * 3 periods, no early release
    net = make_network([_quiet_facility()])
    user = make_user(uid=0, soc=10.0, gap=12.0, duration=3)
    state = initial_state(net, 4, [user])
    cost = user_cost(user, Action(0, (3, 0), 3), state, W)
    assert cost == pytest.approx(6.45, abs=1e-9)


def test_early_release_charges_the_open_tail():
    net = make_network([_quiet_facility()])
    user = make_user(uid=0, soc=10.0, gap=12.0, duration=5)
    state = initial_state(net, 8, [user])
    short = user_cost(user, Action(0, (3, 0), 3), state, W)
    full = user_cost(user, Action(0, (3, 0), 5), state, W)
    # two idle periods at alpha_prime = 0.1 each
    assert short - (full - 2 * 2.0) == pytest.approx(0.2, abs=1e-9)


def test_no_charge_is_free_at_threshold():
    net = make_network([_quiet_facility()])
    user = make_user(uid=0, soc=20.0, gap=0.0, duration=2)
    state = initial_state(net, 4, [user])
    assert user_cost(user, Action(0, None), state, W) == 0.0


def test_no_charge_below_threshold_is_infeasible():
    net = make_network([_quiet_facility()])
    user = make_user(uid=0, soc=10.0, gap=5.0, duration=2)
    state = initial_state(net, 4, [user])
    assert user_cost(user, Action(0, None), state, W) == INFEASIBLE


class TestCapacitySlack:
    def _state(self, occ):
        net = make_network([make_facility(3, T=4, slow_cap=2)])
        state = initial_state(net, 4, [make_user(uid=0)])
        if occ:
            state.occupancy[(3, 0)] = occ
        return state

    def test_lone_claim_on_an_empty_pool(self):
        state = self._state(0)
        assert capacity_slack(Action(0, (3, 0), 1), {}, state) == pytest.approx(-1.0)

    def test_last_spot_is_tight(self):
        state = self._state(1)
        assert capacity_slack(Action(0, (3, 0), 1), {}, state) == pytest.approx(0.0)

    def test_peer_pushes_past_capacity(self):
        state = self._state(1)
        assert capacity_slack(Action(0, (3, 0), 1), {(3, 0): 1}, state) == pytest.approx(1.0)

    def test_no_charge_never_violates(self):
        state = self._state(2)
        assert capacity_slack(Action(0, None), {(3, 0): 5}, state) == 0.0


class TestFeasibleDurations:
    def test_slow_needs_two_periods_for_twelve_kwh(self):
        user = make_user(uid=0, soc=10.0, gap=12.0, duration=4)
        assert feasible_durations(user, 10.0, 0, 0, 8, W) == (2, 4)

    def test_fast_covers_it_in_one(self):
        user = make_user(uid=0, soc=10.0, gap=12.0, duration=4)
        assert feasible_durations(user, 10.0, 1, 0, 8, W)[0] == 1

    def test_horizon_truncates_the_window(self):
        user = make_user(uid=0, soc=10.0, gap=12.0, duration=4)
        n_min, n_max = feasible_durations(user, 10.0, 0, 6, 8, W)
        assert (n_min, n_max) == (2, 2)

    def test_met_threshold_still_needs_one_period_to_book(self):
        user = make_user(uid=0, soc=20.0, gap=0.0, duration=4)
        assert feasible_durations(user, 25.0, 0, 0, 8, W)[0] == 1


class TestPenalizedCost:
    def _setup(self, occ=1):
        net = make_network([_quiet_facility(slow_cap=1)])
        user = make_user(uid=0, soc=10.0, gap=12.0, duration=3)
        state = initial_state(net, 4, [user])
        if occ:
            state.occupancy[(3, 0)] = occ
        return user, state

    def test_zero_multiplier_recovers_the_raw_cost(self):
        user, state = self._setup()
        act = Action(0, (3, 0), 3)
        mult = MultiplierView(1.0, {})
        assert penalized_cost(user, act, state, W, mult, {}) == pytest.approx(
            user_cost(user, act, state, W)
        )

    def test_unit_multiplier_at_tight_capacity_adds_one(self):
        # g = 0 on the last spot, so the term is u * exp(0) / rho = 1
        net = make_network([_quiet_facility(slow_cap=1)])
        user = make_user(uid=0, soc=10.0, gap=12.0, duration=3)
        state = initial_state(net, 4, [user])
        act = Action(0, (3, 0), 3)
        mult = MultiplierView(1.0, {(3, 0): 1.0})
        raw = user_cost(user, act, state, W)
        assert penalized_cost(user, act, state, W, mult, {}) == pytest.approx(raw + 1.0)

    def test_exponent_is_clamped(self):
        user, state = self._setup()
        act = Action(0, (3, 0), 3)
        mult = MultiplierView(1e6, {(3, 0): 1.0})
        val = penalized_cost(user, act, state, W, mult, {(3, 0): 50})
        assert math.isfinite(val)
        assert val <= user_cost(user, act, state, W, pending={(3, 0): 50}) + math.exp(W.exp_cap) / 1e6 + 1e-9

    def test_penalty_never_discounts(self):
        user, state = self._setup()
        act = Action(0, (3, 0), 3)
        mult = MultiplierView(2.0, {(3, 0): 0.7})
        assert penalized_cost(user, act, state, W, mult, {}) >= user_cost(
            user, act, state, W
        ) - 1e-12


class TestBestResponse:
    def test_ties_break_toward_the_lower_lot(self):
        facs = [_quiet_facility(lot=3), _quiet_facility(lot=4)]
        net = Network(
            nodes=(1, 2, 3, 4), origins=(1,), destinations=(2,),
            facilities=tuple(facs),
            to_lot={(1, 3): 3.0, (1, 4): 3.0},
            from_lot={(3, 2): 1.5, (4, 2): 1.5},
        )
        user = make_user(uid=0, soc=10.0, gap=12.0, duration=2)
        state = initial_state(net, 4, [user])
        act = best_response(user, state, {}, W)
        assert act.choice is not None and act.choice[0] == 3

    def test_satisfied_user_stays_out(self):
        net = make_network([_quiet_facility()])
        user = make_user(uid=0, soc=20.0, gap=0.0, duration=2)
        state = initial_state(net, 4, [user])
        assert best_response(user, state, {}, W).choice is None

    def test_unservable_user_rolls_forward(self):
        # gap too wide for any duration window
        net = make_network([_quiet_facility(fast_cap=0)])
        user = make_user(uid=0, soc=1.0, gap=40.0, duration=2)
        state = initial_state(net, 3, [user])
        act = best_response(user, state, {}, W)
        assert act.choice is None

    @given(
        seed=st.integers(min_value=0, max_value=10_000),
        u_val=st.floats(min_value=0.0, max_value=3.0),
        rho=st.floats(min_value=0.5, max_value=8.0),
    )
    @settings(max_examples=120, deadline=None)
    def test_matches_exhaustive_enumeration(self, seed, u_val, rho):
        rng = np.random.default_rng(seed)
        T = int(rng.integers(2, 5))
        net = make_network([
            make_facility(3, T=T,
                          slow_cap=int(rng.integers(1, 3)),
                          fast_cap=int(rng.integers(0, 2)),
                          search_time=float(rng.uniform(0.3, 1.5)),
                          slow_price=float(rng.uniform(0.1, 0.4)),
                          fast_price=float(rng.uniform(0.1, 0.5))),
        ])
        user = make_user(uid=0, soc=float(rng.uniform(2, 20)),
                         gap=float(rng.uniform(0, 20)),
                         duration=int(rng.integers(1, 4)))
        state = initial_state(net, T, [user])
        others = {(3, 0): int(rng.integers(0, 3)), (3, 1): int(rng.integers(0, 2))}
        mult = MultiplierView(rho, {(3, 0): u_val, (3, 1): u_val / 2})

        candidates = [Action(0, None)]
        for j, k in state.pools():
            n_lo, n_hi = feasible_durations(user, user.soc, k, 0, T, W)
            for n in range(n_lo, n_hi + 1):
                candidates.append(Action(0, (j, k), n))
        best = min(penalized_cost(user, a, state, W, mult, others) for a in candidates)

        act = best_response(user, state, others, W, mult)
        got = penalized_cost(user, act, state, W, mult, others)
        if math.isinf(best):
            assert act.choice is None
        else:
            assert got == pytest.approx(best, abs=1e-9)
