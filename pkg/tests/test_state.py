import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evschedule.network import ChargerPool, Facility
from evschedule.state import (
    Commitment,
    ExogenousInfo,
    SystemState,
    advance,
    initial_state,
    waiting_time,
)
from evschedule.user_opt import Action

from conftest import make_facility, make_network, make_user


def _pool_facility(capacity=5, search_time=1.0, awareness=1.0):
    pools = (
        ChargerPool(capacity=capacity, search_time=search_time, awareness=awareness),
        ChargerPool(capacity=0, search_time=1.0, awareness=1.0),
    )
    return Facility(lot=3, pools=pools, prices=np.zeros((4, 2)))


class TestWaitingTime:
    def test_empty_pool_waits_one_search(self):
        assert waiting_time(_pool_facility(), 0, 0, 0) == pytest.approx(1.0, abs=1e-9)

    def test_four_of_five_spots_taken(self):
        assert waiting_time(_pool_facility(), 0, 4, 0) == pytest.approx(5.0, abs=1e-9)

    def test_zero_awareness_means_no_search(self):
        fac = _pool_facility(awareness=0.0)
        assert waiting_time(fac, 0, 2, 0) == pytest.approx(0.0, abs=1e-9)

    def test_saturated_pool_hits_ceiling(self):
        assert waiting_time(_pool_facility(), 0, 5, 0) == pytest.approx(1e3, abs=1e-9)
        assert waiting_time(_pool_facility(), 0, 3, 2) == pytest.approx(1e3, abs=1e-9)

    def test_pending_counts_like_occupied(self):
        fac = _pool_facility()
        assert waiting_time(fac, 0, 2, 2) == waiting_time(fac, 0, 4, 0)

    def test_zero_capacity_pool_rejected(self):
        with pytest.raises(ValueError):
            waiting_time(_pool_facility(), 1, 0, 0)

    @given(
        cap=st.integers(min_value=1, max_value=40),
        search=st.floats(min_value=0.05, max_value=10.0),
        aware=st.floats(min_value=0.0, max_value=1.0),
        data=st.data(),
    )
    @settings(max_examples=200, deadline=None)
    def test_wait_never_decreases_with_load(self, cap, search, aware, data):
        fac = _pool_facility(capacity=cap, search_time=search, awareness=aware)
        lo = data.draw(st.integers(min_value=0, max_value=cap))
        hi = data.draw(st.integers(min_value=lo, max_value=cap))
        assert waiting_time(fac, 0, lo, 0) <= waiting_time(fac, 0, hi, 0) + 1e-12


class TestAdvance:
    def test_one_fast_period_delivers_nominal_energy(self):
        net = make_network([make_facility(3, T=4)])
        user = make_user(uid=0, soc=10.0, gap=12.0, duration=2)
        state = initial_state(net, 4, [user])
        act = {0: Action(user=0, choice=(3, 1), duration=2)}
        nxt = advance(state, act, ExogenousInfo())
        assert nxt.soc_of(0) == pytest.approx(22.4, abs=1e-9)
        assert nxt.occupancy[(3, 1)] == 1

    def test_finished_commitment_frees_its_spot(self):
        net = make_network([make_facility(3, T=4)])
        user = make_user(uid=0, soc=10.0, gap=5.0, duration=1)
        state = initial_state(net, 4, [user])
        act = {0: Action(user=0, choice=(3, 0), duration=1)}
        nxt = advance(state, act, ExogenousInfo())
        assert nxt.occupancy.get((3, 0), 0) == 0
        assert nxt.new_spots.get((3, 0), 0) == 1
        assert 0 not in nxt.commitments

    def test_charging_clamps_at_battery_capacity(self):
        net = make_network([make_facility(3, T=4)])
        user = make_user(uid=0, soc=48.0, gap=2.0, duration=2, capacity=50.0)
        state = initial_state(net, 4, [user])
        act = {0: Action(user=0, choice=(3, 1), duration=2)}
        nxt = advance(state, act, ExogenousInfo())
        assert nxt.soc_of(0) == pytest.approx(50.0)

    def test_satisfied_idler_departs(self):
        net = make_network([make_facility(3, T=4)])
        user = make_user(uid=0, soc=30.0, gap=0.0, duration=2)
        state = initial_state(net, 4, [user])
        nxt = advance(state, {0: Action(user=0, choice=None)}, ExogenousInfo())
        assert 0 not in nxt.users()

    def test_needy_idler_is_carried_forward(self):
        net = make_network([make_facility(3, T=4)])
        user = make_user(uid=0, soc=10.0, gap=5.0, duration=2)
        state = initial_state(net, 4, [user])
        nxt = advance(state, {0: Action(user=0, choice=None)}, ExogenousInfo())
        assert 0 in nxt.carried_users

    def test_empty_transition_only_ticks_the_clock(self):
        net = make_network([make_facility(3, T=4)])
        state = initial_state(net, 4, [])
        nxt = advance(state, {}, ExogenousInfo())
        assert nxt.t == 1
        assert nxt.occupancy == {}
        assert nxt.users() == {}

    def test_overbooking_is_rejected(self):
        net = make_network([make_facility(3, T=4, fast_cap=1)])
        u0 = make_user(uid=0, soc=10.0, gap=12.0, duration=2)
        u1 = make_user(uid=1, soc=10.0, gap=12.0, duration=2)
        state = initial_state(net, 4, [u0, u1])
        acts = {
            0: Action(user=0, choice=(3, 1), duration=2),
            1: Action(user=1, choice=(3, 1), duration=2),
        }
        with pytest.raises(ValueError):
            advance(state, acts, ExogenousInfo())

    def test_stochastic_rates_route_through_exogenous_info(self):
        net = make_network([make_facility(3, T=4)])
        user = make_user(uid=0, soc=10.0, gap=12.0, duration=2)
        state = initial_state(net, 4, [user])
        act = {0: Action(user=0, choice=(3, 1), duration=2)}
        exo = ExogenousInfo(rates=lambda uid, t, k: 11.7)
        nxt = advance(state, act, exo)
        assert nxt.soc_of(0) == pytest.approx(21.7)

    def test_conservation_check_flags_bad_books(self):
        net = make_network([make_facility(3, T=4, slow_cap=1)])
        state = initial_state(net, 4, [])
        state.occupancy[(3, 0)] = 2
        with pytest.raises(AssertionError):
            state.check_conservation()
