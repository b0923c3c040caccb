import numpy as np
import pytest

from evschedule.demand import DemandGenerator, DemandProfile, EvUser, required_soc

from conftest import make_facility, make_network


def _profile(**kw):
    base = dict(
        bands=((0, 4, 2.0),),
        onward_miles={2: 10.0},
        efficiency=2.91,
        reserve=1.0,
        battery_capacity=50.0,
    )
    base.update(kw)
    return DemandProfile(**base)


def test_required_soc_adds_reserve():
    assert required_soc(_profile(), 2, 50.0) == pytest.approx(10.0 / 2.91 + 1.0)


def test_required_soc_zero_distance_is_reserve_only():
    p = _profile(onward_miles={2: 0.0})
    assert required_soc(p, 2, 50.0) == pytest.approx(1.0)


def test_required_soc_clamps_at_battery_capacity():
    p = _profile(onward_miles={2: 1000.0})
    assert required_soc(p, 2, 50.0) == pytest.approx(50.0)


def test_required_soc_unknown_destination():
    with pytest.raises(KeyError):
        required_soc(_profile(), 99, 50.0)


def test_zero_rate_band_generates_nobody():
    net = make_network([make_facility(3, T=4)])
    gen = DemandGenerator(_profile(bands=((0, 4, 0.0),)), net, np.random.default_rng(7))
    for t in range(4):
        assert gen.generate_arrivals(t) == []


def test_bands_must_tile_the_horizon():
    with pytest.raises(ValueError):
        _profile(bands=((0, 2, 1.0), (3, 4, 1.0)))


def test_band_mean_must_be_nonnegative():
    with pytest.raises(ValueError):
        _profile(bands=((0, 4, -1.0),))


def test_generated_users_are_valid_and_ordered():
    net = make_network([make_facility(3, T=4)])
    gen = DemandGenerator(_profile(), net, np.random.default_rng(11))
    seen = []
    for t in range(4):
        for u in gen.generate_arrivals(t):
            assert u.arrival == t
            assert 0.0 <= u.soc <= u.battery_capacity
            assert u.soc_threshold <= u.battery_capacity + 1e-9
            assert u.parking_duration >= 1
            seen.append(u.id)
    assert seen == sorted(seen)
    assert len(seen) == len(set(seen))


def test_scale_doubles_mean_arrivals():
    assert _profile(scale=2.0).mean_arrivals(1) == pytest.approx(
        2.0 * _profile().mean_arrivals(1)
    )


def test_mean_arrivals_outside_bands_is_zero():
    assert _profile().mean_arrivals(99) == 0.0


def test_user_rejects_threshold_above_capacity():
    with pytest.raises(ValueError):
        EvUser(id=0, origin=1, destination=2, arrival=0, soc=10.0,
               battery_capacity=50.0, parking_duration=2, soc_threshold=60.0)


def test_user_rejects_zero_duration():
    with pytest.raises(ValueError):
        EvUser(id=0, origin=1, destination=2, arrival=0, soc=10.0,
               battery_capacity=50.0, parking_duration=0, soc_threshold=20.0)
