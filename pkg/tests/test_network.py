import numpy as np
import pytest

from evschedule.network import ChargerPool, Facility, Network, load_network, trip_cost

from conftest import make_facility, make_network


def test_trip_cost_sums_both_legs(one_lot_net):
    assert trip_cost(one_lot_net, 1, 3, 2) == pytest.approx(4.5)


def test_trip_cost_zero_when_colocated():
    fac = make_facility(3, T=2)
    net = make_network([fac], to_lot={(1, 3): 0.0}, from_lot={(3, 2): 0.0})
    assert trip_cost(net, 1, 3, 2) == 0.0


def test_network_with_no_facilities_is_valid():
    net = Network(nodes=(1, 2), origins=(1,), destinations=(2,),
                  facilities=(), to_lot={}, from_lot={})
    assert net.lots == ()


def test_missing_lot_raises():
    net = make_network([make_facility(3, T=2)])
    with pytest.raises(KeyError):
        net.facility(99)


def test_pool_capacity_must_be_nonnegative():
    with pytest.raises(ValueError):
        ChargerPool(capacity=-1, search_time=1.0, awareness=1.0)


def test_awareness_bounds():
    with pytest.raises(ValueError):
        ChargerPool(capacity=1, search_time=1.0, awareness=1.5)


def _facility_doc(lot=3):
    return {
        "lot": lot,
        "slow": {"capacity": 1, "search_time": 1.0, "awareness": 1.0},
        "fast": {"capacity": 0, "search_time": 1.0, "awareness": 1.0},
        "prices": {"slow": 0.2, "fast": 0.3},
    }


def test_load_network_rejects_unknown_origin():
    doc = {
        "nodes": [1, 2, 3],
        "origins": [9],
        "destinations": [2],
        "facilities": [_facility_doc()],
        "to_lot": {"9-3": 1.0},
        "from_lot": {"3-2": 1.0},
    }
    with pytest.raises(ValueError):
        load_network(doc, T=2)


def test_load_network_rejects_duplicate_lots():
    doc = {
        "nodes": [1, 2, 3],
        "origins": [1],
        "destinations": [2],
        "facilities": [_facility_doc(), _facility_doc()],
        "to_lot": {"1-3": 1.0},
        "from_lot": {"3-2": 1.0},
    }
    with pytest.raises(ValueError):
        load_network(doc, T=2)


def test_load_network_rejects_missing_cost_entry():
    doc = {
        "nodes": [1, 2, 3],
        "origins": [1],
        "destinations": [2],
        "facilities": [_facility_doc()],
        "to_lot": {},
        "from_lot": {"3-2": 1.0},
    }
    with pytest.raises(ValueError):
        load_network(doc, T=2)


def test_load_network_round_trip():
    doc = {
        "nodes": 3,
        "origins": [1],
        "destinations": [2],
        "facilities": [_facility_doc()],
        "to_lot": {"1-3": 3.0},
        "from_lot": {"3-2": 1.5},
    }
    net = load_network(doc, T=2)
    assert net.lots == (3,)
    assert trip_cost(net, 1, 3, 2) == pytest.approx(4.5)
    assert net.facility(3).price(0, 1) == pytest.approx(0.3)


def test_facility_price_lookup():
    prices = np.array([[0.1, 0.4], [0.2, 0.5]])
    fac = Facility(lot=3, pools=(ChargerPool(1, 1.0, 1.0), ChargerPool(1, 1.0, 1.0)),
                   prices=prices)
    assert fac.price(1, 1) == pytest.approx(0.5)
