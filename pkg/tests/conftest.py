"""Shared builders for hand-sized fixtures.

Most unit tests want a one- or two-lot network with known prices and
search times, plus users whose charge gaps are chosen to make durations
obvious.  The builders here keep those literals in one place.
"""

import numpy as np
import pytest

from evschedule.demand import EvUser
from evschedule.network import ChargerPool, Facility, Network


def make_facility(lot, T, slow_cap=2, fast_cap=1, search_time=1.0, awareness=1.0,
                  slow_price=0.2, fast_price=0.3):
    pools = (
        ChargerPool(capacity=slow_cap, search_time=search_time, awareness=awareness),
        ChargerPool(capacity=fast_cap, search_time=search_time, awareness=awareness),
    )
    prices = np.zeros((T, 2))
    prices[:, 0] = slow_price
    prices[:, 1] = fast_price
    prices.setflags(write=False)
    return Facility(lot=lot, pools=pools, prices=prices)


def make_network(facilities, to_lot=None, from_lot=None, origin=1, destination=2):
    to_lot = to_lot or {(origin, f.lot): 3.0 for f in facilities}
    from_lot = from_lot or {(f.lot, destination): 1.5 for f in facilities}
    return Network(
        nodes=tuple([origin, destination] + [f.lot for f in facilities]),
        origins=(origin,),
        destinations=(destination,),
        facilities=tuple(facilities),
        to_lot=to_lot,
        from_lot=from_lot,
    )


def make_user(uid=0, soc=10.0, gap=5.0, duration=2, arrival=0, capacity=50.0):
    return EvUser(
        id=uid, origin=1, destination=2, arrival=arrival,
        soc=soc, battery_capacity=capacity,
        parking_duration=duration,
        soc_threshold=min(soc + gap, capacity),
    )


@pytest.fixture
def one_lot_net():
    """Single facility at node 3, trip 3.0 + 1.5, horizon-agnostic prices."""
    return make_network([make_facility(3, T=4)])
