"""System state: occupancy, spot availability, SOC levels, and the
period-to-period transition.

Bookkeeping convention: ``occupancy[j, k]`` counts spots in use during the
current period, ``new_spots`` counts spots freed by departures at the end
of the previous period (still unoccupied), and available capacity is their
complement.  The transition applies one joint action, delivers energy to
every committed user, retires finished commitments, and admits the next
period's arrivals.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

from .demand import EvUser
from .network import Facility, Network

W_MAX_DEFAULT = 1e3


def waiting_time(fac: Facility, k: int, occupied: int, pending: int, w_max: float = W_MAX_DEFAULT) -> float:
    """Expected within-period wait at one charger pool, in periods.

    Grows hyperbolically with the share of spots that are occupied or
    spoken for, and saturates at ``w_max`` once no spot is left.  A pool
    with zero capacity has no waiting process to speak of (error).
    """
    pool = fac.pool(k)
    if pool.capacity <= 0:
        raise ValueError(f"facility {fac.lot} has no type-{k} chargers")
    load = occupied + pending
    if load >= pool.capacity:
        return w_max
    base = pool.search_time * pool.awareness
    return base / (1.0 - load / pool.capacity)


@dataclass(frozen=True)
class Commitment:
    lot: int
    k: int
    remaining: int  # periods of charging still to run
    duration: int   # committed periods in total


@dataclass
class ExogenousInfo:
    """Everything outside the schedulers' control for one transition."""

    arrivals: List[EvUser] = field(default_factory=list)
    released_spots: Dict[Tuple[int, int], int] = field(default_factory=dict)
    # delivered kWh for (user id, period, charger type); nominal if None
    rates: Optional[Callable[[int, int, int], float]] = None


@dataclass
class SystemState:
    t: int
    horizon: int
    net: Network
    occupancy: Dict[Tuple[int, int], int]
    new_spots: Dict[Tuple[int, int], int]
    carried_users: Dict[int, EvUser]   # present before this period
    new_users: Dict[int, EvUser]       # arrived this period
    socs: Dict[int, float]
    commitments: Dict[int, Commitment] = field(default_factory=dict)
    nominal_rate: Callable[[int], float] = lambda k: 6.2 * (k + 1)

    # -- structure helpers -------------------------------------------------

    def users(self) -> Dict[int, EvUser]:
        merged = dict(self.carried_users)
        merged.update(self.new_users)
        return merged

    def uncommitted(self) -> List[EvUser]:
        out = [u for uid, u in self.users().items() if uid not in self.commitments]
        out.sort(key=lambda u: u.id)
        return out

    def capacity(self, lot: int, k: int) -> int:
        return self.net.facility(lot).capacity(k)

    def free_spots(self, lot: int, k: int) -> int:
        return self.capacity(lot, k) - self.occupancy.get((lot, k), 0)

    def soc_of(self, uid: int) -> float:
        return self.socs[uid]

    def pools(self) -> List[Tuple[int, int]]:
        return [(f.lot, k) for f in self.net.facilities for k in (0, 1) if f.capacity(k) > 0]

    def waits(self, w_max: float = W_MAX_DEFAULT) -> Dict[Tuple[int, int], float]:
        """Zero-pending expected waits for every pool (informational view)."""
        return {
            (lot, k): waiting_time(self.net.facility(lot), k, self.occupancy.get((lot, k), 0), 0, w_max)
            for lot, k in self.pools()
        }

    def check_conservation(self) -> None:
        for lot, k in self.pools():
            occ = self.occupancy.get((lot, k), 0)
            fresh = self.new_spots.get((lot, k), 0)
            cap = self.capacity(lot, k)
            if occ < 0 or fresh < 0 or occ + fresh > cap:
                raise AssertionError(
                    f"spot books broken at ({lot}, {k}): occupied {occ}, newly freed {fresh}, capacity {cap}"
                )


def initial_state(net: Network, horizon: int, arrivals: List[EvUser], nominal_rate=None) -> SystemState:
    state = SystemState(
        t=0,
        horizon=horizon,
        net=net,
        occupancy={},
        new_spots={},
        carried_users={},
        new_users={u.id: u for u in arrivals},
        socs={u.id: u.soc for u in arrivals},
    )
    if nominal_rate is not None:
        state.nominal_rate = nominal_rate
    return state


def advance(state: SystemState, actions: Dict[int, "Action"], exo: ExogenousInfo) -> SystemState:
    """Apply one period: assignments, charging, departures, arrivals.

    ``actions`` maps user id to the action taken this period; users absent
    from the map (or deferring) simply roll forward.  Capacity is a hard
    precondition here: an over-booking joint action is a caller bug.
    """
    users = state.users()
    occupancy = dict(state.occupancy)
    socs = dict(state.socs)
    commitments = dict(state.commitments)

    # new assignments claim spots now
    demand_by_pool: Dict[Tuple[int, int], int] = {}
    for uid, action in actions.items():
        if action.choice is None:
            continue
        if uid in commitments:
            raise ValueError(f"user {uid} already holds a commitment")
        j, k = action.choice
        demand_by_pool[(j, k)] = demand_by_pool.get((j, k), 0) + 1
    for (j, k), extra in demand_by_pool.items():
        free = state.capacity(j, k) - occupancy.get((j, k), 0)
        if extra > free:
            raise ValueError(
                f"capacity exceeded at ({j}, {k}): {extra} assignments for {free} free spots"
            )
    for uid, action in actions.items():
        if action.choice is None:
            continue
        j, k = action.choice
        occupancy[(j, k)] = occupancy.get((j, k), 0) + 1
        commitments[uid] = Commitment(lot=j, k=k, remaining=action.duration, duration=action.duration)

    # charging: every committed user receives one period of energy
    for uid, com in commitments.items():
        user = users[uid]
        if exo.rates is not None:
            delivered = exo.rates(uid, state.t, com.k)
        else:
            delivered = state.nominal_rate(com.k)
        if delivered < 0:
            raise ValueError("delivered energy must be >= 0")
        socs[uid] = min(user.battery_capacity, socs[uid] + delivered)

    # departures free spots that become visible next period
    new_spots: Dict[Tuple[int, int], int] = {}
    departed = set()
    for uid, com in list(commitments.items()):
        rem = com.remaining - 1
        if rem <= 0:
            occupancy[(com.lot, com.k)] -= 1
            new_spots[(com.lot, com.k)] = new_spots.get((com.lot, com.k), 0) + 1
            departed.add(uid)
            del commitments[uid]
        else:
            commitments[uid] = replace(com, remaining=rem)

    # users with no charging need leave once they have acted
    for uid, action in actions.items():
        if action.choice is None and uid not in commitments:
            user = users[uid]
            if socs[uid] >= user.soc_threshold - 1e-9:
                departed.add(uid)

    # exogenous releases (background occupancy drain), if any
    for (j, k), count in exo.released_spots.items():
        have = occupancy.get((j, k), 0)
        if count > have:
            raise ValueError(f"release of {count} spots at ({j}, {k}) exceeds occupancy {have}")
        occupancy[(j, k)] = have - count
        new_spots[(j, k)] = new_spots.get((j, k), 0) + count

    carried = {}
    for uid, u in users.items():
        if uid not in departed:
            carried[uid] = u
    for u in exo.arrivals:
        socs[u.id] = u.soc

    nxt = SystemState(
        t=state.t + 1,
        horizon=state.horizon,
        net=state.net,
        occupancy=occupancy,
        new_spots=new_spots,
        carried_users=carried,
        new_users={u.id: u for u in exo.arrivals},
        socs={uid: socs[uid] for uid in list(carried) + [u.id for u in exo.arrivals]},
        commitments=commitments,
        nominal_rate=state.nominal_rate,
    )
    nxt.check_conservation()
    return nxt
