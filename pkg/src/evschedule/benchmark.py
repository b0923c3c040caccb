"""First-come-first-served reference discipline.

Arrivals pick the pool that looks cheapest at face value (current
occupancy, nobody else moving) and commit to it: if the pool is full they
join its queue and never reconsider.  Queue heads are served whenever a
spot opens, in arrival order, charging just long enough to clear their
threshold.  Costs are booked with the same realized-accounting rules as
every other scheduler, so totals are directly comparable.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from .demand import EvUser
from .network import Network
from .scoring import ScheduleEntry, entry_for_no_charge, entry_for_service, entry_for_unserved
from .sh import min_commitment_periods
from .state import ExogenousInfo, SystemState, advance, initial_state
from .user_opt import Action, CostWeights, user_cost


@dataclass
class PriorityResult:
    entries: List[ScheduleEntry]
    # one row per period: occupancy per pool while that period ran
    occupancy: List[Dict[Tuple[int, int], int]] = field(default_factory=list)
    queue_lengths: List[int] = field(default_factory=list)
    # one row per period: mean start-of-period SOC of users charging per lot
    soc_by_lot: List[Dict[int, float]] = field(default_factory=list)


def _charge_duration(user: EvUser, soc: float, k: int, t: int, horizon: int, w: CostWeights) -> int:
    need = max(1, min_commitment_periods(user.soc_threshold - soc, w.rate(k)))
    return max(1, min(need, user.parking_duration, horizon - t))


def run_priority(
    net: Network,
    horizon: int,
    arrivals_by_period: List[List[EvUser]],
    w: CostWeights,
    rates: Optional[Callable[[int, int, int], float]] = None,
) -> PriorityResult:
    """Simulate the queueing discipline over the whole horizon.

    ``arrivals_by_period`` and ``rates`` are supplied by the caller so a
    paired run of another scheduler can consume the exact same exogenous
    randomness.
    """
    if len(arrivals_by_period) != horizon:
        raise ValueError("need one arrival list per period")
    state = initial_state(net, horizon, arrivals_by_period[0], nominal_rate=w.rate)
    queues: Dict[Tuple[int, int], deque] = {pool: deque() for pool in state.pools()}
    users: Dict[int, EvUser] = {}
    entries: List[ScheduleEntry] = []
    result = PriorityResult(entries=entries)

    for t in range(horizon):
        users.update(state.users())
        claims: Dict[Tuple[int, int], int] = {}
        assigned: Dict[int, Tuple[int, int, int]] = {}  # uid -> (lot, k, n)

        # queue heads first, in arrival order per pool
        for pool in sorted(queues):
            q = queues[pool]
            while q and state.free_spots(*pool) - claims.get(pool, 0) >= 1:
                uid = q.popleft()
                u = users[uid]
                n = _charge_duration(u, state.soc_of(uid), pool[1], t, horizon, w)
                assigned[uid] = (pool[0], pool[1], n)
                claims[pool] = claims.get(pool, 0) + 1

        # new arrivals choose once and stick with it
        for u in sorted(state.new_users.values(), key=lambda x: x.id):
            if state.soc_of(u.id) >= u.soc_threshold - 1e-9:
                entries.append(entry_for_no_charge(u, t, w))
                continue
            best_pool = None
            best_cost = float("inf")
            for pool in state.pools():
                n = _charge_duration(u, state.soc_of(u.id), pool[1], t, horizon, w)
                cost = user_cost(u, Action(u.id, pool, n), state, w)
                if cost < best_cost - 1e-12:
                    best_pool, best_cost = pool, cost
            if best_pool is None:
                continue  # no pools anywhere; horizon pass will book the miss
            if state.free_spots(*best_pool) - claims.get(best_pool, 0) >= 1:
                n = _charge_duration(u, state.soc_of(u.id), best_pool[1], t, horizon, w)
                assigned[u.id] = (best_pool[0], best_pool[1], n)
                claims[best_pool] = claims.get(best_pool, 0) + 1
            else:
                queues[best_pool].append(u.id)

        # book the services with the shared id-order wait convention
        earlier: Dict[Tuple[int, int], int] = {}
        for uid in sorted(assigned):
            j, k, n = assigned[uid]
            entries.append(
                entry_for_service(
                    net,
                    users[uid],
                    t,
                    j,
                    k,
                    n,
                    state.occupancy.get((j, k), 0),
                    earlier.get((j, k), 0),
                    w,
                )
            )
            earlier[(j, k)] = earlier.get((j, k), 0) + 1

        occupancy_now = dict(state.occupancy)
        for pool, c in claims.items():
            occupancy_now[pool] = occupancy_now.get(pool, 0) + c
        result.occupancy.append(occupancy_now)
        result.queue_lengths.append(sum(len(q) for q in queues.values()))

        soc_sums: Dict[int, Tuple[float, int]] = {}
        for uid, com in state.commitments.items():
            s, c = soc_sums.get(com.lot, (0.0, 0))
            soc_sums[com.lot] = (s + state.soc_of(uid), c + 1)
        for uid, (j, k, n) in assigned.items():
            s, c = soc_sums.get(j, (0.0, 0))
            soc_sums[j] = (s + state.soc_of(uid), c + 1)
        result.soc_by_lot.append({lot: s / c for lot, (s, c) in soc_sums.items()})

        actions = {uid: Action(uid, (j, k), n) for uid, (j, k, n) in assigned.items()}
        for u in state.uncommitted():
            if u.id not in actions and state.soc_of(u.id) >= u.soc_threshold - 1e-9:
                actions[u.id] = Action(u.id, None)
        incoming = arrivals_by_period[t + 1] if t + 1 < horizon else []
        exo = ExogenousInfo(arrivals=incoming, rates=rates)
        state = advance(state, actions, exo)

    users.update(state.users())
    served = {e.user for e in entries}
    for uid in sorted(users):
        if uid not in served:
            entries.append(entry_for_unserved(users[uid], horizon, w))
    return result
