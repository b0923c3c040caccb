"""Realized schedule accounting shared by every scheduler and the oracle.

One convention, used everywhere results are compared: a served user pays
the drive, wait, charging, and early-release terms priced at the service
period, plus one waiting unit per period spent deferred or queued first.
The within-period wait is evaluated against the pool's occupancy at the
period start plus the same-period claimants with lower user id, which is
order-free and identical across schedulers.  A user still unserved when
the horizon closes pays the saturation wait once (the threshold constraint
was never met).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .demand import EvUser
from .network import Network, trip_cost
from .state import waiting_time
from .user_opt import CostWeights


@dataclass(frozen=True)
class ScheduleEntry:
    user: int
    period: int           # service period; last horizon period if unserved
    lot: int              # -1 when no charging happened
    ktype: int            # -1 when no charging happened
    duration: int
    wait_periods: int     # whole periods spent deferred or queued
    cost: float           # full realized cost, dollars
    served: int           # 1 served (or no charge needed), 0 unserved


def service_cost(
    net: Network,
    user: EvUser,
    t: int,
    lot: int,
    k: int,
    duration: int,
    occupied_at_start: int,
    earlier_claims: int,
    w: CostWeights,
) -> float:
    """Realized cost of one service, excluding accrued deferral charges."""
    fac = net.facility(lot)
    wait = waiting_time(fac, k, occupied_at_start, earlier_claims, w.w_max)
    return (
        w.theta * trip_cost(net, user.origin, lot, user.destination)
        + w.theta_wait * wait
        + w.alpha * fac.price(t, k) * duration
        + w.alpha_prime * max(0, user.parking_duration - duration)
    )


def defer_charge(w: CostWeights, periods: int) -> float:
    return w.theta_wait * periods


def unserved_surcharge(w: CostWeights) -> float:
    # the threshold constraint was never met; price it like a saturated wait
    return w.theta_wait * w.w_max


def entry_for_service(
    net: Network,
    user: EvUser,
    t: int,
    lot: int,
    k: int,
    duration: int,
    occupied_at_start: int,
    earlier_claims: int,
    w: CostWeights,
) -> ScheduleEntry:
    waited = t - user.arrival
    cost = service_cost(net, user, t, lot, k, duration, occupied_at_start, earlier_claims, w)
    cost += defer_charge(w, waited)
    return ScheduleEntry(
        user=user.id,
        period=t,
        lot=lot,
        ktype=k,
        duration=duration,
        wait_periods=waited,
        cost=cost,
        served=1,
    )


def entry_for_no_charge(user: EvUser, t: int, w: CostWeights) -> ScheduleEntry:
    waited = t - user.arrival
    return ScheduleEntry(
        user=user.id,
        period=t,
        lot=-1,
        ktype=-1,
        duration=0,
        wait_periods=waited,
        cost=defer_charge(w, waited),
        served=1,
    )


def entry_for_unserved(user: EvUser, horizon: int, w: CostWeights) -> ScheduleEntry:
    waited = horizon - user.arrival
    return ScheduleEntry(
        user=user.id,
        period=horizon - 1,
        lot=-1,
        ktype=-1,
        duration=0,
        wait_periods=waited,
        cost=defer_charge(w, waited) + unserved_surcharge(w),
        served=0,
    )


def schedule_total(entries: List[ScheduleEntry]) -> float:
    return sum(e.cost for e in entries)


def split_subtotals(
    net: Network,
    users: Dict[int, EvUser],
    entries: List[ScheduleEntry],
    w: CostWeights,
) -> Dict[str, float]:
    """Decompose realized totals into travel / charging / penalty / waiting."""
    travel = charging = penalty = 0.0
    for e in entries:
        if e.lot < 0:
            continue
        user = users[e.user]
        travel += w.theta * trip_cost(net, user.origin, e.lot, user.destination)
        charging += w.alpha * net.facility(e.lot).price(e.period, e.ktype) * e.duration
        penalty += w.alpha_prime * max(0, user.parking_duration - e.duration)
    total = schedule_total(entries)
    return {
        "total": total,
        "travel": travel,
        "charging": charging,
        "penalty": penalty,
        "waiting": total - travel - charging - penalty,
    }
