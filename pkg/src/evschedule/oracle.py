"""Exhaustive clairvoyant solver for small instances.

Enumerates every joint schedule (who charges where, starting when, for how
long, or not at all), discards the capacity-infeasible ones, and prices
the rest with the exact realized-accounting rules the schedulers are
scored by.  Delivered energy is taken at nominal, so this is the
deterministic-rate optimum; the enumeration size is guarded because it
grows as the product of per-user option counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .demand import EvUser
from .network import Network
from .scoring import (
    ScheduleEntry,
    entry_for_no_charge,
    entry_for_service,
    entry_for_unserved,
    schedule_total,
)
from .sh import min_commitment_periods
from .user_opt import CostWeights

# one per-user option: (start period, lot, charger type, duration); None = unserved
Plan = Optional[Tuple[int, int, int, int]]


@dataclass(frozen=True)
class OracleResult:
    total: float
    plans: Dict[int, Plan]
    combos: int          # joint schedules enumerated (capacity-feasible leaves)
    entries: Tuple[ScheduleEntry, ...]


def user_options(net: Network, horizon: int, user: EvUser, w: CostWeights) -> List[Plan]:
    """Every service option open to one user, plus going unserved.

    Options are ordered canonically (start period, lot, type, duration,
    then unserved) so ties resolve the same way on every run.
    """
    if user.soc >= user.soc_threshold - 1e-9:
        return [(user.arrival, -1, -1, 0)]  # no charge needed; depart on arrival
    options: List[Plan] = []
    for t in range(user.arrival, horizon):
        for fac in net.facilities:
            for k in (0, 1):
                if fac.capacity(k) < 1:
                    continue
                n_lo = max(1, min_commitment_periods(user.soc_threshold - user.soc, w.rate(k)))
                n_hi = min(user.parking_duration, horizon - t)
                for n in range(n_lo, n_hi + 1):
                    options.append((t, fac.lot, k, n))
    options.append(None)
    return options


def _price_combo(
    net: Network,
    horizon: int,
    users: List[EvUser],
    combo: List[Plan],
    w: CostWeights,
) -> List[ScheduleEntry]:
    # occupancy carried into each period, per pool: users who started earlier
    # and are still charging
    entries: List[ScheduleEntry] = []
    for u, plan in zip(users, combo):
        if plan is None:
            entries.append(entry_for_unserved(u, horizon, w))
            continue
        t, j, k, n = plan
        if j < 0:
            entries.append(entry_for_no_charge(u, t, w))
            continue
        carried = 0
        earlier = 0
        for other, other_plan in zip(users, combo):
            if other.id == u.id or other_plan is None:
                continue
            ot, oj, ok, on = other_plan
            if (oj, ok) != (j, k):
                continue
            if ot < t < ot + on:
                carried += 1
            elif ot == t and other.id < u.id:
                earlier += 1
        entries.append(entry_for_service(net, u, t, j, k, n, carried, earlier, w))
    return entries


def brute_force(
    net: Network,
    horizon: int,
    users: List[EvUser],
    w: CostWeights,
    limit: int = 1_000_000,
) -> OracleResult:
    """Best joint schedule by exhaustive search.

    Raises ValueError when the joint option space exceeds ``limit``; shrink
    the instance rather than raising the cap.
    """
    users = sorted(users, key=lambda u: u.id)
    option_sets = [user_options(net, horizon, u, w) for u in users]
    space = 1
    for opts in option_sets:
        space *= len(opts)
        if space > limit:
            raise ValueError(
                f"joint schedule space exceeds {limit}; this solver is for micro instances"
            )

    pools = [(f.lot, k) for f in net.facilities for k in (0, 1) if f.capacity(k) > 0]
    cap = {pool: net.facility(pool[0]).capacity(pool[1]) for pool in pools}
    # occupancy[(pool, period)] while searching
    load: Dict[Tuple[Tuple[int, int], int], int] = {}

    best_total = float("inf")
    best_combo: Optional[List[Plan]] = None
    best_entries: List[ScheduleEntry] = []
    combo: List[Plan] = [None] * len(users)
    leaves = 0

    def dfs(i: int):
        nonlocal best_total, best_combo, best_entries, leaves
        if i == len(users):
            leaves += 1
            entries = _price_combo(net, horizon, users, combo, w)
            total = schedule_total(entries)
            if total < best_total - 1e-12:
                best_total = total
                best_combo = list(combo)
                best_entries = entries
            return
        for plan in option_sets[i]:
            touched = []
            feasible = True
            if plan is not None and plan[1] >= 0:
                t, j, k, n = plan
                for s in range(t, t + n):
                    key = ((j, k), s)
                    if load.get(key, 0) + 1 > cap[(j, k)]:
                        feasible = False
                        break
                    load[key] = load.get(key, 0) + 1
                    touched.append(key)
            if feasible:
                combo[i] = plan
                dfs(i + 1)
                combo[i] = None
            for key in touched:
                load[key] -= 1

    dfs(0)
    assert best_combo is not None  # the all-unserved combo is always feasible
    plans = {u.id: p for u, p in zip(users, best_combo)}
    return OracleResult(
        total=best_total,
        plans=plans,
        combos=leaves,
        entries=tuple(best_entries),
    )
