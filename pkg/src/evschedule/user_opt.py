"""Single-user cost model and exact best response.

One user's period decision is either "no charge" or a triple
(lot, charger type, committed periods).  The cost of a charging choice is

    theta * (drive-in + drive-on cost entries)
  + theta_wait * expected wait at the pool
  + alpha * price * periods
  + alpha_prime * max(0, parking duration - periods)

and the relaxed capacity constraint enters through an exponential penalty
with per-user multipliers.  ``best_response`` enumerates the full action
set exactly; there is no search heuristic at this level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .demand import EvUser
from .network import trip_cost
from .sh import min_commitment_periods
from .state import SystemState, waiting_time

INFEASIBLE = float("inf")


@dataclass(frozen=True)
class Action:
    """One user's period decision; ``choice`` is None for "no charge"."""

    user: int
    choice: Optional[Tuple[int, int]]   # (lot, charger type)
    duration: int = 0                   # committed periods, 0 iff no charge

    def __post_init__(self):
        if self.choice is None:
            if self.duration != 0:
                raise ValueError("no-charge action cannot carry a duration")
        else:
            if self.duration < 1:
                raise ValueError("charging action needs duration >= 1")
            if self.choice[1] not in (0, 1):
                raise ValueError(f"unknown charger type {self.choice[1]}")


@dataclass(frozen=True)
class CostWeights:
    theta: float = 0.1          # drive-cost entries -> dollars
    theta_wait: float = 0.1     # waiting periods -> dollars
    alpha: float = 1.0          # price units -> dollars
    alpha_prime: float = 0.1    # early-release penalty, dollars per period
    pi: float = 6.2             # slow nominal rate, kWh per period
    big_m: float = 1000.0       # linking bound between duration and choice
    w_max: float = 1e3          # wait saturation cap, periods
    exp_cap: float = 50.0       # clamp on the penalty exponent

    def rate(self, k: int) -> float:
        return self.pi * (k + 1)


class MultiplierView:
    """Read access to one user's penalty multipliers at the current round."""

    __slots__ = ("rho", "_u")

    def __init__(self, rho: float, u: Dict[Tuple[int, int], float]):
        self.rho = rho
        self._u = u

    def u(self, lot: int, k: int) -> float:
        return self._u.get((lot, k), 0.0)


def capacity_slack(
    action: Action,
    others: Dict[Tuple[int, int], int],
    state: SystemState,
) -> float:
    """Signed overload of the chosen pool: own claim + peers - free spots.

    Positive means the relaxed capacity constraint is violated.  Zero for
    the no-charge action.
    """
    if action.choice is None:
        return 0.0
    j, k = action.choice
    free = state.capacity(j, k) - state.occupancy.get((j, k), 0)
    return 1.0 + others.get((j, k), 0) - free


# `constraint_violation` in the consensus layer's vocabulary
constraint_violation = capacity_slack


def user_cost(
    user: EvUser,
    action: Action,
    state: SystemState,
    w: CostWeights,
    pending: Optional[Dict[Tuple[int, int], int]] = None,
) -> float:
    """Period cost of one action; ``pending`` counts peers per pool.

    No-charge costs nothing when the user already meets their threshold
    and is marked infeasible otherwise (the threshold constraint binds).
    """
    soc = state.soc_of(user.id)
    if action.choice is None:
        return 0.0 if soc >= user.soc_threshold - 1e-9 else INFEASIBLE
    j, k = action.choice
    n = action.duration
    fac = state.net.facility(j)
    queue = 0 if pending is None else pending.get((j, k), 0)
    wait = waiting_time(fac, k, state.occupancy.get((j, k), 0), queue, w.w_max)
    travel = w.theta * trip_cost(state.net, user.origin, j, user.destination)
    return (
        travel
        + w.theta_wait * wait
        + w.alpha * fac.price(state.t, k) * n
        + w.alpha_prime * max(0, user.parking_duration - n)
    )


def penalized_cost(
    user: EvUser,
    action: Action,
    state: SystemState,
    w: CostWeights,
    mult: MultiplierView,
    others: Dict[Tuple[int, int], int],
) -> float:
    """user_cost plus the exponential capacity penalty of the chosen pool."""
    base = user_cost(user, action, state, w, pending=others)
    if action.choice is None or not math.isfinite(base):
        return base
    j, k = action.choice
    g = capacity_slack(action, others, state)
    exponent = min(mult.rho * g, w.exp_cap)
    return base + mult.u(j, k) * math.exp(exponent) / mult.rho


def feasible_durations(user: EvUser, soc: float, k: int, t: int, horizon: int, w: CostWeights) -> Tuple[int, int]:
    """[n_min, n_max] for one charger type; empty when n_min > n_max."""
    n_min = max(1, min_commitment_periods(user.soc_threshold - soc, w.rate(k)))
    n_max = min(user.parking_duration, horizon - t)
    return n_min, n_max


def best_response(
    user: EvUser,
    state: SystemState,
    others: Dict[Tuple[int, int], int],
    w: CostWeights,
    mult: Optional[MultiplierView] = None,
) -> Action:
    """Exact argmin of the (penalized) cost over the full action set.

    Enumerates no-charge plus every (lot, type, duration) with a positive
    pool and a duration window; ties break toward no-charge, then lower
    lot, type, and duration.  When nothing is feasible and the user still
    needs charge, the returned no-charge action means "unserved: roll
    forward", not "depart".
    """
    if mult is None:
        mult = MultiplierView(1.0, {})
    soc = state.soc_of(user.id)
    best: Tuple[float, int, int, int, int] = (INFEASIBLE, 1, 0, 0, 0)
    best_action = Action(user.id, None)
    no_charge = user_cost(user, Action(user.id, None), state, w)
    if math.isfinite(no_charge):
        best = (no_charge, 0, 0, 0, 0)

    for fac in state.net.facilities:
        travel = w.theta * trip_cost(state.net, user.origin, fac.lot, user.destination)
        for k in (0, 1):
            if fac.capacity(k) <= 0:
                continue
            n_min, n_max = feasible_durations(user, soc, k, state.t, state.horizon, w)
            if n_min > n_max:
                continue
            queue = others.get((fac.lot, k), 0)
            wait = waiting_time(fac, k, state.occupancy.get((fac.lot, k), 0), queue, w.w_max)
            free = fac.capacity(k) - state.occupancy.get((fac.lot, k), 0)
            g = 1.0 + queue - free
            penalty = mult.u(fac.lot, k) * math.exp(min(mult.rho * g, w.exp_cap)) / mult.rho
            head = travel + w.theta_wait * wait + penalty
            price = fac.price(state.t, k)
            for n in range(n_min, n_max + 1):
                cost = head + w.alpha * price * n + w.alpha_prime * max(0, user.parking_duration - n)
                key = (cost, 1, fac.lot, k, n)
                if key < best:
                    best = key
                    best_action = Action(user.id, (fac.lot, k), n)
    return best_action
