"""Consensus assignment through penalized best-response sweeps.

All users present in one period re-optimize simultaneously against the
previous sweep's declared choices (a Jacobi scheme, so sweep order cannot
matter).  A strictly growing penalty weight prices capacity overloads via
per-user exponential multipliers; after the loop, any residual overload is
cleared by evicting the most expensive claimants, so the returned joint
action is always capacity-feasible.

Two damping rules keep simultaneous re-optimization from flip-flopping
between near-equivalent pools: a user only abandons their previous choice
for a strict improvement, and entry into each pool is rationed to the
spots actually free once non-movers keep theirs, granted to the largest
improvements first.  The loop is fully deterministic, so results cannot
depend on worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import nnls

from .demand import EvUser
from .network import trip_cost
from .state import SystemState
from .user_opt import (
    Action,
    CostWeights,
    MultiplierView,
    best_response,
    capacity_slack,
    penalized_cost,
    user_cost,
)

Pool = Tuple[int, int]


@dataclass
class MultiplierState:
    """Per-user penalty multipliers and the shared penalty weight."""

    rho: float
    growth: float
    z: int = 1
    u: Dict[Tuple[int, int, int], float] = field(default_factory=dict)  # (uid, lot, k)

    def view(self, uid: int) -> MultiplierView:
        table = {
            (lot, k): value
            for (vid, lot, k), value in self.u.items()
            if vid == uid
        }
        return MultiplierView(self.rho, table)


def init_multipliers(users: List[EvUser], pools: List[Pool], rho0: float, u0: float, growth: float) -> MultiplierState:
    u = {(usr.id, lot, k): u0 for usr in users for lot, k in pools}
    return MultiplierState(rho=rho0, growth=growth, u=u)


def update_multipliers(m: MultiplierState, slack: Dict[Pool, float]) -> MultiplierState:
    """One penalty step: u <- max(0, u + rho * slack), then grow rho."""
    new_u = {}
    for (uid, lot, k), value in m.u.items():
        g = slack.get((lot, k), 0.0)
        new_u[(uid, lot, k)] = max(0.0, value + m.rho * g)
    return MultiplierState(rho=m.rho * m.growth, growth=m.growth, z=m.z + 1, u=new_u)


@dataclass
class IterationRow:
    iteration: int
    total: float
    travel: float
    charging: float
    penalty: float       # early-release component
    waiting: float
    max_violation: float
    occupancy: Dict[Pool, int]
    marginal: Optional[Dict[Pool, int]]
    moved: int


@dataclass
class ConsensusTrace:
    rows: List[IterationRow] = field(default_factory=list)
    converged_at: Optional[int] = None
    evicted: List[int] = field(default_factory=list)
    # multiplier state after the last sweep, for first-order diagnostics
    multipliers: Optional["MultiplierState"] = None


@dataclass(frozen=True)
class GneConfig:
    max_iters: int = 10
    rel_tol: float = 0.005
    rho0: float = 1.0
    growth: float = 2.0
    u0: float = 1.0
    workers: int = 1


def _counts(actions: Dict[int, Action]) -> Dict[Pool, int]:
    counts: Dict[Pool, int] = {}
    for a in actions.values():
        if a.choice is not None:
            counts[a.choice] = counts.get(a.choice, 0) + 1
    return counts


def _others(counts: Dict[Pool, int], action: Optional[Action]) -> Dict[Pool, int]:
    if action is None or action.choice is None:
        return counts
    out = dict(counts)
    out[action.choice] -= 1
    if out[action.choice] == 0:
        del out[action.choice]
    return out


def _profile_row(
    iteration: int,
    state: SystemState,
    users: List[EvUser],
    actions: Dict[int, Action],
    w: CostWeights,
    prev_occ: Optional[Dict[Pool, int]],
    moved: int,
) -> IterationRow:
    counts = _counts(actions)
    travel = charging = penalty = waiting = total = 0.0
    for user in users:
        a = actions[user.id]
        if a.choice is None:
            # rolls forward unserved; one period of waiting value
            total += w.theta_wait
            waiting += w.theta_wait
            continue
        others = _others(counts, a)
        c = user_cost(user, a, state, w, pending=others)
        total += c
        j, k = a.choice
        fac = state.net.facility(j)
        travel += w.theta * trip_cost(state.net, user.origin, j, user.destination)
        charging += w.alpha * fac.price(state.t, k) * a.duration
        penalty += w.alpha_prime * max(0, user.parking_duration - a.duration)
    waiting = total - travel - charging - penalty
    violation = 0.0
    occupancy: Dict[Pool, int] = {}
    for lot, k in state.pools():
        n_here = counts.get((lot, k), 0)
        occupancy[(lot, k)] = n_here
        free = state.capacity(lot, k) - state.occupancy.get((lot, k), 0)
        violation = max(violation, float(n_here - free))
    marginal = None
    if prev_occ is not None:
        marginal = {pool: occupancy[pool] - prev_occ.get(pool, 0) for pool in occupancy}
    return IterationRow(
        iteration=iteration,
        total=total,
        travel=travel,
        charging=charging,
        penalty=penalty,
        waiting=waiting,
        max_violation=max(violation, 0.0),
        occupancy=occupancy,
        marginal=marginal,
        moved=moved,
    )


def _validated_adoption(
    state: SystemState,
    users_by_id: Dict[int, EvUser],
    prev: Dict[int, Action],
    switchers: List[Tuple[float, int, Action]],
    m: MultiplierState,
    w: CostWeights,
) -> Dict[int, Action]:
    """Adopt improving moves one at a time, largest gain first.

    Each move is re-priced against the profile as already amended this
    sweep and lands only if it still strictly beats staying put and its
    target pool has a spot genuinely free.  Pricing against live counts
    splits a herd of identical movers across near-equivalent pools, where
    adopting all proposals at once would send the whole herd chasing
    itself from pool to pool forever.
    """
    counts = _counts(prev)
    adopted: Dict[int, Action] = {}
    for _, uid, proposal in sorted(switchers, key=lambda s: (-s[0], s[1])):
        user = users_by_id[uid]
        prev_a = prev[uid]
        others = _others(counts, prev_a)
        view = m.view(uid)
        pool = proposal.choice
        if pool is not None:
            free = state.capacity(*pool) - state.occupancy.get(pool, 0)
            if others.get(pool, 0) >= free:
                continue
        stay = penalized_cost(user, prev_a, state, w, view, others)
        move = penalized_cost(user, proposal, state, w, view, others)
        margin = 1e-9 * max(1.0, abs(move))
        if move < stay - margin:
            adopted[uid] = proposal
            if prev_a.choice is not None:
                counts[prev_a.choice] -= 1
                if counts[prev_a.choice] == 0:
                    del counts[prev_a.choice]
            if pool is not None:
                counts[pool] = counts.get(pool, 0) + 1
    return adopted


def consensus_round(
    state: SystemState,
    users: List[EvUser],
    m: MultiplierState,
    w: CostWeights,
    prev: Optional[Dict[int, Action]] = None,
) -> Dict[int, Action]:
    """One Jacobi sweep: every user best-responds to the previous profile.

    With a previous profile, a user's fresh proposal replaces their old
    action only when strictly better, and adoption is validated move by
    move (largest improvement first, ties to the lower id) against the
    profile as amended so far, with pool entry capped at the spots
    genuinely free.  The sweep itself never mutates inputs.
    """
    prev_counts = _counts(prev) if prev else {}
    proposals: Dict[int, Action] = {}
    switchers: List[Tuple[float, int, Action]] = []
    for user in users:
        prev_a = prev.get(user.id) if prev else None
        others = _others(prev_counts, prev_a)
        view = m.view(user.id)
        proposal = best_response(user, state, others, w, view)
        if prev_a is None:
            proposals[user.id] = proposal
            continue
        proposals[user.id] = prev_a
        if proposal == prev_a:
            continue
        cost_prev = penalized_cost(user, prev_a, state, w, view, others)
        cost_new = penalized_cost(user, proposal, state, w, view, others)
        margin = 1e-9 * max(1.0, abs(cost_new))
        if cost_new < cost_prev - margin:
            switchers.append((cost_prev - cost_new, user.id, proposal))
    if prev is not None and switchers:
        users_by_id = {u.id: u for u in users}
        for uid, a in _validated_adoption(
            state, users_by_id, prev, switchers, m, w
        ).items():
            proposals[uid] = a
    return proposals


def _evict_overloads(
    state: SystemState,
    users_by_id: Dict[int, EvUser],
    actions: Dict[int, Action],
    m: MultiplierState,
    w: CostWeights,
) -> List[int]:
    """Clear residual overloads by dropping the priciest claimants."""
    evicted: List[int] = []
    counts = _counts(actions)
    for (lot, k), n_here in sorted(counts.items()):
        free = state.capacity(lot, k) - state.occupancy.get((lot, k), 0)
        overload = n_here - free
        if overload <= 0:
            continue
        claimants = [uid for uid, a in actions.items() if a.choice == (lot, k)]
        scored = []
        for uid in claimants:
            user = users_by_id[uid]
            others = _others(counts, actions[uid])
            c = penalized_cost(user, actions[uid], state, w, m.view(uid), others)
            scored.append((c, uid))
        scored.sort(reverse=True)
        for c, uid in scored[:overload]:
            actions[uid] = Action(uid, None)
            evicted.append(uid)
    return evicted


def run_gne(
    state: SystemState,
    users: List[EvUser],
    w: CostWeights,
    cfg: GneConfig,
) -> Tuple[Dict[int, Action], ConsensusTrace]:
    """Penalty-loop consensus for one period's cohort.

    Runs up to ``cfg.max_iters`` sweeps, stopping early once the profile
    objective settles within ``cfg.rel_tol``; then clears any leftover
    overload by eviction.  The returned actions satisfy pool capacity
    exactly; evicted or infeasible users carry the no-charge marker and
    roll into the next period.
    """
    users = sorted(users, key=lambda u: u.id)
    users_by_id = {u.id: u for u in users}
    trace = ConsensusTrace()
    if not users:
        return {}, trace
    pools = state.pools()
    m = init_multipliers(users, pools, cfg.rho0, cfg.u0, cfg.growth)
    actions: Optional[Dict[int, Action]] = None
    prev_occ: Optional[Dict[Pool, int]] = None
    prev_total: Optional[float] = None

    for z in range(1, cfg.max_iters + 1):
        new_actions = consensus_round(state, users, m, w, prev=actions)
        moved = 0
        if actions is not None:
            moved = sum(1 for uid in new_actions if new_actions[uid] != actions[uid])
        actions = new_actions
        row = _profile_row(z, state, users, actions, w, prev_occ, moved)
        trace.rows.append(row)
        prev_occ = row.occupancy

        counts = _counts(actions)
        slack = {}
        for lot, k in pools:
            free = state.capacity(lot, k) - state.occupancy.get((lot, k), 0)
            slack[(lot, k)] = float(counts.get((lot, k), 0) - free)
        m = update_multipliers(m, slack)

        if prev_total is not None:
            denom = max(abs(prev_total), 1e-12)
            if abs(row.total - prev_total) / denom < cfg.rel_tol:
                trace.converged_at = z
                prev_total = row.total
                break
        prev_total = row.total

    assert actions is not None
    trace.evicted = _evict_overloads(state, users_by_id, actions, m, w)
    trace.multipliers = m
    return actions, trace


# ---------------------------------------------------------------------------
# Equilibrium diagnostics
# ---------------------------------------------------------------------------


@dataclass
class KktUserReport:
    user: int
    stationarity: Tuple[float, float]
    complementarity: float


@dataclass
class KktReport:
    per_user: List[KktUserReport]

    @property
    def max_complementarity(self) -> float:
        return max((r.complementarity for r in self.per_user), default=0.0)

    @property
    def max_stationarity(self) -> float:
        return max((max(abs(r.stationarity[0]), abs(r.stationarity[1])) for r in self.per_user), default=0.0)


def check_kkt_residuals(
    actions: Dict[int, Action],
    m: MultiplierState,
    w: CostWeights,
    state: SystemState,
    users: List[EvUser],
) -> KktReport:
    """First-order residual diagnostics at a converged profile.

    The capacity multipliers are reconstructed from the penalty terms as
    eta = u * exp(rho * slack); the remaining multipliers are fit by
    non-negative least squares restricted to constraints that are actually
    tight, so every complementarity product except eta * slack vanishes by
    construction.  Stationarity residuals are reported, not thresholded.
    """
    counts = _counts(actions)
    pools = state.pools()
    n_pools = len(pools)
    reports = []
    for user in sorted(users, key=lambda u: u.id):
        a = actions[user.id]
        soc = state.soc_of(user.id)
        eta = {}
        comp = 0.0
        for lot, k in pools:
            free = state.capacity(lot, k) - state.occupancy.get((lot, k), 0)
            g = float(counts.get((lot, k), 0) - free)
            u_val = m.u.get((user.id, lot, k), 0.0)
            eta_val = u_val * math.exp(min(m.rho * g, w.exp_cap))
            eta[(lot, k)] = (eta_val, g)
            comp = max(comp, abs(eta_val * g))

        # tightness of the remaining constraints at the profile
        chose = a.choice is not None
        sum_y = 1.0 if chose else 0.0
        active_v1 = abs(sum_y - 1.0) < 1e-9
        active_v3 = []
        if chose:
            j, k = a.choice
            slack_2e = user.soc_threshold - soc - w.rate(k) * a.duration
            active_v3 = [(j, k)] if abs(slack_2e) < 1e-9 else []

        # columns: [v1] + [v3 per active pool] + [v4 per lot]; v2 is never
        # tight (its linking slack is strictly negative at binary choices)
        lots = sorted({lot for lot, _ in pools})
        cols = []
        if active_v1:
            cols.append(("v1", None))
        for pool in active_v3:
            cols.append(("v3", pool))
        for lot in lots:
            cols.append(("v4", lot))
        sum_eta = sum(val for val, _ in eta.values())
        if cols:
            A = np.zeros((2, len(cols)))
            for idx, (kind, key) in enumerate(cols):
                if kind == "v1":
                    A[0, idx] = float(n_pools)
                elif kind == "v3":
                    A[0, idx] = w.rate(key[1])
                elif kind == "v4":
                    A[1, idx] = -w.pi * 2.0
            b = np.array([-sum_eta, 0.0])
            sol, _ = nnls(A, b)
            resid = A @ sol - b
            stationarity = (float(resid[0]), float(resid[1]))
        else:
            stationarity = (float(sum_eta), 0.0)
        reports.append(KktUserReport(user=user.id, stationarity=stationarity, complementarity=comp))
    return KktReport(per_user=reports)
