"""Look-ahead decision search over per-user choice chains.

One period's joint assignment is searched as a chain: the users needing a
decision act one at a time in id order, so every tree node asks a single
question ("what does this user do, given what earlier users just took?").
Chain edges price the immediate travel and waiting plus a rate-uncertain
commitment value from the shooting heuristic.  Completing a chain hands
the joint action to a chance layer that samples delivered energy and next
period's arrivals, and sampled outcomes that repeat exactly are folded
into the same child so their statistics accumulate.

Decision chains cover only the users being decided for.  Arrivals
imagined at deeper periods book spots greedily, like weather: they take
capacity and shape waiting times, but their own costs stay off the
ledger, so returns measure exactly what today's cohort will pay.

Trees are built by logical root-parallel workers, each with a private
sample stream, and merged by visit count when the joint action is read
out.  A read-out only overrides the consensus baseline when the winning
edge carries enough visits to be trusted.  The search never proposes an
over-booked assignment: capacity is filtered when children are generated
and re-checked at extraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .demand import DemandGenerator, DemandProfile, EvUser
from .network import trip_cost
from .scoring import unserved_surcharge
from .sh import RateModel, commitment_value, min_commitment_periods, sample_rate_path
from .state import ExogenousInfo, SystemState, advance, waiting_time
from .user_opt import Action, CostWeights

# action keys: ("defer",) or ("charge", lot, charger type, duration)
DEFER: Tuple = ("defer",)

# synthetic ids for arrivals imagined inside the tree; real ids stay far below
_SYNTHETIC_ID_BASE = 1_000_000_000

# minimum merged visits before a most-visited edge outranks the baseline;
# dense trees (small cohorts) clear this easily, starved deep chains do not
_TRUST_VISITS = 40


@dataclass(frozen=True)
class MctsConfig:
    iterations: int = 100          # tree-building iterations, split over workers
    lookahead: int = 4             # periods the tree looks forward
    kappa: int = 8                 # children kept per decision node
    iota: float = math.sqrt(2.0)   # exploration weight, scaled by mean |stage cost|
    xi: int = 16                   # sampled rate paths per commitment value
    workers: int = 1               # logical root-parallel searchers

    def __post_init__(self):
        if self.iterations < 1 or self.lookahead < 1:
            raise ValueError("iterations and lookahead must be >= 1")
        if self.kappa < 1 or self.xi < 1 or self.workers < 1:
            raise ValueError("kappa, xi, and workers must be >= 1")


@dataclass
class MctsReport:
    root_value: float              # visit-weighted mean return over workers
    visits: int                    # total root visits over workers
    sources: Dict[int, str] = field(default_factory=dict)  # uid -> tree|baseline|greedy


class _DecisionNode:
    __slots__ = (
        "state", "depth", "cohort", "idx", "assigned",
        "visits", "value", "edges", "untried", "order",
    )

    def __init__(self, state, depth, cohort, idx, assigned, untried):
        self.state = state
        self.depth = depth
        self.cohort = cohort
        self.idx = idx
        self.assigned = assigned      # uid -> Action taken earlier in this chain
        self.visits = 0
        self.value = 0.0
        self.edges: List[_Edge] = []
        self.untried: List[Tuple] = untried
        # admissible-list position of each key, the deterministic tie-breaker
        self.order: Dict[Tuple, int] = {k: i for i, k in enumerate(untried)}


class _ChanceNode:
    __slots__ = ("state", "depth", "actions", "visits", "value", "outcomes")

    def __init__(self, state, depth, actions):
        self.state = state
        self.depth = depth
        self.actions = actions        # the completed joint action for this period
        self.visits = 0
        self.value = 0.0
        self.outcomes: Dict[Tuple, _DecisionNode] = {}


class _Edge:
    __slots__ = ("key", "cost", "child", "rank")

    def __init__(self, key, cost, child, rank):
        self.key = key
        self.cost = cost
        self.child = child
        self.rank = rank


def _needy(state: SystemState) -> List[EvUser]:
    """Real users still waiting on a charging decision."""
    return [
        u
        for u in state.uncommitted()
        if u.id < _SYNTHETIC_ID_BASE and state.soc_of(u.id) < u.soc_threshold - 1e-9
    ]


def _phantom_needy(state: SystemState) -> List[EvUser]:
    """Imagined arrivals that would contend for spots this period."""
    return [
        u
        for u in state.uncommitted()
        if u.id >= _SYNTHETIC_ID_BASE and state.soc_of(u.id) < u.soc_threshold - 1e-9
    ]


def _with_departures(state: SystemState, actions: Dict[int, Action]) -> Dict[int, Action]:
    """Add the implicit no-charge departure for every satisfied bystander."""
    out = dict(actions)
    for u in state.uncommitted():
        if u.id in out:
            continue
        if state.soc_of(u.id) >= u.soc_threshold - 1e-9:
            out[u.id] = Action(u.id, None)
    return out


def _claim_counts(actions: Dict[int, Action]) -> Dict[Tuple[int, int], int]:
    counts: Dict[Tuple[int, int], int] = {}
    for a in actions.values():
        if a.choice is not None:
            counts[a.choice] = counts.get(a.choice, 0) + 1
    return counts


def _admissible(
    state: SystemState,
    user: EvUser,
    counts: Dict[Tuple[int, int], int],
    w: CostWeights,
) -> List[Tuple]:
    """Action keys open to ``user`` after ``counts`` same-period claims.

    Deferring is listed only while it keeps some booking reachable, or
    when there is nothing to book anyway.  A deferral that forfeits
    service available right now is strictly dominated: no commitment
    costs anywhere near the never-served surcharge.
    """
    keys: List[Tuple] = []
    soc = state.soc_of(user.id)
    for j, k in state.pools():
        if state.free_spots(j, k) - counts.get((j, k), 0) < 1:
            continue
        n_lo = max(1, min_commitment_periods(user.soc_threshold - soc, w.rate(k)))
        n_hi = min(user.parking_duration, state.horizon - state.t)
        if n_lo > n_hi:
            continue
        for n in sorted({n_lo, n_hi}):
            keys.append(("charge", j, k, n))
    if not keys or _fits_later(state, user, w):
        keys.insert(0, DEFER)
    return keys


def _fits_later(state: SystemState, user: EvUser, w: CostWeights) -> bool:
    """Whether any commitment could still start at the next period."""
    left = state.horizon - state.t - 1
    if left < 1:
        return False
    soc = state.soc_of(user.id)
    for _, k in state.pools():
        n_lo = max(1, min_commitment_periods(user.soc_threshold - soc, w.rate(k)))
        if n_lo <= min(user.parking_duration, left):
            return True
    return False


def _key_to_action(uid: int, key: Tuple) -> Action:
    if key == DEFER:
        return Action(uid, None)
    _, j, k, n = key
    return Action(uid, (j, k), n)


class _Tree:
    """One worker's search tree plus its private sample stream."""

    def __init__(
        self,
        state: SystemState,
        cohort: Sequence[EvUser],
        w: CostWeights,
        cfg: MctsConfig,
        rate_model: RateModel,
        rng: np.random.Generator,
        baseline: Dict[int, Action],
        profile: Optional[DemandProfile],
    ):
        self.w = w
        self.cfg = cfg
        self.rate_model = rate_model
        self.rng = rng
        self.baseline = baseline
        self.t0 = state.t
        self.T = state.horizon
        self.depth_cap = min(cfg.lookahead, self.T - self.t0)
        self.lookahead_demand = (
            DemandGenerator(profile, state.net, rng, start_id=_SYNTHETIC_ID_BASE)
            if profile is not None
            else None
        )
        # running mean |edge cost|, the unit scale for the exploration bonus
        self.abs_sum = 0.0
        self.count = 0
        self.root = _DecisionNode(
            state, 0, tuple(cohort), 0, {}, _admissible(state, cohort[0], {}, w)
        )

    # -- sampling helpers ---------------------------------------------------

    def _sample_arrivals(self, t: int) -> List[EvUser]:
        if self.lookahead_demand is None:
            return []
        fresh = self.lookahead_demand.generate_arrivals(t)
        return [u for u in fresh if u.soc < u.soc_threshold - 1e-9]

    def _draw_transition(self, state: SystemState, actions: Dict[int, Action], want_arrivals: bool):
        """Sample delivered energy per charging user (id order) and arrivals."""
        draws: Dict[int, float] = {}
        for uid in sorted(state.commitments):
            k = state.commitments[uid].k
            draws[uid] = float(sample_rate_path(self.rate_model, k, 1, self.rng)[0])
        for uid in sorted(actions):
            a = actions[uid]
            if a.choice is None or uid in draws:
                continue
            draws[uid] = float(sample_rate_path(self.rate_model, a.choice[1], 1, self.rng)[0])
        arrivals = self._sample_arrivals(state.t + 1) if want_arrivals else []
        return draws, arrivals

    @staticmethod
    def _exo(draws: Dict[int, float], arrivals: List[EvUser]) -> ExogenousInfo:
        return ExogenousInfo(arrivals=arrivals, rates=lambda uid, t, k: draws[uid])

    # -- node construction --------------------------------------------------

    def _chain_child(self, node: _DecisionNode, key: Tuple):
        """Create the child reached by ``key`` and price the edge."""
        user = node.cohort[node.idx]
        counts = _claim_counts(node.assigned)
        state = node.state
        if key == DEFER:
            cost = self.w.theta_wait
            assigned = node.assigned
        else:
            _, j, k, n = key
            fac = state.net.facility(j)
            wait = waiting_time(fac, k, state.occupancy.get((j, k), 0), counts.get((j, k), 0), self.w.w_max)
            value, _ = commitment_value(
                self.rate_model,
                state.soc_of(user.id),
                n,
                user.soc_threshold,
                k,
                fac.price(state.t, k),
                self.w.alpha,
                self.w.alpha_prime,
                user.parking_duration,
                self.cfg.xi,
                self.rng,
                battery_capacity=user.battery_capacity,
            )
            cost = (
                self.w.theta * trip_cost(state.net, user.origin, j, user.destination)
                + self.w.theta_wait * wait
                + value
            )
            assigned = dict(node.assigned)
            assigned[user.id] = Action(user.id, (j, k), n)
        if node.idx + 1 < len(node.cohort):
            nxt = node.cohort[node.idx + 1]
            child = _DecisionNode(
                state,
                node.depth,
                node.cohort,
                node.idx + 1,
                assigned,
                _admissible(state, nxt, _claim_counts(assigned), self.w),
            )
        else:
            child = _ChanceNode(state, node.depth, self._complete_joint(state, assigned))
        return cost, child

    def _complete_joint(self, state: SystemState, assigned: Dict[int, Action]) -> Dict[int, Action]:
        """Finish a period's joint action: phantom bookings, then departures."""
        joint, _ = self._greedy_complete(state, _phantom_needy(state), 0, assigned, False)
        return _with_departures(state, joint)

    def _outcome_child(self, node: _ChanceNode):
        """Sample one transition; reuse the child when the draw repeats exactly."""
        draws, arrivals = self._draw_transition(node.state, node.actions, want_arrivals=True)
        key = (
            tuple(sorted(draws.items())),
            tuple(
                (u.origin, u.destination, u.soc, u.parking_duration, u.soc_threshold)
                for u in arrivals
            ),
        )
        hit = node.outcomes.get(key)
        if hit is not None:
            return hit, False
        nxt_state = advance(node.state, node.actions, self._exo(draws, arrivals))
        cohort = _needy(nxt_state)
        if cohort:
            child = _DecisionNode(
                nxt_state,
                node.depth + 1,
                tuple(cohort),
                0,
                {},
                _admissible(nxt_state, cohort[0], {}, self.w),
            )
        else:
            # nobody real to decide for: phantoms book and the period passes
            child = _ChanceNode(nxt_state, node.depth + 1, self._complete_joint(nxt_state, {}))
        node.outcomes[key] = child
        return child, True

    # -- rollout ------------------------------------------------------------

    def _greedy_key(
        self,
        state: SystemState,
        user: EvUser,
        counts: Dict[Tuple[int, int], int],
        prefer: Optional[Action],
    ) -> Tuple[Tuple, float]:
        """Cheapest admissible commitment under nominal rates.

        ``prefer`` wins when its spot is open.  A charge is priced as
        travel + waiting + charging + early release.  Deferral competes
        not at its one-period charge, which would defer everyone forever,
        but at its consequence: the charge plus the best booking the next
        period could offer.
        """
        w = self.w
        if prefer is not None and prefer.choice is not None:
            j, k = prefer.choice
            if state.free_spots(j, k) - counts.get((j, k), 0) >= 1:
                fac = state.net.facility(j)
                wait = waiting_time(fac, k, state.occupancy.get((j, k), 0), counts.get((j, k), 0), w.w_max)
                n = prefer.duration
                cost = (
                    w.theta * trip_cost(state.net, user.origin, j, user.destination)
                    + w.theta_wait * wait
                    + w.alpha * fac.price(state.t, k) * n
                    + w.alpha_prime * max(0, user.parking_duration - n)
                )
                return ("charge", j, k, n), cost
        best_key: Tuple = DEFER
        best_cost = math.inf
        for key in _admissible(state, user, counts, w):
            if key == DEFER:
                continue
            _, j, k, n = key
            fac = state.net.facility(j)
            wait = waiting_time(fac, k, state.occupancy.get((j, k), 0), counts.get((j, k), 0), w.w_max)
            cost = (
                w.theta * trip_cost(state.net, user.origin, j, user.destination)
                + w.theta_wait * wait
                + w.alpha * fac.price(state.t, k) * n
                + w.alpha_prime * max(0, user.parking_duration - n)
            )
            if cost < best_cost - 1e-12:
                best_key, best_cost = key, cost
        if best_key != DEFER and self._defer_estimate(state, user) < best_cost - 1e-12:
            best_key = DEFER
        if best_key == DEFER:
            best_cost = w.theta_wait
        return best_key, best_cost

    def _defer_estimate(self, state: SystemState, user: EvUser) -> float:
        """Consequence price of waiting a period instead of booking now.

        One deferral charge plus the cheapest booking the next period
        could offer with pools at their emptiest.  Optimism is deliberate:
        it only tempts a user away from a booking when the crowd around it
        might clear.  When nothing fits the remaining horizon the user is
        priced as never served, so stranding never passes for thrift.
        """
        w = self.w
        t = state.t + 1
        soc = state.soc_of(user.id)
        best = math.inf
        if t < state.horizon:
            for j, k in state.pools():
                n_lo = max(1, min_commitment_periods(user.soc_threshold - soc, w.rate(k)))
                n_hi = min(user.parking_duration, state.horizon - t)
                if n_lo > n_hi:
                    continue
                fac = state.net.facility(j)
                wait = waiting_time(fac, k, 0, 0, w.w_max)
                trip = w.theta * trip_cost(state.net, user.origin, j, user.destination)
                for n in {n_lo, n_hi}:
                    cost = (
                        trip
                        + w.theta_wait * wait
                        + w.alpha * fac.price(t, k) * n
                        + w.alpha_prime * max(0, user.parking_duration - n)
                    )
                    if cost < best:
                        best = cost
        if best is math.inf:
            return w.theta_wait * (state.horizon - state.t) + unserved_surcharge(w)
        return w.theta_wait + best

    def _greedy_complete(
        self,
        state: SystemState,
        cohort: Sequence[EvUser],
        idx: int,
        assigned: Dict[int, Action],
        use_baseline: bool,
    ) -> Tuple[Dict[int, Action], float]:
        """Book the rest of ``cohort`` greedily; phantom costs stay off the bill."""
        actions = dict(assigned)
        counts = _claim_counts(assigned)
        cost = 0.0
        for u in cohort[idx:]:
            prefer = self.baseline.get(u.id) if use_baseline else None
            key, c = self._greedy_key(state, u, counts, prefer)
            if u.id < _SYNTHETIC_ID_BASE:
                cost += c
            if key != DEFER:
                actions[u.id] = _key_to_action(u.id, key)
                counts[key[1], key[2]] = counts.get((key[1], key[2]), 0) + 1
        return actions, cost

    def _tail_value(self, state: SystemState, user: EvUser) -> float:
        """Cost still owed by a user leaving the look-ahead window unserved.

        Priced as the cheapest nominal-rate booking available from the
        window-end state; a momentarily full pool is costed as if its next
        spot frees rather than as saturated.  When no commitment fits the
        remaining horizon the user is priced as never served.  Without this
        term, deferring past the window edge would look free.
        """
        w = self.w
        soc = state.soc_of(user.id)
        best = math.inf
        for j, k in state.pools():
            n_lo = max(1, min_commitment_periods(user.soc_threshold - soc, w.rate(k)))
            n_hi = min(user.parking_duration, state.horizon - state.t)
            if n_lo > n_hi:
                continue
            fac = state.net.facility(j)
            eff = min(state.occupancy.get((j, k), 0), fac.capacity(k) - 1)
            wait = waiting_time(fac, k, eff, 0, w.w_max)
            trip = w.theta * trip_cost(state.net, user.origin, j, user.destination)
            for n in {n_lo, n_hi}:
                cost = (
                    trip
                    + w.theta_wait * wait
                    + w.alpha * fac.price(state.t, k) * n
                    + w.alpha_prime * max(0, user.parking_duration - n)
                )
                if cost < best:
                    best = cost
        if best is math.inf:
            # nothing fits before the horizon: the never-served convention
            return w.theta_wait * (state.horizon - state.t) + unserved_surcharge(w)
        return best

    def _rollout(self, node) -> float:
        """Estimate the cohort's cost-to-go below ``node`` with one greedy simulation."""
        if isinstance(node, _DecisionNode):
            actions, G = self._greedy_complete(
                node.state, node.cohort, node.idx, node.assigned, node.depth == 0
            )
            actions = self._complete_joint(node.state, actions)
        else:
            actions, G = node.actions, 0.0
        cur = node.state
        d = node.depth
        while True:
            draws, arrivals = self._draw_transition(cur, actions, want_arrivals=d + 1 < self.depth_cap)
            cur = advance(cur, actions, self._exo(draws, arrivals))
            d += 1
            if d >= self.depth_cap:
                break
            acts, c = self._greedy_complete(cur, _needy(cur), 0, {}, False)
            G += c
            actions = self._complete_joint(cur, acts)
        for u in _needy(cur):
            G += self._tail_value(cur, u)
        return G

    # -- search -------------------------------------------------------------

    def _uct_pick(self, node: _DecisionNode) -> _Edge:
        scale = self.abs_sum / self.count if self.count else 1.0
        iota_eff = self.cfg.iota * max(scale, 1e-6)
        log_n = math.log(node.visits)
        best = node.edges[0]
        best_score = -math.inf
        for e in node.edges:
            score = -(e.cost + e.child.value) + iota_eff * math.sqrt(log_n / e.child.visits)
            # exact ties break toward the earlier admissible action
            if score > best_score or (score == best_score and e.rank < best.rank):
                best, best_score = e, score
        return best

    def run_iteration(self) -> None:
        node = self.root
        path = []  # (node, cost of the edge taken out of it)
        while True:
            if isinstance(node, _DecisionNode):
                if node.untried and len(node.edges) < self.cfg.kappa:
                    pick = int(self.rng.integers(len(node.untried)))
                    key = node.untried.pop(pick)
                    cost, child = self._chain_child(node, key)
                    node.edges.append(_Edge(key, cost, child, node.order[key]))
                    path.append((node, cost))
                    self.abs_sum += abs(cost)
                    self.count += 1
                    leaf, G = child, self._rollout(child)
                    break
                edge = self._uct_pick(node)
                path.append((node, edge.cost))
                self.abs_sum += abs(edge.cost)
                self.count += 1
                node = edge.child
            else:
                if node.depth >= self.depth_cap - 1:
                    # last in-window period: evaluate by simulation alone
                    leaf, G = node, self._rollout(node)
                    break
                child, is_new = self._outcome_child(node)
                path.append((node, 0.0))
                if is_new:
                    leaf, G = child, self._rollout(child)
                    break
                node = child
        leaf.visits += 1
        leaf.value += (G - leaf.value) / leaf.visits
        for parent, edge_cost in reversed(path):
            G += edge_cost
            parent.visits += 1
            parent.value += (G - parent.value) / parent.visits


def run_mcts(
    state: SystemState,
    cohort: Sequence[EvUser],
    w: CostWeights,
    cfg: MctsConfig,
    rate_model: RateModel,
    rng: np.random.Generator,
    baseline: Optional[Dict[int, Action]] = None,
    profile: Optional[DemandProfile] = None,
) -> Tuple[Dict[int, Action], MctsReport]:
    """Search one period's joint assignment for ``cohort``.

    ``baseline`` (typically the consensus round's outcome) guides the first
    period of rollouts and backstops extraction; ``profile`` lets the tree
    imagine future arrivals.  Workers are logical: trees run sequentially
    on private streams spawned from ``rng``, so results depend only on the
    seed and the worker count, never on scheduling.
    """
    cohort = sorted(cohort, key=lambda u: u.id)
    if not cohort:
        return {}, MctsReport(root_value=0.0, visits=0)
    if state.t >= state.horizon:
        raise ValueError("cannot search past the horizon")
    baseline = baseline or {}
    streams = rng.spawn(cfg.workers)
    per_worker = [cfg.iterations // cfg.workers] * cfg.workers
    for i in range(cfg.iterations % cfg.workers):
        per_worker[i] += 1
    trees = []
    for stream_rng, budget in zip(streams, per_worker):
        tree = _Tree(state, cohort, w, cfg, rate_model, stream_rng, baseline, profile)
        for _ in range(budget):
            tree.run_iteration()
        trees.append(tree)
    return _extract(trees, cohort, state, w, baseline)


def _extract(
    trees: List[_Tree],
    cohort: Sequence[EvUser],
    state: SystemState,
    w: CostWeights,
    baseline: Dict[int, Action],
) -> Tuple[Dict[int, Action], MctsReport]:
    """Walk the most-visited chain across workers, re-checking capacity."""
    total_visits = sum(t.root.visits for t in trees)
    root_value = (
        sum(t.root.value * t.root.visits for t in trees) / total_visits
        if total_visits
        else 0.0
    )
    report = MctsReport(root_value=root_value, visits=total_visits)
    actions: Dict[int, Action] = {}
    counts: Dict[Tuple[int, int], int] = {}
    nodes: List[Optional[_DecisionNode]] = [t.root for t in trees]
    greedy = trees[0]  # any tree works for fallback pricing; streams unused there
    for u in cohort:
        tally: Dict[Tuple, int] = {}
        for nd in nodes:
            if nd is None:
                continue
            for e in nd.edges:
                tally[e.key] = tally.get(e.key, 0) + e.child.visits
        key = None
        source = "tree"
        if tally:
            pick, votes = min(tally.items(), key=lambda kv: (-kv[1], kv[0]))
            # a thin vote is noise: defer to the consensus baseline instead
            if votes >= _TRUST_VISITS:
                key = pick
            if key is not None and key != DEFER and state.free_spots(key[1], key[2]) - counts.get((key[1], key[2]), 0) < 1:
                key = None  # a merged pick may overbook; fall back
        if key is None:
            prefer = baseline.get(u.id)
            key, _ = greedy._greedy_key(state, u, counts, prefer)
            source = "baseline" if prefer is not None and key[:1] != DEFER[:1] and prefer.choice == (key[1], key[2]) else "greedy"
        if key != DEFER:
            actions[u.id] = _key_to_action(u.id, key)
            counts[key[1], key[2]] = counts.get((key[1], key[2]), 0) + 1
        report.sources[u.id] = source
        nxt: List[Optional[_DecisionNode]] = []
        for nd in nodes:
            hop = None
            if nd is not None:
                for e in nd.edges:
                    if e.key == key:
                        hop = e.child if isinstance(e.child, _DecisionNode) else None
                        break
            nxt.append(hop)
        nodes = nxt
    return actions, report


def lower_bound_value(state: SystemState, users: Sequence[EvUser], w: CostWeights) -> float:
    """Optimistic floor under any schedule's realized cost for ``users``.

    Every user is priced as if served immediately at empty pools, at the
    cheapest price the horizon will ever offer, with the kindest feasible
    duration, and with no deferral charges.  Each term separately bounds
    its realized counterpart from below, so the sum bounds the total.
    """
    T = state.horizon
    t = state.t
    total = 0.0
    for u in users:
        soc = state.soc_of(u.id) if u.id in state.socs else u.soc
        if soc >= u.soc_threshold - 1e-9:
            continue
        best = w.theta_wait * (T - t) + unserved_surcharge(w)
        for j, k in state.pools():
            fac = state.net.facility(j)
            n_lo = max(1, min_commitment_periods(u.soc_threshold - soc, w.rate(k)))
            n_hi = min(u.parking_duration, T - t)
            if n_lo > n_hi:
                continue
            p_min = float(fac.prices[t:, k].min())
            wait0 = waiting_time(fac, k, 0, 0, w.w_max)
            candidates = {n_lo, n_hi}
            if n_lo <= u.parking_duration <= n_hi:
                candidates.add(u.parking_duration)
            for n in candidates:
                cost = (
                    w.theta * trip_cost(state.net, u.origin, j, u.destination)
                    + w.theta_wait * wait0
                    + w.alpha * p_min * n
                    + w.alpha_prime * max(0, u.parking_duration - n)
                )
                if cost < best:
                    best = cost
        total += max(best, 0.0)
    return total
