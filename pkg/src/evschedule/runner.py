"""Whole-horizon experiment orchestration and CSV emission.

One run simulates every period of a scenario: realize arrivals, let the
consensus loop propose a joint assignment, let the look-ahead search make
the final call, apply the transition, and book realized costs.  The
queueing benchmark and the clairvoyant solver run against the exact same
exogenous draws (arrivals and delivered energy are pre-keyed by user and
period), so mode comparisons isolate the scheduling policy.

Emitted files, fixed schemas:
  iterations.csv  iter, total_obj, travel, charging, penalty, max_violation
  occupancy.csv   iter, t, lot, type, occupancy, marginal
  schedule.csv    user, t, lot, type, n, wait_periods, cost, served_flag
  comparison.csv  mode, total_obj, cpu_seconds
  soc.csv         t, lot, mean_soc
plus search_actions.csv (per-period final decisions with their source) and,
in both-mode runs, schedule_priority.csv for the benchmark's schedule.
"""

from __future__ import annotations

import csv
import dataclasses
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .benchmark import run_priority
from .config import ScenarioConfig
from .demand import DemandGenerator, EvUser
from .gne import ConsensusTrace, run_gne
from .mcts import run_mcts
from .network import Network
from .oracle import brute_force
from .rng import stream
from .scoring import (
    ScheduleEntry,
    entry_for_no_charge,
    entry_for_service,
    entry_for_unserved,
    schedule_total,
    split_subtotals,
)
from .sh import RateModel, min_commitment_periods, sample_rate_path
from .state import initial_state, advance, ExogenousInfo
from .user_opt import Action, CostWeights

MODES = ("consensus", "priority", "both", "oracle")


@dataclass
class RunReport:
    scenario: str
    mode: str
    seed: int
    horizon: int
    entries: List[ScheduleEntry]
    users: Dict[int, EvUser]
    subtotals: Dict[str, float]
    iteration_rows: List[Tuple] = field(default_factory=list)
    occupancy_rows: List[Tuple] = field(default_factory=list)
    soc_rows: List[Tuple] = field(default_factory=list)
    comparison_rows: List[Tuple] = field(default_factory=list)
    action_rows: List[Tuple] = field(default_factory=list)
    histogram_rows: List[Tuple] = field(default_factory=list)
    priority_entries: Optional[List[ScheduleEntry]] = None
    audit_failures: List[str] = field(default_factory=list)


def make_rate_fn(seed: int, model: RateModel):
    """Delivered energy keyed by (user, period): identical across modes."""

    def rates(uid: int, t: int, k: int) -> float:
        if model.deterministic:
            return model.nominal(k)
        r = stream(seed, "rates", uid, t)
        return float(sample_rate_path(model, k, 1, r)[0])

    return rates


def draw_arrivals(cfg: ScenarioConfig, seed: int) -> List[List[EvUser]]:
    gen = DemandGenerator(cfg.profile, cfg.net, stream(seed, "demand"))
    return [gen.generate_arrivals(t) for t in range(cfg.horizon)]


# ---------------------------------------------------------------------------
# mode simulations
# ---------------------------------------------------------------------------


@dataclass
class ConsensusArtifacts:
    entries: List[ScheduleEntry]
    users: Dict[int, EvUser]
    traces: Dict[int, ConsensusTrace]
    soc_by_lot: List[Dict[int, float]]
    action_rows: List[Tuple]


def simulate_consensus(
    cfg: ScenarioConfig, seed: int, arrivals: List[List[EvUser]], rates
) -> ConsensusArtifacts:
    net, T, w = cfg.net, cfg.horizon, cfg.weights
    state = initial_state(net, T, arrivals[0], nominal_rate=w.rate)
    entries: List[ScheduleEntry] = []
    users: Dict[int, EvUser] = {}
    traces: Dict[int, ConsensusTrace] = {}
    soc_by_lot: List[Dict[int, float]] = []
    action_rows: List[Tuple] = []

    for t in range(T):
        users.update(state.users())
        cohort = [
            u for u in state.uncommitted() if state.soc_of(u.id) < u.soc_threshold - 1e-9
        ]
        actions: Dict[int, Action] = {}
        sources: Dict[int, str] = {}
        if cohort:
            baseline, trace = run_gne(state, cohort, w, cfg.gne)
            traces[t] = trace
            actions, report = run_mcts(
                state,
                cohort,
                w,
                cfg.mcts,
                cfg.rate_model,
                stream(seed, "mcts", t),
                baseline=baseline,
                profile=cfg.profile,
            )
            sources = report.sources

        earlier: Dict[Tuple[int, int], int] = {}
        for uid in sorted(actions):
            a = actions[uid]
            if a.choice is None:
                continue
            j, k = a.choice
            entries.append(
                entry_for_service(
                    net, users[uid], t, j, k, a.duration,
                    state.occupancy.get((j, k), 0), earlier.get((j, k), 0), w,
                )
            )
            earlier[(j, k)] = earlier.get((j, k), 0) + 1

        for u in cohort:
            a = actions.get(u.id)
            if a is None or a.choice is None:
                action_rows.append((t, u.id, -1, -1, 0, sources.get(u.id, "defer")))
            else:
                action_rows.append(
                    (t, u.id, a.choice[0], a.choice[1], a.duration, sources.get(u.id, "tree"))
                )

        # users already at their threshold leave without charging
        for u in state.uncommitted():
            if u.id in actions:
                continue
            if state.soc_of(u.id) >= u.soc_threshold - 1e-9:
                actions[u.id] = Action(u.id, None)
                entries.append(entry_for_no_charge(u, t, w))

        soc_sums: Dict[int, Tuple[float, int]] = {}
        for uid, com in state.commitments.items():
            s, c = soc_sums.get(com.lot, (0.0, 0))
            soc_sums[com.lot] = (s + state.soc_of(uid), c + 1)
        for uid, a in actions.items():
            if a.choice is not None:
                s, c = soc_sums.get(a.choice[0], (0.0, 0))
                soc_sums[a.choice[0]] = (s + state.soc_of(uid), c + 1)
        soc_by_lot.append({lot: s / c for lot, (s, c) in soc_sums.items()})

        incoming = arrivals[t + 1] if t + 1 < T else []
        state = advance(state, actions, ExogenousInfo(arrivals=incoming, rates=rates))

    users.update(state.users())
    booked = {e.user for e in entries}
    for uid in sorted(users):
        if uid not in booked:
            entries.append(entry_for_unserved(users[uid], T, w))
    return ConsensusArtifacts(entries, users, traces, soc_by_lot, action_rows)


# ---------------------------------------------------------------------------
# trace aggregation (consensus mode)
# ---------------------------------------------------------------------------


def aggregate_iteration_rows(traces: Dict[int, ConsensusTrace]) -> List[Tuple]:
    """System-level view per iteration index: every period contributes its
    row at that index, carrying its final row forward once it converged."""
    if not traces:
        return []
    depth = max(len(tr.rows) for tr in traces.values())
    out = []
    for z in range(1, depth + 1):
        total = travel = charging = penalty = 0.0
        violation = 0.0
        for tr in traces.values():
            row = tr.rows[min(z, len(tr.rows)) - 1]
            total += row.total
            travel += row.travel
            charging += row.charging
            penalty += row.penalty
            violation = max(violation, row.max_violation)
        out.append((z, total, travel, charging, penalty, violation))
    return out


def occupancy_rows_from_traces(traces: Dict[int, ConsensusTrace]) -> List[Tuple]:
    if not traces:
        return []
    depth = max(len(tr.rows) for tr in traces.values())
    rows = []
    for z in range(1, depth + 1):
        for t in sorted(traces):
            tr = traces[t]
            row = tr.rows[min(z, len(tr.rows)) - 1]
            padded = z > len(tr.rows)
            for (lot, k) in sorted(row.occupancy):
                if z == 1:
                    marginal: Optional[int] = None
                elif padded:
                    marginal = 0
                else:
                    marginal = (row.marginal or {}).get((lot, k), 0)
                rows.append((z, t, lot, k, row.occupancy[(lot, k)], marginal))
    return rows


def soc_rows_from_lots(net: Network, soc_by_lot: List[Dict[int, float]]) -> List[Tuple]:
    rows = []
    for t, by_lot in enumerate(soc_by_lot):
        for lot in net.lots:
            rows.append((t, lot, by_lot.get(lot)))
    return rows


# ---------------------------------------------------------------------------
# audits
# ---------------------------------------------------------------------------


def audit_entries(
    net: Network,
    horizon: int,
    entries: Sequence[ScheduleEntry],
    users: Dict[int, EvUser],
    w: CostWeights,
    check_threshold: bool = True,
) -> List[str]:
    """Hard schedule invariants: pool capacity at every period, and (for
    the planning modes) threshold coverage of the committed duration at
    nominal rates.  Returns human-readable violations; empty means pass."""
    failures: List[str] = []
    load: Dict[Tuple[Tuple[int, int], int], int] = {}
    for e in entries:
        if e.lot < 0:
            continue
        u = users[e.user]
        if e.period < u.arrival or e.period >= horizon:
            failures.append(f"user {e.user}: service period {e.period} outside [{u.arrival}, {horizon})")
        if e.duration < 1 or e.period + e.duration > horizon:
            failures.append(f"user {e.user}: duration {e.duration} does not fit the horizon")
            continue
        for s in range(e.period, e.period + e.duration):
            key = ((e.lot, e.ktype), s)
            load[key] = load.get(key, 0) + 1
        if check_threshold:
            need = min_commitment_periods(u.soc_threshold - u.soc, w.rate(e.ktype))
            if e.duration < need:
                failures.append(
                    f"user {e.user}: {e.duration} periods at type {e.ktype} cannot reach the threshold"
                )
    for ((lot, k), s), n in sorted(load.items()):
        cap = net.facility(lot).capacity(k)
        if n > cap:
            failures.append(f"pool ({lot}, {k}) holds {n} users at period {s}, capacity {cap}")
    return failures


# ---------------------------------------------------------------------------
# top-level entry points
# ---------------------------------------------------------------------------


def run_scenario(
    cfg: ScenarioConfig,
    mode: str = "consensus",
    seed: Optional[int] = None,
    oracle_limit: int = 1_000_000,
) -> RunReport:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    seed = cfg.seed if seed is None else int(seed)
    arrivals = draw_arrivals(cfg, seed)
    rates = make_rate_fn(seed, cfg.rate_model)
    w = cfg.weights
    net, T = cfg.net, cfg.horizon

    report = RunReport(
        scenario=cfg.name,
        mode=mode,
        seed=seed,
        horizon=T,
        entries=[],
        users={},
        subtotals={},
    )

    if mode in ("consensus", "both"):
        t0 = time.process_time()
        art = simulate_consensus(cfg, seed, arrivals, rates)
        cpu = time.process_time() - t0
        report.entries = art.entries
        report.users = art.users
        report.iteration_rows = aggregate_iteration_rows(art.traces)
        report.occupancy_rows = occupancy_rows_from_traces(art.traces)
        report.soc_rows = soc_rows_from_lots(net, art.soc_by_lot)
        report.action_rows = art.action_rows
        report.histogram_rows = action_histogram(
            art.action_rows, art.users, T, cfg.rate_model
        )
        report.comparison_rows.append(("consensus", schedule_total(art.entries), cpu))
        report.audit_failures += audit_entries(net, T, art.entries, art.users, w, True)

    if mode in ("priority", "both"):
        t0 = time.process_time()
        result = run_priority(net, T, arrivals, w, rates)
        cpu = time.process_time() - t0
        users = {u.id: u for per in arrivals for u in per}
        report.comparison_rows.append(("priority", schedule_total(result.entries), cpu))
        report.audit_failures += audit_entries(net, T, result.entries, users, w, False)
        if mode == "priority":
            report.entries = result.entries
            report.users = users
            report.soc_rows = soc_rows_from_lots(net, result.soc_by_lot)
        else:
            report.priority_entries = result.entries
            report.users.update(users)

    if mode == "oracle":
        users = [u for per in arrivals for u in per]
        t0 = time.process_time()
        result = brute_force(net, T, users, w, limit=oracle_limit)
        cpu = time.process_time() - t0
        report.entries = list(result.entries)
        report.users = {u.id: u for u in users}
        report.comparison_rows.append(("oracle", result.total, cpu))
        report.audit_failures += audit_entries(net, T, report.entries, report.users, w, True)

    report.subtotals = split_subtotals(net, report.users, report.entries, w)
    return report


def sensitivity_sweep(
    cfg: ScenarioConfig,
    parameter: str,
    values: Sequence,
    mode: str = "consensus",
    seed: Optional[int] = None,
) -> List[Tuple]:
    """Re-run the scenario once per value at a fixed seed.

    Returns (value, travel, charging_plus_penalty, total) rows built from
    realized schedules.
    """
    rows = []
    for value in values:
        rows.append(_sweep_point(cfg, parameter, value, mode, seed))
    return rows


def _sweep_point(cfg, parameter, value, mode, seed):
    adjusted = apply_parameter(cfg, parameter, value)
    report = run_scenario(adjusted, mode=mode, seed=seed)
    sub = report.subtotals
    return (value, sub["travel"], sub["charging"] + sub["penalty"], sub["total"])


def apply_parameter(cfg: ScenarioConfig, parameter: str, value) -> ScenarioConfig:
    if parameter == "alpha_prime":
        return dataclasses.replace(
            cfg, weights=dataclasses.replace(cfg.weights, alpha_prime=float(value))
        )
    if parameter == "demand_level":
        return cfg.with_demand_level(str(value))
    if parameter in ("iota", "lookahead", "iterations", "xi"):
        cast = float if parameter == "iota" else int
        return dataclasses.replace(
            cfg, mcts=dataclasses.replace(cfg.mcts, **{parameter: cast(value)})
        )
    raise ValueError(
        f"unknown sweep parameter {parameter!r}; expected alpha_prime, iota, "
        "lookahead, iterations, xi, or demand_level"
    )


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".10g")
    return str(x)


def _write(path: Path, header: List[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(header)
        for row in rows:
            out.writerow([_fmt(v) for v in row])


def _schedule_rows(entries: Sequence[ScheduleEntry]) -> List[Tuple]:
    ordered = sorted(entries, key=lambda e: (e.user, e.period))
    return [
        (e.user, e.period, e.lot, e.ktype, e.duration, e.wait_periods, e.cost, e.served)
        for e in ordered
    ]


def action_histogram(
    action_rows: Sequence[Tuple],
    users: Dict[int, EvUser],
    horizon: int,
    rate_model: RateModel,
) -> List[Tuple]:
    """Tally granted bookings by charger rate and the window still open.

    The window is the periods the user could actually occupy a spot at
    grant time, the shorter of parking duration and horizon remainder.
    """
    freq: Dict[Tuple[float, int], int] = {}
    for t, uid, lot, k, _n, _src in action_rows:
        if lot < 0:
            continue
        avail = min(users[uid].parking_duration, horizon - t)
        key = (rate_model.mean(k), avail)
        freq[key] = freq.get(key, 0) + 1
    return [(rate, periods, count) for (rate, periods), count in sorted(freq.items())]


def write_report(report: RunReport, outdir) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    _write(
        out / "iterations.csv",
        ["iter", "total_obj", "travel", "charging", "penalty", "max_violation"],
        report.iteration_rows,
    )
    _write(
        out / "occupancy.csv",
        ["iter", "t", "lot", "type", "occupancy", "marginal"],
        report.occupancy_rows,
    )
    _write(
        out / "schedule.csv",
        ["user", "t", "lot", "type", "n", "wait_periods", "cost", "served_flag"],
        _schedule_rows(report.entries),
    )
    _write(
        out / "comparison.csv",
        ["mode", "total_obj", "cpu_seconds"],
        [(m, v, format(c, ".3f")) for m, v, c in report.comparison_rows],
    )
    _write(out / "soc.csv", ["t", "lot", "mean_soc"], report.soc_rows)
    _write(
        out / "search_actions.csv",
        ["t", "user", "lot", "type", "n", "source"],
        report.action_rows,
    )
    _write(
        out / "action_histogram.csv",
        ["rate", "available_periods", "frequency"],
        report.histogram_rows,
    )
    if report.priority_entries is not None:
        _write(
            out / "schedule_priority.csv",
            ["user", "t", "lot", "type", "n", "wait_periods", "cost", "served_flag"],
            _schedule_rows(report.priority_entries),
        )


def write_sweep(rows: Sequence[Tuple], outdir) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    _write(
        out / "sweep.csv",
        ["value", "travel", "charging_penalty", "total_obj"],
        rows,
    )
