"""Discrete-time EV charging scheduling under shared-capacity competition.

The package simulates users arriving over a day who must pick a charging
facility, a charger type, and a commitment length on their way somewhere
else.  A penalized best-response consensus loop coordinates each period's
competing claims, a Monte-Carlo look-ahead search makes the final call
under charging-rate uncertainty, and a first-come-first-served queue and
an exhaustive micro-instance solver provide the reference points.
"""

from .benchmark import PriorityResult, run_priority
from .config import ScenarioConfig, load_config, load_preset, parse_scenario, preset_names
from .demand import DemandGenerator, DemandProfile, EvUser, required_soc
from .gne import (
    ConsensusTrace,
    GneConfig,
    KktReport,
    MultiplierState,
    check_kkt_residuals,
    consensus_round,
    init_multipliers,
    run_gne,
    update_multipliers,
)
from .mcts import MctsConfig, MctsReport, lower_bound_value, run_mcts
from .network import ChargerPool, Facility, Network, load_network, trip_cost, SLOW, FAST
from .oracle import OracleResult, brute_force, user_options
from .rng import stream
from .runner import (
    RunReport,
    run_scenario,
    sensitivity_sweep,
    write_report,
    write_sweep,
)
from .scoring import ScheduleEntry, schedule_total, split_subtotals
from .sh import (
    RateModel,
    ShotResult,
    SocCone,
    commitment_value,
    cone_feasible,
    min_commitment_periods,
    sample_rate_path,
    shoot,
)
from .state import (
    Commitment,
    ExogenousInfo,
    SystemState,
    advance,
    initial_state,
    waiting_time,
)
from .user_opt import Action, CostWeights, best_response, capacity_slack, penalized_cost, user_cost

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ChargerPool",
    "Commitment",
    "ConsensusTrace",
    "CostWeights",
    "DemandGenerator",
    "DemandProfile",
    "EvUser",
    "ExogenousInfo",
    "Facility",
    "FAST",
    "GneConfig",
    "KktReport",
    "MctsConfig",
    "MctsReport",
    "MultiplierState",
    "Network",
    "OracleResult",
    "PriorityResult",
    "RateModel",
    "RunReport",
    "ScenarioConfig",
    "ScheduleEntry",
    "ShotResult",
    "SLOW",
    "SocCone",
    "SystemState",
    "advance",
    "best_response",
    "brute_force",
    "capacity_slack",
    "check_kkt_residuals",
    "commitment_value",
    "cone_feasible",
    "consensus_round",
    "init_multipliers",
    "initial_state",
    "load_config",
    "load_network",
    "load_preset",
    "lower_bound_value",
    "min_commitment_periods",
    "parse_scenario",
    "penalized_cost",
    "preset_names",
    "required_soc",
    "run_gne",
    "run_mcts",
    "run_priority",
    "run_scenario",
    "sample_rate_path",
    "schedule_total",
    "sensitivity_sweep",
    "shoot",
    "split_subtotals",
    "stream",
    "trip_cost",
    "update_multipliers",
    "user_cost",
    "user_options",
    "waiting_time",
    "write_report",
    "write_sweep",
]
