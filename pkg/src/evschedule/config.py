"""Scenario configuration: TOML documents to runnable objects.

A scenario file fixes the network, the demand profile, the cost weights,
the charging-rate model, and both solver loops.  Two presets ship with
the package; any path handed to the CLI is parsed the same way.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .demand import DemandProfile
from .gne import GneConfig
from .mcts import MctsConfig
from .network import Network, load_network
from .sh import RateModel
from .user_opt import CostWeights

DEFAULT_LEVEL_SCALES = {"low": 0.5, "medium": 1.0, "high": 2.0}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    horizon: int
    seed: int
    net: Network
    profile: DemandProfile
    weights: CostWeights
    rate_model: RateModel
    gne: GneConfig
    mcts: MctsConfig
    level_scales: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_LEVEL_SCALES))

    def with_demand_level(self, level: str) -> "ScenarioConfig":
        try:
            scale = self.level_scales[level]
        except KeyError:
            raise ValueError(
                f"unknown demand level {level!r}; expected one of {sorted(self.level_scales)}"
            ) from None
        profile = dataclasses.replace(self.profile, scale=scale)
        return dataclasses.replace(self, profile=profile)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return dataclasses.replace(self, seed=int(seed))

    def with_consensus_workers(self, workers: int) -> "ScenarioConfig":
        if workers < 1:
            raise ValueError("workers must be >= 1")
        return dataclasses.replace(self, gne=dataclasses.replace(self.gne, workers=workers))

    def with_deterministic_rates(self, flag: bool = True) -> "ScenarioConfig":
        return dataclasses.replace(
            self, rate_model=dataclasses.replace(self.rate_model, deterministic=flag)
        )


def _pick(doc: dict, section: str) -> dict:
    sub = doc.get(section, {})
    if not isinstance(sub, dict):
        raise ValueError(f"config section [{section}] must be a table")
    return sub


def parse_scenario(doc: dict, fallback_name: str = "scenario") -> ScenarioConfig:
    scen = _pick(doc, "scenario")
    name = str(scen.get("name", fallback_name))
    horizon = int(scen.get("horizon", 0))
    if horizon < 1:
        raise ValueError("[scenario] horizon must be a positive period count")
    seed = int(scen.get("seed", 0))

    net = load_network(_pick(doc, "network"), horizon)

    d = _pick(doc, "demand")
    bands_raw = d.get("bands")
    if not bands_raw:
        raise ValueError("[demand] bands is required")
    bands = tuple((int(a), int(b), float(m)) for a, b, m in bands_raw)
    if bands[0][0] != 0 or bands[-1][1] != horizon:
        raise ValueError("[demand] bands must cover exactly [0, horizon)")
    onward = {int(k): float(v) for k, v in _pick(d, "onward_miles").items()}
    for dest in net.destinations:
        if dest not in onward:
            raise ValueError(f"[demand] onward_miles is missing destination {dest}")
    frac = d.get("soc_init_frac", (0.2, 0.6))
    profile = DemandProfile(
        bands=bands,
        onward_miles=onward,
        scale=float(d.get("scale", 1.0)),
        soc_init_frac=(float(frac[0]), float(frac[1])),
        duration_mean=float(d.get("duration_mean", 4.0)),
        battery_capacity=float(d.get("battery_capacity", 50.0)),
        efficiency=float(d.get("efficiency", 2.91)),
        reserve=float(d.get("reserve", 1.0)),
    )
    level_scales = {
        str(k): float(v) for k, v in _pick(d, "level_scales").items()
    } or dict(DEFAULT_LEVEL_SCALES)

    c = _pick(doc, "costs")
    weights = CostWeights(
        theta=float(c.get("theta", 0.1)),
        theta_wait=float(c.get("theta_wait", 0.1)),
        alpha=float(c.get("alpha", 1.0)),
        alpha_prime=float(c.get("alpha_prime", 0.1)),
        pi=float(c.get("pi", 6.2)),
        big_m=float(c.get("big_m", 1000.0)),
        w_max=float(c.get("w_max", 1e3)),
        exp_cap=float(c.get("exp_cap", 50.0)),
    )

    r = _pick(doc, "rates")
    lambdas = r.get("lambdas", (6.2, 12.5))
    rate_model = RateModel(
        pi=float(r.get("pi", weights.pi)),
        lambdas=(float(lambdas[0]), float(lambdas[1])),
        sd_frac=float(r.get("sd_frac", 0.10)),
        quantum=float(r.get("quantum", 0.1)),
        deterministic=bool(r.get("deterministic", False)),
    )
    if abs(rate_model.pi - weights.pi) > 1e-9:
        raise ValueError("[rates] pi must match [costs] pi; durations are planned at nominal")

    g = _pick(doc, "consensus")
    gne = GneConfig(
        max_iters=int(g.get("max_iters", 10)),
        rel_tol=float(g.get("rel_tol", 0.005)),
        rho0=float(g.get("rho0", 1.0)),
        growth=float(g.get("growth", 2.0)),
        u0=float(g.get("u0", 1.0)),
        workers=int(g.get("workers", 1)),
    )

    s = _pick(doc, "search")
    mcts = MctsConfig(
        iterations=int(s.get("iterations", 100)),
        lookahead=int(s.get("lookahead", 4)),
        kappa=int(s.get("kappa", 8)),
        iota=float(s.get("iota", math.sqrt(2.0))),
        xi=int(s.get("xi", 16)),
        workers=int(s.get("workers", 1)),
    )

    return ScenarioConfig(
        name=name,
        horizon=horizon,
        seed=seed,
        net=net,
        profile=profile,
        weights=weights,
        rate_model=rate_model,
        gne=gne,
        mcts=mcts,
        level_scales=level_scales,
    )


def load_config(path) -> ScenarioConfig:
    p = Path(path)
    with open(p, "rb") as fh:
        doc = tomllib.load(fh)
    return parse_scenario(doc, fallback_name=p.stem)


def preset_names() -> List[str]:
    root = resources.files("evschedule").joinpath("presets")
    return sorted(entry.name[:-4] for entry in root.iterdir() if entry.name.endswith(".cfg"))


def load_preset(name: str) -> ScenarioConfig:
    ref = resources.files("evschedule").joinpath("presets").joinpath(f"{name}.cfg")
    try:
        text = ref.read_text()
    except FileNotFoundError:
        raise ValueError(f"unknown preset {name!r}; available: {preset_names()}") from None
    return parse_scenario(tomllib.loads(text), fallback_name=name)
