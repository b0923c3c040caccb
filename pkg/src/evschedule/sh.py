"""Charging-rate model and the shooting rollout.

A commitment of n periods on one charger is evaluated by firing a batch of
sampled rate paths through the SOC recursion, discarding paths that miss
the charge threshold, and averaging the survivors.  The reachability cone
gives the closed-form feasibility test the rollout relies on: with
per-period energy bounded between the slow and fast nominal rates, a
threshold is hittable at departure iff the required average rate lies
between those bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class RateModel:
    """Per-period delivered-energy model for both charger types.

    ``pi`` is the slow nominal rate; the model rate for type k is
    ``pi * (k + 1)``.  Stochastic sampling uses the marginal means
    ``lambdas`` with a proportional standard deviation, truncated at zero
    and quantized to ``quantum`` kWh.  ``deterministic`` switches every
    consumer to the nominal rates (used for oracle-comparable runs).
    """

    pi: float = 6.2
    lambdas: tuple = (6.2, 12.5)
    sd_frac: float = 0.10
    quantum: float = 0.1
    deterministic: bool = False

    def nominal(self, k: int) -> float:
        return self.pi * (k + 1)

    def mean(self, k: int) -> float:
        return self.lambdas[k]


def sample_rate_path(model: RateModel, k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """One length-n path of delivered kWh per period on a type-k charger."""
    if n < 0:
        raise ValueError("path length must be >= 0")
    if model.deterministic:
        return np.full(n, model.nominal(k))
    lam = model.mean(k)
    draws = rng.normal(lam, model.sd_frac * lam, size=n)
    np.maximum(draws, 0.0, out=draws)
    if model.quantum > 0:
        draws = np.round(draws / model.quantum) * model.quantum
    return draws


@dataclass(frozen=True)
class SocCone:
    """Reachability cone of SOC trajectories over a parking window."""

    base: float      # SOC at the window start, kWh
    lower: float     # slow per-period rate
    upper: float     # fast per-period rate
    horizon: int     # periods in the window

    def bounds(self, tau: int) -> tuple:
        if not 0 <= tau <= self.horizon:
            raise ValueError(f"tau {tau} outside [0, {self.horizon}]")
        return (self.base + self.lower * tau, self.base + self.upper * tau)

    def contains(self, tau: int, soc: float) -> bool:
        lo, hi = self.bounds(tau)
        return lo - 1e-9 <= soc <= hi + 1e-9


def cone_feasible(soc: float, duration: int, threshold: float, pi: float) -> bool:
    """True when the threshold is reachable exactly at the parking boundary.

    Holds trivially when no charge is needed; otherwise the required average
    per-period rate must lie between the slow and fast nominal rates.
    """
    if duration < 1:
        raise ValueError("duration must be >= 1")
    if threshold <= soc:
        return True
    need = (threshold - soc) / duration
    return pi - 1e-9 <= need <= 2 * pi + 1e-9


@dataclass(frozen=True)
class ShotResult:
    """Survivor-averaged SOC trajectory and the surviving fraction.

    ``trajectory`` is None when every sampled path missed the threshold
    (the infeasible marker); otherwise it has one entry per commitment
    period.
    """

    trajectory: Optional[np.ndarray]
    survival: float


def shoot(
    model: RateModel,
    soc: float,
    n: int,
    threshold: float,
    k: int,
    xi: int,
    rng: np.random.Generator,
    battery_capacity: float = float("inf"),
) -> ShotResult:
    """Fire xi sampled rate paths through an n-period commitment.

    Paths whose terminal SOC misses ``threshold`` are discarded; survivors
    are averaged per period.  SOC is capped at the battery along the way.
    """
    if n < 1:
        raise ValueError("commitment length must be >= 1")
    if xi < 1:
        raise ValueError("xi must be >= 1")
    if model.deterministic:
        rates = np.full((1, n), model.nominal(k))
    else:
        lam = model.mean(k)
        rates = rng.normal(lam, model.sd_frac * lam, size=(xi, n))
        np.maximum(rates, 0.0, out=rates)
        if model.quantum > 0:
            rates = np.round(rates / model.quantum) * model.quantum
    paths = np.minimum(soc + np.cumsum(rates, axis=1), battery_capacity)
    alive = paths[:, -1] >= threshold - 1e-9
    survival = float(np.mean(alive))
    if not alive.any():
        return ShotResult(trajectory=None, survival=0.0)
    return ShotResult(trajectory=paths[alive].mean(axis=0), survival=survival)


def commitment_value(
    model: RateModel,
    soc: float,
    n: int,
    threshold: float,
    k: int,
    price: float,
    alpha: float,
    alpha_prime: float,
    parking_duration: int,
    xi: int,
    rng: np.random.Generator,
    battery_capacity: float = float("inf"),
) -> tuple:
    """Expected commitment cost under rate uncertainty, plus survival.

    Surviving paths pay the charging expense and the early-release penalty
    at the committed duration; discarded paths are priced as a full-stay
    fallback (the release penalty over the whole parking duration).
    """
    result = shoot(model, soc, n, threshold, k, xi, rng, battery_capacity)
    stage = alpha * price * n + alpha_prime * max(0, parking_duration - n)
    fallback = alpha_prime * parking_duration
    value = result.survival * stage + (1.0 - result.survival) * fallback
    return value, result.survival


def min_commitment_periods(gap: float, rate: float) -> int:
    """Fewest whole periods of charging at ``rate`` that close ``gap`` kWh."""
    if gap <= 0:
        return 0
    return int(math.ceil(gap / rate - 1e-9))
