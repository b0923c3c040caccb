"""Arrival process and user attributes.

Arrivals follow a time-of-day Poisson profile.  Each user draws an origin,
a destination, an initial state of charge, and a parking duration; the
charge threshold they must reach before departing is derived from the
onward trip length.  Generation is stream-stable: with a fixed seed the
full arrival sequence is byte-identical across runs and thread counts, and
user ids increase strictly across successive calls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .network import Network


@dataclass(frozen=True)
class EvUser:
    id: int
    origin: int
    destination: int
    arrival: int             # period index
    soc: float               # state of charge on arrival, kWh
    battery_capacity: float  # kWh
    parking_duration: int    # periods the user intends to stay
    soc_threshold: float     # kWh required before onward departure

    def __post_init__(self):
        if self.parking_duration < 1:
            raise ValueError("parking_duration must be >= 1")
        if not 0.0 <= self.soc <= self.battery_capacity:
            raise ValueError("soc must lie in [0, battery_capacity]")
        if self.soc_threshold > self.battery_capacity + 1e-9:
            raise ValueError("soc_threshold cannot exceed battery_capacity")


@dataclass(frozen=True)
class DemandProfile:
    """Scenario-level demand description.

    ``bands`` partitions the horizon into half-open period ranges with one
    Poisson mean each; ``scale`` is the demand-level multiplier applied on
    top (0.5 / 1.0 / 2.0 for the low / medium / high presets).
    """

    bands: Tuple[Tuple[int, int, float], ...]   # (start, end_exclusive, mean)
    onward_miles: Dict[int, float] = field(default_factory=dict)
    scale: float = 1.0
    soc_init_frac: Tuple[float, float] = (0.2, 0.6)
    duration_mean: float = 4.0
    battery_capacity: float = 50.0
    efficiency: float = 2.91    # miles per kWh
    reserve: float = 1.0        # kWh kept over the computed trip need

    def __post_init__(self):
        prev_end = None
        for start, end, mean in self.bands:
            if end <= start:
                raise ValueError(f"band [{start}, {end}) is empty")
            if mean < 0:
                raise ValueError("band mean must be >= 0")
            if prev_end is not None and start != prev_end:
                raise ValueError("bands must be contiguous")
            prev_end = end
        lo, hi = self.soc_init_frac
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError("soc_init_frac must satisfy 0 <= low <= high <= 1")
        if self.duration_mean <= 0 or self.efficiency <= 0:
            raise ValueError("duration_mean and efficiency must be > 0")

    def mean_arrivals(self, t: int) -> float:
        for start, end, mean in self.bands:
            if start <= t < end:
                return mean * self.scale
        return 0.0


def required_soc(profile: DemandProfile, destination: int, battery_capacity: float) -> float:
    """Charge needed to clear the onward trip plus the reserve, capped at the battery."""
    try:
        miles = profile.onward_miles[destination]
    except KeyError:
        raise KeyError(f"no onward distance declared for destination {destination}") from None
    return min(battery_capacity, miles / profile.efficiency + profile.reserve)


class DemandGenerator:
    """Stateful arrival sampler; owns its stream and the global id counter."""

    def __init__(self, profile: DemandProfile, net: Network, rng: np.random.Generator, start_id: int = 0):
        self.profile = profile
        self.net = net
        self.rng = rng
        self._next_id = start_id

    def generate_arrivals(self, t: int) -> List[EvUser]:
        mean = self.profile.mean_arrivals(t)
        count = int(self.rng.poisson(mean)) if mean > 0 else 0
        users = []
        cap = self.profile.battery_capacity
        lo, hi = self.profile.soc_init_frac
        for _ in range(count):
            origin = int(self.net.origins[self.rng.integers(len(self.net.origins))])
            dest = int(self.net.destinations[self.rng.integers(len(self.net.destinations))])
            soc = float(self.rng.uniform(lo * cap, hi * cap))
            duration = max(1, int(np.rint(self.rng.exponential(self.profile.duration_mean))))
            users.append(
                EvUser(
                    id=self._next_id,
                    origin=origin,
                    destination=dest,
                    arrival=t,
                    soc=soc,
                    battery_capacity=cap,
                    parking_duration=duration,
                    soc_threshold=required_soc(self.profile, dest, cap),
                )
            )
            self._next_id += 1
        return users
