"""Road network, charging facilities, and trip-cost tables.

The graph is deliberately thin: all the scheduler ever needs are the
drive-cost table entries (origin -> lot, lot -> destination) and the
per-facility charger pools.  Traffic assignment happens upstream of this
package; the tables arrive as plain numbers in the scenario document.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

SLOW, FAST = 0, 1
CHARGER_TYPES = (SLOW, FAST)


@dataclass(frozen=True)
class ChargerPool:
    """One homogeneous pool of chargers (one type) at a facility."""

    capacity: int
    search_time: float   # expected periods to locate a spot when idle
    awareness: float     # share of users who search rather than go direct

    def __post_init__(self):
        if self.capacity < 0:
            raise ValueError(f"pool capacity must be >= 0, got {self.capacity}")
        if self.search_time <= 0:
            raise ValueError(f"search_time must be > 0, got {self.search_time}")
        if not 0.0 <= self.awareness <= 1.0:
            raise ValueError(f"awareness must lie in [0, 1], got {self.awareness}")


@dataclass(frozen=True)
class Facility:
    """A charging lot: one slow pool, one fast pool, and price schedules."""

    lot: int
    pools: Tuple[ChargerPool, ChargerPool]
    prices: np.ndarray  # shape (T, 2), dollars per period by charger type

    def pool(self, k: int) -> ChargerPool:
        return self.pools[k]

    def capacity(self, k: int) -> int:
        return self.pools[k].capacity

    def price(self, t: int, k: int) -> float:
        return float(self.prices[t, k])

    def __eq__(self, other):
        if not isinstance(other, Facility):
            return NotImplemented
        return (
            self.lot == other.lot
            and self.pools == other.pools
            and np.array_equal(self.prices, other.prices)
        )

    def __hash__(self):
        return hash((self.lot, self.pools, self.prices.tobytes()))


@dataclass(frozen=True)
class Network:
    nodes: Tuple[int, ...]
    origins: Tuple[int, ...]
    destinations: Tuple[int, ...]
    facilities: Tuple[Facility, ...]
    to_lot: Dict[Tuple[int, int], float] = field(compare=False)      # (origin, lot) -> cost entry
    from_lot: Dict[Tuple[int, int], float] = field(compare=False)    # (lot, destination) -> cost entry

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.origins == other.origins
            and self.destinations == other.destinations
            and self.facilities == other.facilities
            and self.to_lot == other.to_lot
            and self.from_lot == other.from_lot
        )

    @property
    def lots(self) -> Tuple[int, ...]:
        return tuple(f.lot for f in self.facilities)

    def facility(self, lot: int) -> Facility:
        for f in self.facilities:
            if f.lot == lot:
                return f
        raise KeyError(f"no facility at node {lot}")


def trip_cost(net: Network, origin: int, lot: int, destination: int) -> float:
    """Drive-cost table entry for the leg origin -> lot -> destination."""
    try:
        v = net.to_lot[(origin, lot)]
    except KeyError:
        raise KeyError(f"no drive-cost entry for origin {origin} -> lot {lot}") from None
    try:
        mu = net.from_lot[(lot, destination)]
    except KeyError:
        raise KeyError(f"no drive-cost entry for lot {lot} -> destination {destination}") from None
    return v + mu


def _expand_prices(raw, T: int, where: str) -> np.ndarray:
    """Accepts {slow: x, fast: y} with scalars or length-T lists."""
    out = np.zeros((T, 2), dtype=float)
    names = ("slow", "fast")
    for k, name in enumerate(names):
        if name not in raw:
            raise ValueError(f"{where}: missing '{name}' price")
        entry = raw[name]
        if isinstance(entry, (list, tuple)):
            if len(entry) != T:
                raise ValueError(
                    f"{where}: '{name}' price list has {len(entry)} entries, horizon is {T}"
                )
            out[:, k] = [float(x) for x in entry]
        else:
            out[:, k] = float(entry)
    if (out < 0).any():
        raise ValueError(f"{where}: prices must be >= 0 for every period")
    return out


def load_network(doc: dict, T: int) -> Network:
    """Build and validate a Network from a scenario document section.

    Expected keys: nodes (int count or explicit list), origins, destinations,
    facilities (list of {lot, slow/fast pool tables, prices}), and the two
    drive-cost tables ``to_lot`` / ``from_lot``.  Every (origin, lot) and
    (lot, destination) pair must have a finite, non-negative entry; missing
    pairs are load-time errors so they cannot surface mid-run.
    """
    raw_nodes = doc.get("nodes")
    if isinstance(raw_nodes, int):
        nodes = tuple(range(1, raw_nodes + 1))
    else:
        nodes = tuple(int(n) for n in (raw_nodes or ()))
    if not nodes:
        raise ValueError("network: at least one node is required")

    origins = tuple(int(o) for o in doc.get("origins", ()))
    destinations = tuple(int(d) for d in doc.get("destinations", ()))
    if not origins or not destinations:
        raise ValueError("network: origins and destinations must be non-empty")
    for n in (*origins, *destinations):
        if n not in nodes:
            raise ValueError(f"network: node {n} not in the node set")

    facilities: List[Facility] = []
    seen_lots = set()
    for fdoc in doc.get("facilities", ()):
        lot = int(fdoc["lot"])
        if lot in seen_lots:
            raise ValueError(f"network: duplicate facility lot {lot}")
        if lot not in nodes:
            raise ValueError(f"network: facility lot {lot} not in the node set")
        seen_lots.add(lot)
        pools = []
        for name in ("slow", "fast"):
            p = fdoc.get(name, {})
            pools.append(
                ChargerPool(
                    capacity=int(p.get("capacity", 0)),
                    search_time=float(p.get("search_time", 1.0)),
                    awareness=float(p.get("awareness", 1.0)),
                )
            )
        prices = _expand_prices(fdoc.get("prices", {}), T, f"facility {lot}")
        prices.setflags(write=False)
        facilities.append(Facility(lot=lot, pools=(pools[0], pools[1]), prices=prices))
    if not facilities:
        raise ValueError("network: at least one facility is required")
    facilities.sort(key=lambda f: f.lot)

    def _cost_table(section: str, pairs) -> Dict[Tuple[int, int], float]:
        table = {}
        raw = doc.get(section, {})
        for key, value in raw.items():
            if isinstance(key, str):
                a, b = (int(x) for x in key.split("-"))
            else:
                a, b = (int(x) for x in key)
            v = float(value)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"network: {section}[{a}-{b}] must be finite and >= 0")
            table[(a, b)] = v
        for pair in pairs:
            if pair not in table:
                raise ValueError(f"network: {section} is missing entry {pair[0]}-{pair[1]}")
        return table

    lots = [f.lot for f in facilities]
    to_lot = _cost_table("to_lot", [(o, j) for o in origins for j in lots])
    from_lot = _cost_table("from_lot", [(j, d) for j in lots for d in destinations])

    return Network(
        nodes=nodes,
        origins=origins,
        destinations=destinations,
        facilities=tuple(facilities),
        to_lot=to_lot,
        from_lot=from_lot,
    )
