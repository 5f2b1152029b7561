"""Sensor reads with budget accounting, and time-window averages."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .lattice import SiteIndex
from .particles import OccupancyField, count_at


class EmptySiteSet(ValueError):
    pass


@dataclass
class MeasurementLedger:
    """Counts every sensor read; steps over the ``budget`` are only reported."""

    budget: int
    total_measurements: int = 0
    per_step_counts: dict[int, int] = field(default_factory=lambda: defaultdict(int))

    def charge(self, step_index: int, n_sites: int) -> None:
        self.per_step_counts[step_index] += n_sites
        self.total_measurements += n_sites

    @property
    def budget_violations(self) -> int:
        return sum(1 for c in self.per_step_counts.values() if c > self.budget)


def measure(field: OccupancyField, w: SiteIndex, ledger: MeasurementLedger) -> int:
    ledger.charge(field.step_index, 1)
    return count_at(field, w)


def sorted_sites(sites) -> np.ndarray:
    """Deduplicated ``(k, 2)`` int array in lexicographic order."""
    arr = np.asarray(list(sites) if not isinstance(sites, np.ndarray) else sites, dtype=np.int64)
    arr = arr.reshape(-1, 2)
    if len(arr) == 0:
        return arr
    return np.unique(arr, axis=0)


def window_sums(sim, sites: np.ndarray, window: int, ledger: MeasurementLedger) -> np.ndarray:
    """Advance ``sim`` by ``window`` steps and sum the readings at ``sites``.

    ``sites`` must already be a deduplicated ``(k, 2)`` array. Returns raw
    sums so that callers can break ties exactly.
    """
    if len(sites) == 0:
        raise EmptySiteSet("window average needs at least one site")
    if window < 1:
        raise ValueError("window must be a positive number of steps")
    total = None
    for _ in range(window):
        sim.advance()
        vals = sim.values(sites)
        ledger.charge(sim.step_index, len(sites))
        total = vals.copy() if total is None else total + vals
    return total


def window_average(sim, sites, window: int, ledger: MeasurementLedger) -> dict[SiteIndex, float]:
    """Mean reading at each site over steps ``n+1 .. n+window``."""
    arr = sorted_sites(sites)
    sums = window_sums(sim, arr, window, ledger)
    return {SiteIndex(int(i), int(j)): float(s) / window for (i, j), s in zip(arr, sums)}
