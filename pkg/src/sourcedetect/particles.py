"""Particle system: injection at the source, independent moves, absorption.

Particles are exchangeable, so the state is kept as counts per site and a
step redistributes each site's count with a single multinomial draw.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .lattice import OFFSETS, RngStream, SimParams, SiteIndex, StepKernel, sample_geometric

Injector = Callable[[RngStream], int]


@dataclass(frozen=True, eq=False)
class OccupancyField:
    """Particle counts inside the open box at one step.

    ``grid`` is a dense count array over the box interior, indexed by
    ``[i + m, j + m]`` with ``m = params.box_index_half_width``; the sparse
    mapping view is available as :attr:`counts`.
    """

    grid: np.ndarray
    step_index: int
    absorbed_total: int
    injected_total: int

    @classmethod
    def empty(cls, params: SimParams) -> "OccupancyField":
        m = params.box_index_half_width
        return cls(np.zeros((2 * m + 1, 2 * m + 1), dtype=np.int64), 0, 0, 0)

    @property
    def half_width(self) -> int:
        return (self.grid.shape[0] - 1) // 2

    @property
    def live_total(self) -> int:
        return int(self.grid.sum())

    @property
    def counts(self) -> dict[SiteIndex, int]:
        m = self.half_width
        ii, jj = np.nonzero(self.grid)
        return {SiteIndex(int(i) - m, int(j) - m): int(self.grid[i, j]) for i, j in zip(ii, jj)}

    def occupied(self) -> tuple[np.ndarray, np.ndarray]:
        """Occupied sites as an ``(k, 2)`` index array (lexicographic) and counts."""
        m = self.half_width
        ii, jj = np.nonzero(self.grid)
        return np.column_stack([ii - m, jj - m]), self.grid[ii, jj]

    def values(self, sites: np.ndarray) -> np.ndarray:
        """Counts at an ``(k, 2)`` array of site indices; zero outside the box."""
        sites = np.asarray(sites, dtype=np.int64).reshape(-1, 2)
        m = self.half_width
        ok = (np.abs(sites[:, 0]) <= m) & (np.abs(sites[:, 1]) <= m)
        out = np.zeros(len(sites), dtype=np.int64)
        out[ok] = self.grid[sites[ok, 0] + m, sites[ok, 1] + m]
        return out


def count_at(field: OccupancyField, w: SiteIndex) -> int:
    return int(field.values(np.array([w]))[0])


def snapshot(field: OccupancyField) -> list[tuple[SiteIndex, int]]:
    sites, counts = field.occupied()
    return [(SiteIndex(int(i), int(j)), int(c)) for (i, j), c in zip(sites, counts)]


def _inject(grid, params, n_new):
    m = (grid.shape[0] - 1) // 2
    grid[params.source.i + m, params.source.j + m] += n_new


def initial_field(params: SimParams, stream: RngStream, injector: Injector | None = None) -> OccupancyField:
    """Field at step 0: the first injection sitting at the source."""
    empty = OccupancyField.empty(params)
    grid = empty.grid
    n_new = injector(stream) if injector else sample_geometric(stream, params.injection_mean)
    _inject(grid, params, n_new)
    return OccupancyField(grid, 0, 0, n_new)


def step(
    field: OccupancyField,
    kernel: StepKernel,
    params: SimParams,
    stream: RngStream,
    injector: Injector | None = None,
) -> OccupancyField:
    """Advance one time step: move every particle, absorb, then inject."""
    grid = field.grid
    m = field.half_width
    new = np.zeros_like(grid)
    absorbed = 0
    ii, jj = np.nonzero(grid)
    if len(ii):
        moves = stream.generator.multinomial(grid[ii, jj], kernel.p)
        for col, (di, dj) in enumerate(OFFSETS):
            ti, tj = ii + di, jj + dj
            ok = (ti >= 0) & (ti <= 2 * m) & (tj >= 0) & (tj <= 2 * m)
            # a shift is injective, so plain fancy-index accumulation is safe
            new[ti[ok], tj[ok]] += moves[ok, col]
            absorbed += int(moves[~ok, col].sum())
    n_new = injector(stream) if injector else sample_geometric(stream, params.injection_mean)
    _inject(new, params, n_new)
    if field.injected_total + n_new > np.iinfo(np.int64).max // 2:
        raise OverflowError("particle count overflow")
    return OccupancyField(new, field.step_index + 1, field.absorbed_total + absorbed, field.injected_total + n_new)


class ParticleSim:
    """A running particle simulation that observers can advance and read."""

    def __init__(
        self,
        kernel: StepKernel,
        params: SimParams,
        stream: RngStream,
        injector: Injector | None = None,
    ):
        self.kernel = kernel
        self.params = params
        self.stream = stream
        self.injector = injector
        self.field = initial_field(params, stream, injector)

    @property
    def step_index(self) -> int:
        return self.field.step_index

    def advance(self, n: int = 1) -> None:
        for _ in range(n):
            self.field = step(self.field, self.kernel, self.params, self.stream, self.injector)

    def advance_to(self, n: int) -> None:
        self.advance(n - self.step_index)

    def values(self, sites: np.ndarray) -> np.ndarray:
        return self.field.values(sites)

    def occupied(self):
        return self.field.occupied()

    def inside(self, sites: np.ndarray) -> np.ndarray:
        return self.params.inside(sites[:, 0], sites[:, 1])


def write_ndjson(rows: Iterable[tuple[SiteIndex, float]], fh, key: str = "count") -> None:
    """One ``{"i", "j", key}`` object per line."""
    for site, count in rows:
        c = int(count) if isinstance(count, (int, np.integer)) else float(count)
        fh.write(json.dumps({"i": int(site[0]), "j": int(site[1]), key: c}) + "\n")
