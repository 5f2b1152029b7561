"""Lattice sites, step kernels, simulation parameters and random streams."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

PROB_TOL = 1e-12

# move offsets in kernel order: +x, +y, -x, -y
OFFSETS = ((1, 0), (0, 1), (-1, 0), (0, -1))


class LatticeError(ValueError):
    pass


class NonPositiveProbability(LatticeError):
    pass


class NotNormalized(LatticeError):
    pass


class DegenerateKernel(LatticeError):
    pass


class InvalidMean(LatticeError):
    pass


class InvalidParams(LatticeError):
    pass


class SiteIndex(NamedTuple):
    """Integer lattice coordinate; the physical point is ``(h*i, h*j)``."""

    i: int
    j: int

    def position(self, h: float) -> tuple[float, float]:
        return (h * self.i, h * self.j)

    @classmethod
    def from_position(cls, x: float, y: float, h: float) -> "SiteIndex":
        return cls(round(x / h), round(y / h))

    def neighbors(self) -> tuple["SiteIndex", ...]:
        return tuple(SiteIndex(self.i + di, self.j + dj) for di, dj in OFFSETS)

    def shift(self, di: int, dj: int) -> "SiteIndex":
        return SiteIndex(self.i + di, self.j + dj)


@dataclass(frozen=True)
class StepKernel:
    """Nearest-neighbour move probabilities ``p`` (+x, +y, -x, -y).

    Build through :func:`make_kernel`, which validates the probabilities.
    """

    p: tuple[float, float, float, float]

    @property
    def q(self) -> tuple[float, float]:
        p1, p2, p3, p4 = self.p
        return (p1 - p3, p2 - p4)

    @property
    def reversed_p(self) -> tuple[float, float, float, float]:
        # weight of the neighbour w + e_l in the expected-field recursion
        p1, p2, p3, p4 = self.p
        return (p3, p4, p1, p2)

    def transverse_variance(self) -> float:
        """Variance of one step in the direction normal to the drift."""
        q1, q2 = self.q
        norm = math.hypot(q1, q2)
        u = (-q2 / norm, q1 / norm)
        return sum(pl * (u[0] * dx + u[1] * dy) ** 2 for pl, (dx, dy) in zip(self.p, OFFSETS))

    def label(self) -> str:
        return "(" + ",".join(f"{x:g}" for x in self.p) + ")"


def make_kernel(p1: float, p2: float, p3: float, p4: float) -> StepKernel:
    p = (float(p1), float(p2), float(p3), float(p4))
    if any(not (x > 0) for x in p):
        raise NonPositiveProbability(f"all move probabilities must be > 0, got {p}")
    if abs(math.fsum(p) - 1.0) > PROB_TOL:
        raise NotNormalized(f"probabilities sum to {math.fsum(p)!r}, not 1")
    if abs(p[0] - p[2]) + abs(p[1] - p[3]) == 0:
        raise DegenerateKernel(f"kernel {p} has zero drift; the walk is not transient")
    return StepKernel(p)


# Kernels used in the reference experiments.
REFERENCE_KERNELS = {
    "p1": (0.9, 0.05, 0.01, 0.04),
    "p2": (0.70, 0.25, 0.01, 0.04),
    "p3": (0.26, 0.26, 0.24, 0.24),
    "p4": (0.55, 0.35, 0.05, 0.05),
}
FIGURE_KERNEL = (0.6, 0.3, 0.025, 0.075)

DEFAULT_H = 10 * 2.0**-8


@dataclass(frozen=True)
class SimParams:
    h: float = DEFAULT_H
    source: SiteIndex = SiteIndex(0, 0)
    injection_mean: float = 25.0
    box_half_width: float = 6.0
    seed: int = 0

    def __post_init__(self):
        if not self.h > 0:
            raise InvalidParams(f"h must be positive, got {self.h}")
        if not self.injection_mean >= 1:
            raise InvalidParams(f"injection_mean must be >= 1, got {self.injection_mean}")
        if not self.box_half_width > 0:
            raise InvalidParams("box_half_width must be positive")
        object.__setattr__(self, "source", SiteIndex(*self.source))
        m = self.box_index_half_width
        if abs(self.source.i) > m or abs(self.source.j) > m:
            raise InvalidParams(f"source {self.source} is not inside the open box")

    @property
    def rate(self) -> float:
        """Injection rate per unit time (alpha)."""
        return self.injection_mean / self.h

    @property
    def box_index_half_width(self) -> int:
        # largest index strictly inside the open box; indices at or past the
        # boundary are absorbing
        return math.ceil(self.box_half_width / self.h) - 1

    def inside(self, i, j):
        m = self.box_index_half_width
        return (np.abs(i) <= m) & (np.abs(j) <= m)


_MASK64 = (1 << 64) - 1


class RngStream:
    """Counter-based (Philox) random stream keyed by ``(seed, stream_id)``.

    A given pair always reproduces the same draws, so any trial of a sweep
    can be replayed on its own.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        ss = np.random.SeedSequence([self.seed, self.stream_id])
        self.generator = np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def sample_geometric(stream: RngStream, mean: float, size=None):
    """Geometric draw on {1, 2, ...} with success probability ``1/mean``."""
    if not mean >= 1:
        raise InvalidMean(f"geometric mean must be >= 1, got {mean}")
    out = stream.generator.geometric(1.0 / mean, size=size)
    return int(out) if size is None else out
