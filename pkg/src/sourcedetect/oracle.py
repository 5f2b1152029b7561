"""Exact expected-value computations for the particle system.

The expected field ``mu_n(w) = E N_n(w)`` obeys a linear recursion that pulls
mass from the four neighbours with the axis-swapped kernel. The single
particle law ``P_e(X_k = w)`` is propagated forward with the kernel itself;
the two routes are coded independently (gather vs scatter) and the identity
``mu_n = h*alpha * sum_{k<=n} P_e(X_k = .)`` ties them together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .lattice import OFFSETS, RngStream, SimParams, SiteIndex, StepKernel

EDGE_TOL = 1e-12
HORIZON_CAP = 10**6


class WindowTooSmall(RuntimeError):
    pass


class HorizonExceeded(RuntimeError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class Window:
    """Rectangle of lattice indices ``i0 <= i < i0+ni``, ``j0 <= j < j0+nj``."""

    i0: int
    j0: int
    ni: int
    nj: int

    @classmethod
    def centered(cls, center: SiteIndex, half_width: int) -> "Window":
        return cls(center[0] - half_width, center[1] - half_width, 2 * half_width + 1, 2 * half_width + 1)

    def contains(self, w) -> bool:
        return self.i0 <= w[0] < self.i0 + self.ni and self.j0 <= w[1] < self.j0 + self.nj

    def interior(self, w) -> bool:
        return self.i0 < w[0] < self.i0 + self.ni - 1 and self.j0 < w[1] < self.j0 + self.nj - 1

    def shifted(self, di: int, dj: int) -> "Window":
        return Window(self.i0 + di, self.j0 + dj, self.ni, self.nj)

    def local(self, w) -> tuple[int, int]:
        return (w[0] - self.i0, w[1] - self.j0)


def default_window(kernel: StepKernel, source: SiteIndex, n_steps: int) -> Window:
    # drift plus a 6-sigma diffusion envelope
    q = max(abs(kernel.q[0]), abs(kernel.q[1]))
    half = max(64, math.ceil(3 * n_steps * q) + math.ceil(6 * math.sqrt(n_steps)))
    return Window.centered(source, half)


class _Grid:
    """Window values with a one-cell zero border and a tracked support box.

    Mass pushed onto the border is lost, i.e. the window edge is absorbing.
    Updates only touch the support box grown by one cell, which keeps
    early steps cheap on large windows.
    """

    def __init__(self, window: Window):
        self.window = window
        self.a = np.zeros((window.ni + 2, window.nj + 2))
        self.box = None  # (r0, r1, c0, c1) inclusive, padded coordinates

    def put(self, w, value: float) -> None:
        r, c = self.window.local(w)
        self.a[r + 1, c + 1] += value
        self._include(r + 1, c + 1)

    def _include(self, r, c):
        if self.box is None:
            self.box = (r, r, c, c)
        else:
            r0, r1, c0, c1 = self.box
            self.box = (min(r0, r), max(r1, r), min(c0, c), max(c1, c))

    def _grown(self):
        r0, r1, c0, c1 = self.box
        return (max(r0 - 1, 1), min(r1 + 1, self.window.ni), max(c0 - 1, 1), min(c1 + 1, self.window.nj))

    @property
    def values(self) -> np.ndarray:
        return self.a[1:-1, 1:-1]

    def gather(self, weights) -> None:
        """``new(w) = sum_l weights[l] * old(w + e_l)``."""
        if self.box is None:
            return
        a = self.a
        r0, r1, c0, c1 = self._grown()
        new = np.zeros((r1 - r0 + 1, c1 - c0 + 1))
        for wl, (di, dj) in zip(weights, OFFSETS):
            new += wl * a[r0 + di : r1 + 1 + di, c0 + dj : c1 + 1 + dj]
        a[r0 : r1 + 1, c0 : c1 + 1] = new
        self.box = (r0, r1, c0, c1)

    def scatter(self, weights) -> None:
        """Each site sends ``weights[l]`` of its mass to ``w + e_l``."""
        if self.box is None:
            return
        a = self.a
        r0, r1, c0, c1 = self.box
        src = a[r0 : r1 + 1, c0 : c1 + 1].copy()
        hgt, wid = src.shape
        tmp = np.zeros((hgt + 2, wid + 2))
        for wl, (di, dj) in zip(weights, OFFSETS):
            tmp[1 + di : 1 + di + hgt, 1 + dj : 1 + dj + wid] += wl * src
        a[r0 - 1 : r1 + 2, c0 - 1 : c1 + 2] = tmp
        a[0, :] = 0.0
        a[-1, :] = 0.0
        a[:, 0] = 0.0
        a[:, -1] = 0.0
        self.box = self._grown()


@dataclass(frozen=True, eq=False)
class ExpectedField:
    mu: np.ndarray
    step_index: int
    window: Window

    def __getitem__(self, w) -> float:
        if not self.window.contains(w):
            return 0.0
        r, c = self.window.local(w)
        return float(self.mu[r, c])

    def values(self, sites: np.ndarray) -> np.ndarray:
        return _lookup(self.mu, self.window, sites)

    @property
    def total_mass(self) -> float:
        return float(self.mu.sum())

    def argmax(self) -> SiteIndex:
        r, c = np.unravel_index(int(np.argmax(self.mu)), self.mu.shape)
        return SiteIndex(int(r) + self.window.i0, int(c) + self.window.j0)

    def snapshot(self, min_value: float = 0.0) -> list[tuple[SiteIndex, float]]:
        rr, cc = np.nonzero(self.mu > min_value)
        return [(SiteIndex(int(r) + self.window.i0, int(c) + self.window.j0), float(self.mu[r, c])) for r, c in zip(rr, cc)]


def _lookup(arr, window, sites):
    sites = np.asarray(sites, dtype=np.int64).reshape(-1, 2)
    r = sites[:, 0] - window.i0
    c = sites[:, 1] - window.j0
    ok = (r >= 0) & (r < window.ni) & (c >= 0) & (c < window.nj)
    out = np.zeros(len(sites))
    out[ok] = arr[r[ok], c[ok]]
    return out


def iter_mu(kernel: StepKernel, params: SimParams, window: Window) -> Iterator[np.ndarray]:
    """Yield ``mu_0, mu_1, ...`` on ``window`` (views, overwritten in place)."""
    if not window.contains(params.source):
        raise WindowTooSmall(f"window {window} does not contain the source")
    grid = _Grid(window)
    grid.put(params.source, params.injection_mean)
    yield grid.values
    weights = kernel.reversed_p
    while True:
        grid.gather(weights)
        grid.put(params.source, params.injection_mean)
        yield grid.values


def mu_recursion(
    kernel: StepKernel,
    params: SimParams,
    n_steps: int,
    window: Window | None = None,
    edge_tol: float = EDGE_TOL,
) -> ExpectedField:
    """Expected particle counts after ``n_steps`` steps (no box absorption)."""
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    window = window or default_window(kernel, params.source, n_steps)
    it = iter_mu(kernel, params, window)
    for _ in range(n_steps + 1):
        mu = next(it)
    edge = max(mu[0].max(), mu[-1].max(), mu[:, 0].max(), mu[:, -1].max())
    if edge > edge_tol:
        raise WindowTooSmall(f"mass {edge:.3g} reached the window edge after {n_steps} steps")
    return ExpectedField(mu.copy(), n_steps, window)


def iter_walk_law(kernel: StepKernel, source: SiteIndex, window: Window) -> Iterator[np.ndarray]:
    """Yield ``P_e(X_k = .)`` for ``k = 0, 1, ...``, killed on leaving ``window``."""
    if not window.contains(source):
        raise WindowTooSmall(f"window {window} does not contain the source")
    grid = _Grid(window)
    grid.put(source, 1.0)
    yield grid.values
    while True:
        grid.scatter(kernel.p)
        yield grid.values


def cumulative_occupation(kernel: StepKernel, source: SiteIndex, n_steps: int, window: Window) -> np.ndarray:
    """``sum_{k=0}^{n} P_e(X_k = .)`` on ``window``."""
    it = iter_walk_law(kernel, source, window)
    acc = np.zeros((window.ni, window.nj))
    for _ in range(n_steps + 1):
        acc += next(it)
    return acc


@dataclass(frozen=True, eq=False)
class GreenFunction:
    """Expected visits ``sum_k P_e(X_k = w)`` of a walk killed on leaving ``window``."""

    g: np.ndarray
    window: Window
    source: SiteIndex
    truncation_horizon: int
    tail_bound: float

    def __getitem__(self, w) -> float:
        if not self.window.contains(w):
            return 0.0
        r, c = self.window.local(w)
        return float(self.g[r, c])

    def values(self, sites: np.ndarray) -> np.ndarray:
        return _lookup(self.g, self.window, sites)

    def argmax(self) -> SiteIndex:
        r, c = np.unravel_index(int(np.argmax(self.g)), self.g.shape)
        return SiteIndex(int(r) + self.window.i0, int(c) + self.window.j0)

    def margin(self) -> float:
        """``g(e) - max_{w != e} g(w)`` over the window."""
        r, c = self.window.local(self.source)
        rest = self.g.copy()
        rest[r, c] = -np.inf
        return float(self.g[r, c] - rest.max())

    def snapshot(self, min_value: float = 0.0) -> list[tuple[SiteIndex, float]]:
        rr, cc = np.nonzero(self.g > min_value)
        return [(SiteIndex(int(r) + self.window.i0, int(c) + self.window.j0), float(self.g[r, c])) for r, c in zip(rr, cc)]


def green_function(
    kernel: StepKernel,
    e: SiteIndex,
    tol: float = 1e-10,
    window: Window | None = None,
    patience: int = 10,
    horizon_cap: int = HORIZON_CAP,
) -> GreenFunction:
    """Accumulate the walk law until ``patience`` consecutive steps add < ``tol`` mass.

    The default window is 64 sites either side of ``e``; the walk is killed
    when it leaves the window, so ``g`` is exact up to excursions that leave
    and come back, which decay exponentially with the window size.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    e = SiteIndex(*e)
    window = window or Window.centered(e, 64)
    if not window.interior(e):
        raise WindowTooSmall(f"source {e} must lie strictly inside {window}")
    it = iter_walk_law(kernel, e, window)
    g = next(it).copy()
    quiet = 0
    recent = []
    for k in range(1, horizon_cap + 1):
        p = next(it)
        g += p
        inc = float(p.sum())
        recent = (recent + [inc])[-patience:]
        quiet = quiet + 1 if inc < tol else 0
        if quiet >= patience:
            return GreenFunction(g, window, e, k, max(recent))
    raise HorizonExceeded(f"increments still >= {tol} after {horizon_cap} steps")


def walk_law_at(kernel: StepKernel, e: SiteIndex, w: SiteIndex, n_max: int) -> np.ndarray:
    """``P_e(X_n = w)`` for ``n = 0..n_max`` (exact; window covers all reachable sites)."""
    e = SiteIndex(*e)
    w = SiteIndex(*w)
    half = n_max + 1
    window = Window.centered(e, half)
    if not window.contains(w):
        return np.zeros(n_max + 1)
    r, c = window.local(w)
    out = np.empty(n_max + 1)
    it = iter_walk_law(kernel, e, window)
    for n in range(n_max + 1):
        out[n] = next(it)[r, c]
    return out


def decay_check(kernel: StepKernel, e: SiteIndex, w: SiteIndex, n_max: int, floor: float = 1e-14) -> float:
    """Fitted exponential decay rate ``c`` of ``P_e(X_n = w)``."""
    probs = walk_law_at(kernel, e, w, n_max)
    n = np.arange(n_max + 1)
    keep = (n > 0) & (probs > floor)
    if keep.sum() < 2:
        raise InsufficientData(f"fewer than two nonzero probabilities above {floor}")
    slope = np.polyfit(n[keep], np.log(probs[keep]), 1)[0]
    return float(-slope)


def window_means_at(series: np.ndarray, n: int, offset: int = 0) -> float:
    """Time average of a count series.

    With ``offset == 0`` this is ``(1/n) sum_{m=0}^{n-1} N_m``; with a shift
    ``tau`` it averages ``N_{tau+1} .. N_{tau+n}``.
    """
    if offset == 0:
        return float(series[:n].sum()) / n
    return float(series[offset + 1 : offset + n + 1].sum()) / n


def consistency_experiment(
    kernel: StepKernel,
    params: SimParams,
    w: SiteIndex,
    n_list: list[int],
    runs: int,
    offset: int = 0,
    base_seed: int | None = None,
    green: GreenFunction | None = None,
) -> dict[int, float]:
    """Monte-Carlo mean of ``|lambda_n(w)/(h alpha) - g(w)|`` for each ``n``."""
    from .particles import ParticleSim

    if runs < 30:
        raise ValueError("consistency experiment needs runs >= 30")
    green = green or green_function(kernel, params.source, 1e-12)
    target = green[tuple(w)]
    seed = params.seed if base_seed is None else base_seed
    horizon = max(n_list) + offset + 1
    site = np.array([tuple(w)])
    errs = {n: 0.0 for n in n_list}
    for run in range(runs):
        sim = ParticleSim(kernel, params, RngStream(seed, run))
        series = np.empty(horizon, dtype=np.int64)
        series[0] = sim.values(site)[0]
        for m in range(1, horizon):
            sim.advance()
            series[m] = sim.values(site)[0]
        for n in n_list:
            lam = window_means_at(series, n, offset)
            errs[n] += abs(lam / params.injection_mean - target)
    return {n: errs[n] / runs for n in n_list}


class ExpectedFieldSim:
    """Noise-free stand-in for :class:`ParticleSim`.

    Readings are the exact expected counts ``mu_n`` of the box-absorbed
    system, so search algorithms can be run without sampling noise.
    """

    def __init__(self, kernel: StepKernel, params: SimParams):
        self.kernel = kernel
        self.params = params
        m = params.box_index_half_width
        self.window = Window.centered(SiteIndex(0, 0), m)
        self._it = iter_mu(kernel, params, self.window)
        self._mu = next(self._it)
        self.step_index = 0

    def advance(self, n: int = 1) -> None:
        for _ in range(n):
            self._mu = next(self._it)
            self.step_index += 1

    def advance_to(self, n: int) -> None:
        self.advance(n - self.step_index)

    def values(self, sites: np.ndarray) -> np.ndarray:
        return _lookup(self._mu, self.window, sites)

    def occupied(self):
        rr, cc = np.nonzero(self._mu > 0)
        sites = np.column_stack([rr + self.window.i0, cc + self.window.j0])
        return sites, self._mu[rr, cc]

    def inside(self, sites: np.ndarray) -> np.ndarray:
        return self.params.inside(sites[:, 0], sites[:, 1])

    def field(self) -> ExpectedField:
        return ExpectedField(self._mu.copy(), self.step_index, self.window)
