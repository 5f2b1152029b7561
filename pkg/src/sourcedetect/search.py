"""Source search: the scanning-window baseline and the drift-guided search.

Both algorithms talk to a simulation object exposing ``step_index``,
``advance()``, ``values(sites)``, ``occupied()``, ``inside(sites)`` and
``kernel``/``params``; :class:`~sourcedetect.particles.ParticleSim` and the
noise-free :class:`~sourcedetect.oracle.ExpectedFieldSim` both qualify.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import RngStream, SiteIndex, StepKernel
from .sensors import MeasurementLedger, sorted_sites, window_sums

SEED_STEP = 30
SEED_MIN, SEED_MAX = 1, 3
SEED_EXTRA_STEPS = 100


class NoSeedFound(RuntimeError):
    pass


class MaxItersExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Alg1Config:
    r: int = 18
    N0: int = 10
    max_iters: int = 200

    def __post_init__(self):
        if self.r < 2 or self.N0 < 1 or self.max_iters < 1:
            raise ValueError(f"invalid scanning-window config {self}")


@dataclass(frozen=True)
class Alg2Config:
    r: int = 24
    N0: int = 10
    N1: int = 10
    c: float = 0.5
    K: float = 0.0
    max_iters: int = 500

    def __post_init__(self):
        if not 0 < self.c < 1:
            raise ValueError(f"c must lie in (0, 1), got {self.c}")
        if self.r < 1 or self.N0 < 1 or self.N1 < 1 or self.K < 0 or self.max_iters < 1:
            raise ValueError(f"invalid drift-search config {self}")


@dataclass(frozen=True)
class Iterate:
    n: int
    w: SiteIndex
    lam: float
    L: float | None = None


@dataclass
class SearchTrace:
    iterates: list[Iterate] = field(default_factory=list)
    converged_site: SiteIndex | None = None
    measurements: int = 0

    @property
    def iterations(self) -> int:
        return max(len(self.iterates) - 1, 0)

    def write_ndjson(self, fh) -> None:
        for j, it in enumerate(self.iterates):
            row = {"j": j, "n": it.n, "w_i": it.w.i, "w_j": it.w.j, "lambda": it.lam, "L": it.L}
            fh.write(json.dumps(row) + "\n")


def success_check(converged_site, source) -> bool:
    if converged_site is None:
        return False
    di = converged_site[0] - source[0]
    dj = converged_site[1] - source[1]
    return abs(di) + abs(dj) <= 1


def find_seed_site(sim, stream: RngStream, at_step: int = SEED_STEP) -> SiteIndex:
    """Pick uniformly among sites holding 1..3 particles at step ``at_step``."""
    sim.advance_to(at_step)
    for _ in range(SEED_EXTRA_STEPS + 1):
        sites, counts = sim.occupied()
        pick = sites[(counts >= SEED_MIN) & (counts <= SEED_MAX)]
        if len(pick):
            i, j = pick[int(stream.generator.integers(len(pick)))]
            return SiteIndex(int(i), int(j))
        sim.advance()
    raise NoSeedFound(f"no site with {SEED_MIN}..{SEED_MAX} particles by step {sim.step_index - 1}")


def _best(sites: np.ndarray, sums: np.ndarray, window: int) -> tuple[SiteIndex, float]:
    # sites are lexicographically sorted, so argmax's first hit is the tie-break
    k = int(np.argmax(sums))
    return SiteIndex(int(sites[k, 0]), int(sites[k, 1])), float(sums[k]) / window


def _in_box(sim, sites: np.ndarray) -> np.ndarray:
    return sites[sim.inside(sites)]


def square_window(w: SiteIndex, r: int) -> np.ndarray:
    half = r // 2
    ii, jj = np.meshgrid(np.arange(w.i - half, w.i + half + 1), np.arange(w.j - half, w.j + half + 1), indexing="ij")
    return np.column_stack([ii.ravel(), jj.ravel()])


def alg1_run(sim, cfg: Alg1Config, seed_site: SiteIndex, ledger: MeasurementLedger) -> SearchTrace:
    """Recentre a square window on its highest time-averaged count until it stops moving."""
    w = SiteIndex(*seed_site)
    trace = SearchTrace([Iterate(sim.step_index, w, float(sim.values(np.array([w]))[0]))])
    for _ in range(cfg.max_iters):
        sites = sorted_sites(_in_box(sim, square_window(w, cfg.r)))
        sums = window_sums(sim, sites, cfg.N0, ledger)
        w_new, lam = _best(sites, sums, cfg.N0)
        trace.iterates.append(Iterate(sim.step_index, w_new, lam))
        if w_new == w:
            trace.converged_site = w
            break
        w = w_new
    trace.measurements = ledger.total_measurements
    return trace


def scan_line(w: SiteIndex, r: int) -> np.ndarray:
    ii = np.arange(w.i - r * r, w.i + r * r + 1)
    return np.column_stack([ii, np.full_like(ii, w.j)])


def alg2_initial_scan(sim, cfg: Alg2Config, seed_site: SiteIndex, ledger: MeasurementLedger) -> Iterate:
    """Scan the horizontal line through the seed; returns ``(n0, w0, lambda0, L0)``."""
    sites = sorted_sites(_in_box(sim, scan_line(SiteIndex(*seed_site), cfg.r)))
    sums = window_sums(sim, sites, cfg.N0, ledger)
    w0, lam0 = _best(sites, sums, cfg.N0)
    return Iterate(sim.step_index, w0, lam0, math.sqrt(sim.params.h))


def _snap(x: np.ndarray) -> np.ndarray:
    # nearest integer, exact halves go toward -inf
    return np.ceil(x - 0.5).astype(np.int64)


def brownian_sites(
    w: SiteIndex,
    kernel: StepKernel,
    L: float,
    r: int,
    h: float,
    stream: RngStream,
    inside=None,
    chunk: int = 256,
) -> np.ndarray:
    """Lattice sites along Brownian perturbations of the backward drift ray from ``w``.

    Point ``k`` of path ``l`` is ``w - q k h - L W_l(k h)`` in physical units,
    snapped to the nearest site. At most ``r**2`` distinct sites are kept,
    preferring small ``k``; ``inside`` optionally filters sites (e.g. the box).
    Returns a lexicographically sorted ``(m, 2)`` index array.
    """
    if not L > 0:
        raise ValueError("L must be positive")
    cap = r * r
    n_paths = min(math.floor(L * r) + 1, cap)
    n_pts = max(1, math.floor(r / L))
    q = np.asarray(kernel.q)
    # index-unit noise: (L / h) * W(kh) has per-step standard deviation L / sqrt(h)
    sd = L / math.sqrt(h)
    origin = np.array([w[0], w[1]], dtype=float)
    pos = np.zeros((n_paths, 2))
    seen: dict[tuple[int, int], int] = {}
    order: list[tuple[int, int, int]] = []
    k0 = 0
    while k0 < n_pts and len(seen) < cap:
        k1 = min(k0 + chunk, n_pts)
        ks = np.arange(k0, k1)
        steps = stream.generator.standard_normal((n_paths, k1 - k0, 2)) * sd
        if k0 == 0:
            steps[:, 0, :] = 0.0  # W(0) = 0
        walk = pos[:, None, :] + np.cumsum(steps, axis=1)
        pos = walk[:, -1, :]
        pts = origin[None, None, :] - q[None, None, :] * ks[None, :, None] - walk
        snapped = _snap(pts)
        # visit points in (k, path) order so the first sighting carries the smallest k
        flat = snapped.transpose(1, 0, 2).reshape(-1, 2)
        kk = np.repeat(ks, n_paths)
        if inside is not None:
            ok = inside(flat)
            flat, kk = flat[ok], kk[ok]
        for (i, j), k in zip(flat.tolist(), kk.tolist()):
            if (i, j) not in seen:
                seen[(i, j)] = k
                order.append((k, i, j))
        k0 = k1
    order.sort()
    kept = order[:cap]
    if not kept:
        return np.empty((0, 2), dtype=np.int64)
    out = np.array([(i, j) for _, i, j in kept], dtype=np.int64)
    return sorted_sites(out)


def variance_update(L_j: float, lambda_j: float, lambda_jm1: float, c: float, K: float) -> float:
    if not L_j > 0:
        raise ValueError("L must be positive")
    if lambda_j >= lambda_jm1 + K:
        return c * L_j
    if lambda_j <= lambda_jm1 - K:
        return L_j / c
    return L_j


def alg2_run(
    sim,
    cfg: Alg2Config,
    seed_site: SiteIndex,
    ledger: MeasurementLedger,
    stream: RngStream,
) -> SearchTrace:
    """Line scan, then follow Brownian paths up the drift with an adaptive spread."""
    kernel = sim.kernel
    h = sim.params.h
    first = alg2_initial_scan(sim, cfg, seed_site, ledger)
    trace = SearchTrace([first])
    w, lam, L = first.w, first.lam, first.L
    inside = lambda s: sim.inside(s)  # noqa: E731
    for _ in range(cfg.max_iters):
        sites = brownian_sites(w, kernel, L, cfg.r, h, stream, inside=inside)
        sums = window_sums(sim, sites, cfg.N1, ledger)
        w_new, lam_new = _best(sites, sums, cfg.N1)
        L_new = variance_update(L, lam_new, lam, cfg.c, cfg.K)
        trace.iterates.append(Iterate(sim.step_index, w_new, lam_new, L_new))
        if w_new == w:
            trace.converged_site = w
            break
        w, lam, L = w_new, lam_new, L_new
    trace.measurements = ledger.total_measurements
    return trace
