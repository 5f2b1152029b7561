"""Transport-limit line measure and its comparison with the lattice field."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .lattice import SimParams, SiteIndex, StepKernel
from .oracle import Window, iter_mu

Point = tuple[float, float]


class QuadratureFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class LineMeasure:
    """``rate * int_0^t delta_{source + drift*s} ds``."""

    source: Point
    drift: Point
    rate: float
    t: float

    @property
    def mass(self) -> float:
        return self.rate * self.t

    def point(self, s: float) -> Point:
        return (self.source[0] + self.drift[0] * s, self.source[1] + self.drift[1] * s)


@dataclass(frozen=True)
class TestFunction:
    """Spatial test function with a compact-support certificate."""

    __test__ = False  # not a pytest class

    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    center: Point
    support_radius: float

    def __call__(self, x, y):
        return self.evaluator(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def gaussian_bump(center: Point, scale: float, radius: float | None = None) -> TestFunction:
    """Gaussian of width ``scale`` tapered to zero (C^1) at ``radius``."""
    radius = 4 * scale if radius is None else radius
    cx, cy = center

    def f(x, y):
        d2 = (x - cx) ** 2 + (y - cy) ** 2
        taper = np.clip(1 - d2 / radius**2, 0, None) ** 2
        return np.exp(-d2 / (2 * scale**2)) * taper

    return TestFunction(f, center, radius)


def constant(value: float, center: Point, radius: float) -> TestFunction:
    """``value`` on the disc of ``radius`` (only its restriction there matters)."""
    cx, cy = center

    def f(x, y):
        d2 = (x - cx) ** 2 + (y - cy) ** 2
        return np.where(d2 <= radius**2, value, 0.0)

    return TestFunction(f, center, radius)


def adaptive_simpson(fn: Callable[[float], float], a: float, b: float, tol: float = 1e-10, max_depth: int = 50) -> float:
    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6 * (fa + 4 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = (a + b) / 2
        lm, rm = (a + m) / 2, (m + b) / 2
        flm, frm = fn(lm), fn(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if abs(delta) <= 15 * tol:
            return left + right + delta / 15
        if depth >= max_depth:
            raise QuadratureFailure(f"no convergence on [{a}, {b}]")
        return rec(a, m, fa, flm, fm, left, tol / 2, depth + 1) + rec(m, b, fm, frm, fb, right, tol / 2, depth + 1)

    if a == b:
        return 0.0
    fa, fb, fm = fn(a), fn(b), fn((a + b) / 2)
    # seed with a few panels so narrow bumps on a long segment are not missed
    edges = np.linspace(a, b, 17)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        flo, fhi, fmid = fn(lo), fn(hi), fn((lo + hi) / 2)
        total += rec(lo, hi, flo, fmid, fhi, simpson(flo, fmid, fhi, lo, hi), tol / 16, 0)
    return total


def limit_pairing(m: LineMeasure, f: TestFunction, tol: float = 1e-10) -> float:
    """``rate * int_0^t f(source + drift*s) ds``."""
    if m.t < 0:
        raise ValueError("t must be >= 0")
    if m.t == 0:
        return 0.0

    def g(s):
        x, y = m.point(s)
        return float(f(x, y))

    return m.rate * adaptive_simpson(g, 0.0, m.t, tol / max(m.rate, 1.0))


def _window_for(kernel: StepKernel, params: SimParams, f: TestFunction, n: int) -> Window:
    h = params.h
    e = params.source
    reach = n + 1
    cx, cy = f.center
    lo_i = min(e.i - reach, math.floor((cx - f.support_radius) / h) - 1)
    hi_i = max(e.i + reach, math.ceil((cx + f.support_radius) / h) + 1)
    lo_j = min(e.j - reach, math.floor((cy - f.support_radius) / h) - 1)
    hi_j = max(e.j + reach, math.ceil((cy + f.support_radius) / h) + 1)
    return Window(lo_i, lo_j, hi_i - lo_i + 1, hi_j - lo_j + 1)


def discrete_pairing(kernel: StepKernel, params: SimParams, f: TestFunction, t: float, window: Window | None = None) -> float:
    """``sum_w mu_{floor(t/h)}(w) f(h w)`` with ``mu`` from the exact recursion."""
    n = math.floor(t / params.h + 1e-9)
    window = window or _window_for(kernel, params, f, n)
    it = iter_mu(kernel, params, window)
    for _ in range(n + 1):
        mu = next(it)
    ii = (np.arange(window.ni) + window.i0) * params.h
    jj = (np.arange(window.nj) + window.j0) * params.h
    fx = f(ii[:, None], jj[None, :])
    return float((mu * fx).sum())


@dataclass
class ConvergenceTable:
    h: list[float]
    discrete: list[float]
    limit: float
    errors: list[float]
    slope: float

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["h", "error"])
            for h, err in zip(self.h, self.errors):
                w.writerow([repr(h), repr(err)])
            w.writerow(["slope", repr(self.slope)])


def convergence_study(
    kernel: StepKernel,
    f: TestFunction,
    t: float,
    h_list: list[float],
    rate: float = 25.0 / (10 * 2.0**-8),
    source: Point = (0.0, 0.0),
) -> ConvergenceTable:
    """Pairing errors ``|<mu^h_t, f> - <mu_t, f>|`` at fixed rate ``alpha``.

    Each mesh injects ``h * rate`` particles per step on average.
    """
    limit = limit_pairing(LineMeasure(source, kernel.q, rate, t), f)
    discrete, errors = [], []
    for h in h_list:
        e = SiteIndex.from_position(source[0], source[1], h)
        params = SimParams(h=h, source=e, injection_mean=h * rate, box_half_width=1e9)
        d = discrete_pairing(kernel, params, f, t)
        discrete.append(d)
        errors.append(float(abs(d - limit)))
    hs = np.log(np.asarray(h_list))
    es = np.log(np.maximum(np.asarray(errors), 1e-300))
    slope = float(np.polyfit(hs, es, 1)[0]) if len(h_list) > 1 else float("nan")
    return ConvergenceTable(list(h_list), discrete, limit, errors, slope)

