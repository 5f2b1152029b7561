"""Monte-Carlo sweeps over (algorithm, kernel, r) and their outputs."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

from .lattice import RngStream, SimParams, StepKernel
from .particles import ParticleSim
from .search import Alg1Config, Alg2Config, alg1_run, alg2_run, find_seed_site, success_check
from .sensors import MeasurementLedger

WORKERS_ENV = "SOURCEDETECT_WORKERS"
CSV_HEADER = ["algorithm", "kernel", "r", "M", "p_detect", "p_error", "mean_measurements", "rel_efficiency"]

# stream ids per trial: simulation and observer randomness never share a stream
_STREAMS_PER_TRIAL = 4


@dataclass(frozen=True)
class TrialMetrics:
    trial_id: int
    success: bool
    measurements: int
    iterations: int
    converged: bool
    elapsed_steps: int
    seed: int
    error: str | None = None


@dataclass
class SweepSummary:
    kernel: str
    algorithm: str
    r: int
    M: int
    n_success: int
    mean_measurements: float
    mean_measurements_success: float
    trials: list[TrialMetrics] = field(default_factory=list, repr=False)

    @property
    def detection_probability(self) -> float:
        return self.n_success / self.M

    @property
    def error_probability(self) -> float:
        return 1.0 - self.detection_probability

    @property
    def relative_efficiency(self) -> float:
        if self.n_success == 0:
            return math.inf
        return self.mean_measurements / self.detection_probability


@dataclass(frozen=True)
class _Job:
    algorithm: str
    kernel: StepKernel
    params: SimParams
    cfg: Alg1Config | Alg2Config
    base_seed: int


def run_trial(job: _Job, trial_id: int) -> TrialMetrics:
    sim_stream = RngStream(job.base_seed, _STREAMS_PER_TRIAL * trial_id)
    obs_stream = RngStream(job.base_seed, _STREAMS_PER_TRIAL * trial_id + 1)
    ledger = MeasurementLedger(job.cfg.r**2)
    sim = ParticleSim(job.kernel, job.params, sim_stream)
    try:
        seed_site = find_seed_site(sim, obs_stream)
        if job.algorithm == "alg1":
            trace = alg1_run(sim, job.cfg, seed_site, ledger)
        else:
            trace = alg2_run(sim, job.cfg, seed_site, ledger, obs_stream)
    except Exception as exc:  # a broken trial is a failed trial, never a dead sweep
        return TrialMetrics(trial_id, False, ledger.total_measurements, 0, False, sim.step_index, job.base_seed, repr(exc))
    converged = trace.converged_site is not None
    return TrialMetrics(
        trial_id,
        success_check(trace.converged_site, job.params.source),
        ledger.total_measurements,
        trace.iterations,
        converged,
        sim.step_index,
        job.base_seed,
    )


def _run_chunk(args):
    job, ids = args
    return [run_trial(job, t) for t in ids]


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def summarize(label: str, algorithm: str, r: int, trials: list[TrialMetrics]) -> SweepSummary:
    trials = sorted(trials, key=lambda t: t.trial_id)
    m = len(trials)
    wins = [t for t in trials if t.success]
    mean_all = sum(t.measurements for t in trials) / m
    mean_win = sum(t.measurements for t in wins) / len(wins) if wins else math.nan
    return SweepSummary(label, algorithm, r, m, len(wins), mean_all, mean_win, trials)


def run_sweep(
    algorithm: str,
    kernel: StepKernel,
    r: int,
    M: int,
    base_seed: int,
    params: SimParams | None = None,
    cfg: Alg1Config | Alg2Config | None = None,
    label: str | None = None,
    first_trial: int = 0,
    workers: int | None = None,
) -> SweepSummary:
    """Run trials ``first_trial .. first_trial+M-1`` and aggregate them in trial order."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if algorithm not in ("alg1", "alg2"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    params = params or SimParams(seed=base_seed)
    if cfg is None:
        cfg = Alg1Config(r=r) if algorithm == "alg1" else Alg2Config(r=r)
    job = _Job(algorithm, kernel, params, cfg, base_seed)
    ids = list(range(first_trial, first_trial + M))
    workers = workers or _workers()
    if workers == 1:
        trials = [run_trial(job, t) for t in ids]
    else:
        chunks = [(job, ids[k::workers]) for k in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            trials = [t for part in pool.map(_run_chunk, chunks) for t in part]
    return summarize(label or kernel.label(), algorithm, r, trials)


def _fmt(x: float) -> str:
    if isinstance(x, int):
        return str(x)
    if math.isinf(x):
        return "inf"
    return format(x, ".17g")


def emit_csv(summaries: Iterable[SweepSummary], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for s in summaries:
            w.writerow(
                [
                    s.algorithm,
                    s.kernel,
                    s.r,
                    s.M,
                    _fmt(s.detection_probability),
                    _fmt(s.error_probability),
                    _fmt(s.mean_measurements),
                    _fmt(s.relative_efficiency),
                ]
            )


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        row["r"] = int(row["r"])
        row["M"] = int(row["M"])
        for k in ("p_detect", "p_error", "mean_measurements", "rel_efficiency"):
            row[k] = float(row[k])
    return rows


def write_trials(trials: Iterable[TrialMetrics], path) -> None:
    fields = ["trial_id", "success", "measurements", "iterations", "converged", "elapsed_steps", "seed", "error"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for t in trials:
            w.writerow([getattr(t, f) if getattr(t, f) is not None else "" for f in fields])


class EmptyInput(ValueError):
    pass


_METRICS = {
    "p_detect": lambda s: s.detection_probability,
    "p_error": lambda s: s.error_probability,
    "mean_measurements": lambda s: s.mean_measurements,
    "rel_efficiency": lambda s: s.relative_efficiency,
}
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def emit_svg_lines(summaries: Iterable[SweepSummary], metric: str, path, title: str | None = None) -> None:
    """Line chart of ``metric`` against r, one polyline per kernel."""
    summaries = list(summaries)
    if not summaries:
        raise EmptyInput("no summaries to plot")
    value = _METRICS[metric]
    curves: dict[str, list[tuple[int, float]]] = {}
    for s in summaries:
        curves.setdefault(s.kernel, []).append((s.r, value(s)))
    for pts in curves.values():
        pts.sort()

    finite = [y for pts in curves.values() for _, y in pts if math.isfinite(y)]
    xs = [x for pts in curves.values() for x, _ in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = (min(finite), max(finite)) if finite else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    W, H, left, right, top, bottom = 640, 400, 80, 170, 40, 50
    pw, ph = W - left - right, H - top - bottom

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        y = min(max(y, y0), y1)  # infinite values pin to the top edge
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.2f}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">'
        f"{_esc(title or metric + ' vs r')}</text>",
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
        f'<text x="{left + pw / 2:.2f}" y="{H - 10}" text-anchor="middle" font-family="sans-serif" font-size="12">r</text>',
        f'<text x="15" y="{top + ph / 2:.2f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 15 {top + ph / 2:.2f})">{_esc(metric)}</text>',
    ]
    for x in sorted(set(xs)):
        out.append(
            f'<text x="{sx(x):.2f}" y="{top + ph + 16}" text-anchor="middle" font-family="sans-serif" font-size="10">{x}</text>'
        )
    for k in range(5):
        y = y0 + (y1 - y0) * k / 4
        out.append(
            f'<text x="{left - 6}" y="{sy(y) + 3:.2f}" text-anchor="end" font-family="sans-serif" font-size="10">{y:.4g}</text>'
        )
    for n, (label, pts) in enumerate(curves.items()):
        color = _COLORS[n % len(_COLORS)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
        ly = top + 16 * n + 10
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(
            f'<text x="{left + pw + 35}" y="{ly + 4}" font-family="sans-serif" font-size="10">{_esc(label)}</text>'
        )
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
