"""Command-line entry point: ``sourcedetect <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from pathlib import Path

from . import bench, hydro, oracle
from .config import ConfigError, load_config
from .lattice import REFERENCE_KERNELS, LatticeError, RngStream, SiteIndex, make_kernel
from .particles import ParticleSim, snapshot, write_ndjson
from .search import alg1_run, alg2_run, find_seed_site, success_check
from .sensors import MeasurementLedger

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _common(p):
    p.add_argument("--config", help="YAML key-value config file")
    p.add_argument("--seed", type=int)
    for key in ("p1", "p2", "p3", "p4", "h", "injection-mean", "box", "c", "K"):
        p.add_argument(f"--{key}", type=float, dest=key.replace("-", "_"))
    for key in ("r", "N0", "N1"):
        p.add_argument(f"--{key}", type=int)
    p.add_argument("--m", "--M", type=int, dest="M")
    p.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sourcedetect", description="Lattice plume simulation and source search.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="particle field snapshot at step n (NDJSON)")
    _common(p)
    p.add_argument("--n", type=int, default=75)

    p = sub.add_parser("field", help="expected field or Green's function (NDJSON)")
    _common(p)
    p.add_argument("--kind", choices=["mu", "green"], default="mu")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--half-width", type=int, default=64)
    p.add_argument("--min-value", type=float, default=1e-12)

    p = sub.add_parser("hydro", help="transport-limit convergence table (CSV)")
    _common(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--kmin", type=int, default=4)
    p.add_argument("--kmax", type=int, default=8)
    p.add_argument("--scale", type=float, default=0.25, help="bump width")
    p.add_argument("--position", type=float, default=0.5, help="bump centre as a fraction of the ray at time t")

    p = sub.add_parser("detect", help="one search trial (trace NDJSON)")
    _common(p)
    p.add_argument("--algorithm", choices=["alg1", "alg2"], default="alg2")
    p.add_argument("--trial", type=int, default=0)

    p = sub.add_parser("bench", help="Monte-Carlo sweep grid (CSV + SVG)")
    _common(p)
    p.add_argument("--algorithms", default="alg1,alg2")
    p.add_argument("--kernels", default="config", help="comma list of p1..p4, 'all' for the four reference kernels, or 'config'")
    p.add_argument("--rs", help="comma list of r values (default: config r)")
    p.add_argument("--out-dir", default=".")

    p = sub.add_parser("oracle", help="Green's-function argmax report (JSON lines)")
    _common(p)
    p.add_argument("--kernels", default="all")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--half-width", type=int, default=20)
    return parser


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _config(args):
    keys = ("seed", "p1", "p2", "p3", "p4", "h", "injection_mean", "box", "c", "K", "r", "N0", "N1", "M")
    return load_config(args.config, {k: getattr(args, k, None) for k in keys})


def _kernels(choice: str, cfg):
    if choice == "config":
        k = cfg.kernel()
        return [(k.label(), k)]
    names = list(REFERENCE_KERNELS) if choice == "all" else [s.strip() for s in choice.split(",") if s.strip()]
    out = []
    for name in names:
        if name not in REFERENCE_KERNELS:
            raise UsageError(f"unknown kernel {name!r}; use p1..p4, 'all' or 'config'")
        out.append((name, make_kernel(*REFERENCE_KERNELS[name])))
    return out


def cmd_simulate(args, cfg):
    params = cfg.sim_params()
    sim = ParticleSim(cfg.kernel(), params, RngStream(cfg.seed, 0))
    sim.advance_to(args.n)
    with _output(args.out) as fh:
        write_ndjson(snapshot(sim.field), fh)


def cmd_field(args, cfg):
    kernel, params = cfg.kernel(), cfg.sim_params()
    if args.kind == "mu":
        rows = oracle.mu_recursion(kernel, params, args.n).snapshot(args.min_value)
    else:
        win = oracle.Window.centered(params.source, args.half_width)
        rows = oracle.green_function(kernel, params.source, args.tol, win).snapshot(args.min_value)
    with _output(args.out) as fh:
        write_ndjson(rows, fh, key=args.kind)


def cmd_hydro(args, cfg):
    kernel = cfg.kernel()
    q = kernel.q
    s = args.position * args.t
    f = hydro.gaussian_bump((q[0] * s, q[1] * s), args.scale)
    h_list = [10 * 2.0**-k for k in range(args.kmin, args.kmax + 1)]
    table = hydro.convergence_study(kernel, f, args.t, h_list, rate=cfg.injection_mean / cfg.h)
    if args.out:
        table.write_csv(args.out)
    else:
        table.write_csv("/dev/stdout")


def cmd_detect(args, cfg):
    kernel, params = cfg.kernel(), cfg.sim_params()
    sim = ParticleSim(kernel, params, RngStream(cfg.seed, 4 * args.trial))
    obs = RngStream(cfg.seed, 4 * args.trial + 1)
    ledger = MeasurementLedger(cfg.r**2)
    seed_site = find_seed_site(sim, obs)
    if args.algorithm == "alg1":
        trace = alg1_run(sim, cfg.alg1(), seed_site, ledger)
    else:
        trace = alg2_run(sim, cfg.alg2(), seed_site, ledger, obs)
    with _output(args.out) as fh:
        trace.write_ndjson(fh)
    ok = success_check(trace.converged_site, params.source)
    print(
        f"converged={trace.converged_site} success={ok} measurements={trace.measurements} "
        f"iterations={trace.iterations} budget_violations={ledger.budget_violations}",
        file=sys.stderr,
    )


def cmd_bench(args, cfg):
    algs = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    for a in algs:
        if a not in ("alg1", "alg2"):
            raise UsageError(f"unknown algorithm {a!r}")
    rs = [int(x) for x in args.rs.split(",")] if args.rs else [cfg.r]
    kernels = _kernels(args.kernels, cfg)
    params = cfg.sim_params()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summaries = []
    for alg in algs:
        for label, kernel in kernels:
            for r in rs:
                alg_cfg = cfg.alg1(r) if alg == "alg1" else cfg.alg2(r)
                s = bench.run_sweep(alg, kernel, r, cfg.M, cfg.seed, params, alg_cfg, label=label)
                summaries.append(s)
                print(
                    f"{alg} {label} r={r}: p_error={s.error_probability:.3f} "
                    f"mean_measurements={s.mean_measurements:.0f} rel_eff={s.relative_efficiency:.0f}",
                    file=sys.stderr,
                )
    bench.emit_csv(summaries, out / "bench.csv")
    for alg in algs:
        group = [s for s in summaries if s.algorithm == alg]
        for metric in ("p_error", "mean_measurements", "rel_efficiency"):
            bench.emit_svg_lines(group, metric, out / f"{alg}_{metric}.svg", title=f"{alg}: {metric} vs r")


def cmd_oracle(args, cfg):
    with _output(args.out) as fh:
        for label, kernel in _kernels(args.kernels, cfg):
            e = SiteIndex(0, 0)
            g = oracle.green_function(kernel, e, args.tol, oracle.Window.centered(e, args.half_width))
            am = g.argmax()
            row = {
                "kernel": label,
                "p": list(kernel.p),
                "g_source": g[e],
                "margin": g.margin(),
                "argmax": [am.i, am.j],
                "unique_max_at_source": am == e and g.margin() > 0,
                "horizon": g.truncation_horizon,
                "tail_bound": g.tail_bound,
            }
            fh.write(json.dumps(row) + "\n")


COMMANDS = {
    "simulate": cmd_simulate,
    "field": cmd_field,
    "hydro": cmd_hydro,
    "detect": cmd_detect,
    "bench": cmd_bench,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
        cfg = _config(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (LatticeError, RuntimeError, ValueError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
