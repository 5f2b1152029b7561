"""Headline sweeps: scanning window at r=18 and drift search at r=24 on the p2 kernel.

    python3 scripts/headline.py [M] [seed]
"""

import sys
import time

from sourcedetect.bench import run_sweep, write_trials
from sourcedetect.lattice import REFERENCE_KERNELS, SimParams, make_kernel
from sourcedetect.search import Alg1Config, Alg2Config

M = int(sys.argv[1]) if len(sys.argv) > 1 else 200
SEED = int(sys.argv[2]) if len(sys.argv) > 2 else 0

kernel = make_kernel(*REFERENCE_KERNELS["p2"])
for alg, cfg in (("alg1", Alg1Config(r=18)), ("alg2", Alg2Config(r=24))):
    t = time.perf_counter()
    s = run_sweep(alg, kernel, cfg.r, M, SEED, SimParams(), cfg, label="p2")
    stuck = sum(not t.converged for t in s.trials)
    print(
        f"{alg} r={cfg.r}: p_error={s.error_probability:.3f} mean_meas={s.mean_measurements:.0f} "
        f"success_meas={s.mean_measurements_success:.0f} non_converged={stuck} ({time.perf_counter() - t:.0f}s)"
    )
    write_trials(s.trials, f"trials_{alg}.csv")
