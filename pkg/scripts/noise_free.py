"""Run both searches on the exact expected field from every occupied seed site.

    python3 scripts/noise_free.py [kernel ...]
"""

import sys
from collections import Counter

from sourcedetect.lattice import REFERENCE_KERNELS, RngStream, SimParams, SiteIndex, make_kernel
from sourcedetect.oracle import ExpectedFieldSim
from sourcedetect.search import Alg1Config, Alg2Config, alg1_run, alg2_run
from sourcedetect.sensors import MeasurementLedger

names = sys.argv[1:] or list(REFERENCE_KERNELS)
for name in names:
    k = make_kernel(*REFERENCE_KERNELS[name])
    params = SimParams()
    base = ExpectedFieldSim(k, params)
    base.advance_to(30)
    sites, vals = base.occupied()
    for alg in ("alg1", "alg2"):
        ends = Counter()
        for s in sites[vals > 0]:
            sim = ExpectedFieldSim(k, params)
            sim.advance_to(30)
            seed = SiteIndex(int(s[0]), int(s[1]))
            if alg == "alg1":
                tr = alg1_run(sim, Alg1Config(r=18), seed, MeasurementLedger(0))
            else:
                tr = alg2_run(sim, Alg2Config(r=24), seed, MeasurementLedger(0), RngStream(0, 1))
            ends[tr.converged_site] += 1
        total = sum(ends.values())
        print(f"{name} {alg}: {ends[SiteIndex(0, 0)]}/{total} seeds reach the source; top ends {ends.most_common(4)}")
