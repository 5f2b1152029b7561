"""Pairing error of the lattice field against the line measure, for several bump widths.

    python3 scripts/convergence.py
"""

from sourcedetect.hydro import convergence_study, gaussian_bump
from sourcedetect.lattice import REFERENCE_KERNELS, make_kernel

kernel = make_kernel(*REFERENCE_KERNELS["p2"])
q = kernel.q
hs = [10 * 2.0**-k for k in range(4, 10)]
for scale in (0.1, 0.2, 0.4):
    table = convergence_study(kernel, gaussian_bump((q[0] / 2, q[1] / 2), scale), 1.0, hs, rate=640.0)
    rel = [e / abs(table.limit) for e in table.errors]
    print(f"scale {scale}: limit {table.limit:.4g} slope {table.slope:.2f} rel errors " + " ".join(f"{x:.3g}" for x in rel))
