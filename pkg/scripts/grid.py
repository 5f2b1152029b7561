"""Full grid: both algorithms, four kernels, r in {12, 18, 24}; writes CSV and SVG.

    python3 scripts/grid.py [M] [seed] [out_dir]
"""

import sys

from sourcedetect.cli import main

M = sys.argv[1] if len(sys.argv) > 1 else "200"
SEED = sys.argv[2] if len(sys.argv) > 2 else "0"
OUT = sys.argv[3] if len(sys.argv) > 3 else "grid_out"

sys.exit(main(["bench", "--m", M, "--seed", SEED, "--kernels", "all", "--rs", "12,18,24", "--out-dir", OUT]))
