"""Finite-time cycle sweep over tau for the three protocols (optimal, scale-invariant, free).

Runs at the hot-bath temperature 1/omega_f by default; pass --beta-h 1 for 1/omega_i.
Usage: python scripts/finite_time_sweep.py [out_dir] [--threads K] [--beta-h B]
"""

import argparse
import sys

from fewbody_otto.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", nargs="?", default="results/finite_time")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--beta-h", type=float, default=None)
    ap.add_argument("--tau-points", type=int, default=30)
    a = ap.parse_args()
    argv = ["--out", a.out, "--threads", str(a.threads), "finite-time", "--tau-points", str(a.tau_points)]
    if a.beta_h is not None:
        argv += ["--beta-h", str(a.beta_h)]
    sys.exit(main(argv))
