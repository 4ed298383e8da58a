"""Efficiency at maximum work against beta_h/beta_c for N = 2 at two cold-bath temperatures.

Usage: python scripts/emw_curves.py [out_dir] [--starts S]
"""

import argparse
import sys

from fewbody_otto.cli import main

RATIOS = "0.05,0.08,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"


def run(out, starts):
    codes = []
    for beta_c in ("1", "10"):
        for stat in ("distinguishable", "bosons"):
            for free in ([], ["--free"]):
                codes.append(main(["--out", out, "emw", "--beta-c", beta_c, "--stat", stat,
                                   "--ratios", RATIOS, "--starts", str(starts), *free]))
    return max(codes)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", nargs="?", default="results/emw")
    ap.add_argument("--starts", type=int, default=8)
    a = ap.parse_args()
    sys.exit(run(a.out, a.starts))
