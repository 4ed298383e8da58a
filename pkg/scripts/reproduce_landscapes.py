"""eta/eta_O and W/W_O landscapes for N = 2, 3 (both statistics), written as CSV.

Usage: python scripts/reproduce_landscapes.py [out_dir] [--threads K] [--points P]
"""

import argparse
import sys

from fewbody_otto.cli import main


def run(out, threads, points):
    codes = []
    for n in (2, 3):
        for stat in ("bosons", "distinguishable"):
            codes.append(main(["--out", out, "--threads", str(threads), "heatmap", "--n", str(n),
                               "--stat", stat, "--points", str(points)]))
    return max(codes)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", nargs="?", default="results/landscapes")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--points", type=int, default=60)
    a = ap.parse_args()
    sys.exit(run(a.out, a.threads, a.points))
