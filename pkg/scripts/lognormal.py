"""Lognormal design with a noise marker (GLM, robust GLM, sTPR) at t = 0.3."""

import argparse
from pathlib import Path

from run_plan import main as run_plan

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--t", type=float, default=0.3)
    ap.add_argument("--out", default="results/lognormal")
    a = ap.parse_args()
    run_plan([str(Path(__file__).parent / "plans/lognormal.txt"), "--t", str(a.t),
              "--reps", str(a.reps), "--jobs", str(a.jobs), "--out", a.out])
