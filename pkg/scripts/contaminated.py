"""Contaminated-normal comparison of all five methods at t = 0.2 and 0.3."""

import argparse
from pathlib import Path

from run_plan import main as run_plan

HERE = Path(__file__).parent

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/contaminated")
    a = ap.parse_args()
    for t in (0.2, 0.3):
        run_plan([str(HERE / "plans/contaminated.txt"), "--t", str(t), "--reps", str(a.reps),
                  "--jobs", str(a.jobs), "--out", f"{a.out}/t{int(100 * t)}"])
