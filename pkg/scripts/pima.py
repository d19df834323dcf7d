"""Diabetes data: coefficient table and test operating characteristics at t = 0.1."""

import argparse
from pathlib import Path

from tprmax.harness import run_pima

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", default=str(ROOT / "data/pima.csv"))
    ap.add_argument("--split", default=str(ROOT / "data/pima_split.txt"))
    ap.add_argument("--t", type=float, default=0.1)
    ap.add_argument("--out", default="results/pima.md")
    a = ap.parse_args()
    text = run_pima(a.data, a.split, a.t).render()
    Path(a.out).parent.mkdir(parents=True, exist_ok=True)
    Path(a.out).write_text(text)
    print(text)
