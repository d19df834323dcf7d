"""Run a plan file and write table.md / table.csv; thin wrapper over the harness."""

import argparse
import logging
import sys
import time

from tprmax.harness import parse_plan, render_markdown, run_experiment


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("plan")
    ap.add_argument("--reps", type=int)
    ap.add_argument("--t", type=float)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--test-size", type=int)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out")
    a = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING)
    with open(a.plan) as fh:
        plan = parse_plan(fh.read(), replications=a.reps, t=a.t, base_seed=a.seed,
                          test_size=a.test_size, n_jobs=a.jobs, output_dir=a.out)
    t0 = time.perf_counter()
    table = run_experiment(plan)
    sys.stdout.write(render_markdown(table))
    print(f"\n{time.perf_counter() - t0:.1f} s", file=sys.stderr)


if __name__ == "__main__":
    main()
