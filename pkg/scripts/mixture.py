"""Normal-mixture cells: links f1/f2, beta0 in {0, -3}, with and without outliers."""

import argparse
import itertools
from pathlib import Path

from tprmax.harness import ExperimentPlan, emit_table, render_markdown, run_experiment
from tprmax.simgen import ScenarioSpec

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--n", type=int, nargs="+", default=[800])
    ap.add_argument("--t", type=float, nargs="+", default=[0.1])
    ap.add_argument("--links", nargs="+", default=["f1"])
    ap.add_argument("--beta0", type=float, nargs="+", default=[0.0])
    ap.add_argument("--out", default="results/mixture")
    a = ap.parse_args()
    for link, b0, n, t, out in itertools.product(a.links, a.beta0, a.n, a.t, (True, False)):
        scen = ScenarioSpec("normal-mixture", n=n, link=link, beta0=b0, outliers=out)
        plan = ExperimentPlan(scen, ("glm", "rglm", "stpr"), t, a.reps, n_jobs=a.jobs)
        table = run_experiment(plan)
        tag = f"{link}_b{b0:g}_n{n}_t{int(100 * t)}_{'out' if out else 'clean'}"
        print(f"\n### {tag}\n")
        print(render_markdown(table))
        d = Path(a.out)
        d.mkdir(parents=True, exist_ok=True)
        emit_table(table, "markdown", d / f"{tag}.md")
        emit_table(table, "csv", d / f"{tag}.csv")
