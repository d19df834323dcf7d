"""Monte-Carlo experiments, result tables, and the diabetes-data workflow."""

from __future__ import annotations

import configparser
import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .baselines import fit_logistic, fit_robust_logistic, fit_su_liu, grid_search
from .data import Dataset, SplitSpec, apply_scaling, fit_scaling, load_csv, split
from .roc import CombinationModel, empirical_fpr, threshold_for_fpr
from .simgen import ScenarioSpec, derive_replication_seed
from .solver import SolverConfig, evaluate_fit, fit_stpr, initialize

log = logging.getLogger(__name__)

METHODS = ("glm", "rglm", "grid", "suliu", "stpr")
METHOD_LABELS = {
    "glm": "GLM",
    "rglm": "rGLM",
    "grid": "Grid Search",
    "suliu": "Su & Liu",
    "stpr": "sTPR",
}
MAX_ABORT_FRACTION = 0.2


@dataclass(frozen=True)
class ExperimentPlan:
    scenario: ScenarioSpec
    methods: tuple[str, ...] = METHODS
    t: float = 0.2
    replications: int = 200
    test_size: int = 100_000
    base_seed: int = 2019
    bandwidth_exponent: float = -0.5
    output_dir: str | None = None
    n_jobs: int = 1

    def __post_init__(self):
        methods = tuple(self.methods)
        if not methods:
            raise ValueError("method set is empty")
        unknown = set(methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        object.__setattr__(self, "methods", methods)
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 0.0 < self.t < 1.0:
            raise ValueError(f"t must lie in (0, 1), got {self.t}")
        if self.test_size < 2:
            raise ValueError("test_size too small")


@dataclass
class MethodOutcome:
    tpr: float
    fpr: float
    train_fpr: float
    converged: bool
    fallback: bool = False


@dataclass
class Replication:
    index: int
    outcomes: dict[str, MethodOutcome] = field(default_factory=dict)
    error: str | None = None


@dataclass
class MethodSummary:
    """Percentages, as in the published tables."""

    method: str
    tpr_mean: float
    tpr_sd: float
    fpr_mean: float
    fpr_sd: float
    convergence_rate: float
    replications: int
    train_fpr_max: float = float("nan")


@dataclass
class ResultTable:
    rows: dict[str, MethodSummary]
    t: float
    scenario: dict = field(default_factory=dict)
    aborted: int = 0
    replications: list[Replication] = field(default_factory=list, repr=False)

    def __getitem__(self, method: str) -> MethodSummary:
        return self.rows[method]

    def raw(self, method: str, what: str = "tpr") -> np.ndarray:
        return np.array(
            [getattr(r.outcomes[method], what) for r in self.replications if r.error is None]
        )


def fit_method(method: str, train: Dataset, t: float, bandwidth_exponent: float = -0.5):
    """Fit one named method; returns ``(model, converged, fallback)``."""
    if method == "glm":
        m = fit_logistic(train)
        return m, m.converged, False
    if method == "rglm":
        m = fit_robust_logistic(train)
        return m, m.converged, bool(m.notes.get("fallback"))
    if method == "suliu":
        return fit_su_liu(train), True, False
    if method == "grid":
        return grid_search(train, t), True, False
    if method == "stpr":
        m, diag = fit_stpr(train, SolverConfig(t=t, bandwidth_exponent=bandwidth_exponent))
        if diag.fallback:
            log.info("sTPR fallback to initializer (%s)", diag.message)
        return m, diag.converged, diag.fallback
    raise ValueError(f"unknown method {method!r}")


def run_replication(plan: ExperimentPlan, index: int) -> Replication:
    """Generate one train/test pair, fit every method, evaluate with one shared protocol."""
    rep = Replication(index)
    train_seed, test_seed = derive_replication_seed(plan.base_seed, index).spawn(2)
    try:
        train = plan.scenario.generate(train_seed).data
        test = plan.scenario.generate_test(plan.test_size, test_seed).data
        for method in plan.methods:
            model, ok, fb = fit_method(method, train, plan.t, plan.bandwidth_exponent)
            tpr, fpr = evaluate_fit(model, train, test, plan.t)
            d_train = threshold_for_fpr(model.theta, train.controls, plan.t)
            train_fpr = empirical_fpr(model.theta, d_train, train.controls)
            rep.outcomes[method] = MethodOutcome(tpr, fpr, train_fpr, bool(ok), fb)
    except Exception as exc:  # noqa: BLE001 - any failure aborts just this replication
        log.warning("replication %d aborted: %s: %s", index, type(exc).__name__, exc)
        rep.outcomes.clear()
        rep.error = f"{type(exc).__name__}: {exc}"
    return rep


def _sd(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1)) if x.size > 1 else 0.0


def summarize(plan: ExperimentPlan, reps: Sequence[Replication]) -> ResultTable:
    reps = sorted(reps, key=lambda r: r.index)
    good = [r for r in reps if r.error is None]
    aborted = len(reps) - len(good)
    if aborted > MAX_ABORT_FRACTION * len(reps):
        raise RuntimeError(
            f"{aborted} of {len(reps)} replications aborted; first error: "
            f"{next(r.error for r in reps if r.error)}"
        )
    rows = {}
    for m in plan.methods:
        tpr = 100.0 * np.array([r.outcomes[m].tpr for r in good])
        fpr = 100.0 * np.array([r.outcomes[m].fpr for r in good])
        tr_fpr = 100.0 * np.array([r.outcomes[m].train_fpr for r in good])
        conv = np.array([r.outcomes[m].converged for r in good], dtype=float)
        rows[m] = MethodSummary(
            m, float(tpr.mean()), _sd(tpr), float(fpr.mean()), _sd(fpr),
            float(conv.mean()), len(good), float(tr_fpr.max()),
        )
    return ResultTable(rows, plan.t, plan.scenario.to_dict(), aborted, list(reps))


def _run_one(args):
    plan, i = args
    return run_replication(plan, i)


def run_experiment(
    plan: ExperimentPlan,
    schedule: Sequence[int] | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> ResultTable:
    """Run every replication of ``plan`` and aggregate by replication index.

    ``schedule`` optionally fixes the execution order; results do not
    depend on it, nor on ``plan.n_jobs``.
    """
    order = list(range(plan.replications)) if schedule is None else list(schedule)
    if sorted(order) != list(range(plan.replications)):
        raise ValueError("schedule must be a permutation of the replication indices")
    reps: list[Replication] = []
    if plan.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=plan.n_jobs) as pool:
            for k, rep in enumerate(pool.map(_run_one, [(plan, i) for i in order])):
                reps.append(rep)
                if progress:
                    progress(k + 1, len(order))
    else:
        for k, i in enumerate(order):
            reps.append(run_replication(plan, i))
            if progress:
                progress(k + 1, len(order))
    table = summarize(plan, reps)
    if plan.output_dir:
        out = Path(plan.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        emit_table(table, "markdown", out / "table.md")
        emit_table(table, "csv", out / "table.csv")
    return table


# --- tables -------------------------------------------------------------------


def _cell(mean: float, sd: float) -> str:
    return f"{mean:.1f} ({sd:.1f})"


def render_markdown(table: ResultTable) -> str:
    methods = list(table.rows)
    head = "| Measure | " + " | ".join(METHOD_LABELS.get(m, m) for m in methods) + " |"
    sep = "|---|" + "---|" * len(methods)
    lines = [f"t = {table.t:.2f}", "", head, sep]
    lines.append("| TPR | " + " | ".join(_cell(table[m].tpr_mean, table[m].tpr_sd) for m in methods) + " |")
    lines.append("| FPR | " + " | ".join(_cell(table[m].fpr_mean, table[m].fpr_sd) for m in methods) + " |")
    lines.append(
        "| Converged | " + " | ".join(f"{100 * table[m].convergence_rate:.1f}%" for m in methods) + " |"
    )
    n = next(iter(table.rows.values())).replications
    lines += ["", f"Replications: {n} (aborted: {table.aborted}). All numbers are percentages."]
    return "\n".join(lines) + "\n"


CSV_FIELDS = (
    "method", "tpr_mean", "tpr_sd", "fpr_mean", "fpr_sd",
    "convergence_rate", "replications", "train_fpr_max",
)


def emit_table(table: ResultTable, fmt: str, out_path) -> Path:
    """Write ``table`` as ``markdown`` (one decimal, "mean (sd)") or ``csv`` (full precision)."""
    out_path = Path(out_path)
    if fmt == "markdown":
        out_path.write_text(render_markdown(table))
    elif fmt == "csv":
        with out_path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", repr(table.t)])
            w.writerow(CSV_FIELDS)
            for row in table.rows.values():
                w.writerow([repr(getattr(row, k)) if k != "method" else row.method for k in CSV_FIELDS])
    else:
        raise ValueError(f"unknown table format {fmt!r}")
    return out_path


def read_table_csv(path) -> ResultTable:
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        t = float(next(r)[1])
        header = next(r)
        rows = {}
        for rec in r:
            d = dict(zip(header, rec))
            rows[d["method"]] = MethodSummary(
                d["method"], *(float(d[k]) for k in CSV_FIELDS[1:6]),
                int(d["replications"]), float(d["train_fpr_max"]),
            )
    return ResultTable(rows, t)


# --- plan files -----------------------------------------------------------------

_SCENARIO_INT = ("n_typical", "n_contam", "n_cases", "n_controls", "n")


def parse_plan(text: str, **overrides) -> ExperimentPlan:
    """Read a flat ``key = value`` plan; keyword ``overrides`` that are not None win."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.read_string("[plan]\n" + text)
    kv = dict(cp["plan"])
    kv.update({k: str(v) for k, v in overrides.items() if v is not None})
    scen = {"family": kv.pop("family", "contaminated-normal")}
    for k in _SCENARIO_INT:
        if k in kv:
            scen[k] = int(kv.pop(k))
    if "link" in kv:
        scen["link"] = kv.pop("link")
    if "beta0" in kv:
        scen["beta0"] = float(kv.pop("beta0"))
    if "outliers" in kv:
        scen["outliers"] = kv.pop("outliers").strip().lower() in ("1", "true", "yes", "on")
    plan = {}
    if "methods" in kv:
        plan["methods"] = tuple(m.strip() for m in kv.pop("methods").split(",") if m.strip())
    conv = {
        "t": float, "replications": int, "reps": int, "test_size": int, "seed": int,
        "base_seed": int, "bandwidth_exponent": float, "out": str, "output_dir": str, "n_jobs": int,
    }
    alias = {"reps": "replications", "seed": "base_seed", "out": "output_dir"}
    for k in list(kv):
        if k in conv:
            plan[alias.get(k, k)] = conv[k](kv.pop(k))
    if kv:
        raise ValueError(f"unknown plan keys: {sorted(kv)}")
    return ExperimentPlan(ScenarioSpec(**scen), **plan)


def format_plan(plan: ExperimentPlan) -> str:
    lines = [f"{k} = {v}" for k, v in plan.scenario.to_dict().items()]
    lines += [
        f"methods = {','.join(plan.methods)}",
        f"t = {plan.t}",
        f"replications = {plan.replications}",
        f"test_size = {plan.test_size}",
        f"seed = {plan.base_seed}",
        f"bandwidth_exponent = {plan.bandwidth_exponent}",
    ]
    if plan.output_dir:
        lines.append(f"out = {plan.output_dir}")
    return "\n".join(lines) + "\n"


# --- diabetes workflow ------------------------------------------------------------


@dataclass
class PimaReport:
    marker_names: tuple[str, ...]
    coefficients: dict[str, np.ndarray]
    tpr_test: dict[str, float]
    fpr_test: dict[str, float]
    t: float
    n_train: tuple[int, int]
    n_test: tuple[int, int]
    diagnostics: dict = field(default_factory=dict)

    def render(self) -> str:
        methods = list(self.coefficients)
        lines = [
            f"Training: {sum(self.n_train)} rows ({self.n_train[0]} cases); "
            f"test: {sum(self.n_test)} rows ({self.n_test[0]} cases); t = {self.t:.2f}",
            "",
            "| Predictor | " + " | ".join(METHOD_LABELS[m] for m in methods) + " |",
            "|---|" + "---:|" * len(methods),
        ]
        for k, name in enumerate(self.marker_names):
            lines.append(
                f"| {name} | " + " | ".join(f"{self.coefficients[m][k]:.3f}" for m in methods) + " |"
            )
        lines += [
            "",
            "| Measure | " + " | ".join(METHOD_LABELS[m] for m in methods) + " |",
            "|---|" + "---:|" * len(methods),
            "| Test TPR at test FPR = t | "
            + " | ".join(f"{100 * self.tpr_test[m]:.1f}" for m in methods) + " |",
            "| Test FPR at training threshold | "
            + " | ".join(f"{100 * self.fpr_test[m]:.1f}" for m in methods) + " |",
        ]
        if self.diagnostics:
            d = self.diagnostics
            lines += ["", f"sTPR: converged={d.get('converged')}, iterations={d.get('iterations')}, "
                          f"h={d.get('h', float('nan')):.4g}, alpha={d.get('alpha', float('nan')):.4g}"]
        return "\n".join(lines) + "\n"


def run_pima(
    data_csv,
    split_file,
    t: float = 0.1,
    label_column: str = "type",
    positive_label: str = "Yes",
    methods: Sequence[str] = ("glm", "rglm", "stpr"),
    bandwidth_exponent: float = -0.5,
) -> PimaReport:
    """Scale with training SDs, fit each method on training rows, evaluate on the rest."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t}")
    data = load_csv(data_csv, label_column, positive_label)
    train, test = split(data, SplitSpec.read(split_file))
    transform = fit_scaling(train)
    train_s, test_s = apply_scaling(train, transform), apply_scaling(test, transform)
    coefs, tprs, fprs, diag = {}, {}, {}, {}
    for m in methods:
        if m == "stpr":
            model, d = fit_stpr(train_s, SolverConfig(t=t, bandwidth_exponent=bandwidth_exponent))
            diag = {"converged": d.converged, "iterations": d.iterations, "h": d.h,
                    "alpha": d.alpha, "fallback": d.fallback}
        else:
            model, _, _ = fit_method(m, train_s, t, bandwidth_exponent)
        coefs[m] = model.theta
        tprs[m], fprs[m] = evaluate_fit(model, train_s, test_s, t)
    return PimaReport(
        data.marker_names, coefs, tprs, fprs, t, (train.n1, train.n0), (test.n1, test.n0), diag
    )
