"""Command-line entry point: ``tprmax {fit,eval,simulate,pima,roc-plot}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .data import load_csv
from .harness import (
    METHODS,
    fit_method,
    parse_plan,
    render_markdown,
    run_experiment,
    run_pima,
)
from .modelio import format_model, load_model, save_model
from .roc import empirical_fpr, roc_curve, threshold_for_fpr, tpr_at_test_fpr


def _methods(text: str) -> tuple[str, ...]:
    ms = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in ms if m not in METHODS]
    if bad or not ms:
        raise argparse.ArgumentTypeError(f"methods must be a comma list from {','.join(METHODS)}")
    return ms


def _rate(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("must lie strictly between 0 and 1")
    return v


def _data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--label", default="label", help="label column name (default: label)")
    p.add_argument("--positive", default="1", help="label token for cases (default: 1)")


def cmd_fit(a) -> int:
    data = load_csv(a.data, a.label, a.positive)
    model, _, _ = fit_method(a.method, data, a.t, a.bandwidth_exponent)
    if a.out:
        save_model(model, a.out, data.marker_names)
        print(f"wrote {a.out}")
    else:
        sys.stdout.write(format_model(model, data.marker_names))
    return 0


def cmd_eval(a) -> int:
    model, _ = load_model(a.model)
    test = load_csv(a.data, a.label, a.positive)
    tpr = tpr_at_test_fpr(model.theta, test, a.t)
    if a.train:
        train = load_csv(a.train, a.label, a.positive)
        delta, source = threshold_for_fpr(model.theta, train.controls, a.t), "training"
    else:
        delta, source = model.delta, "model"
    fpr = empirical_fpr(model.theta, delta, test.controls)
    print(f"method: {model.method_tag}")
    print(f"test TPR at test FPR {a.t:g}: {tpr:.4f}")
    print(f"test FPR at {source} threshold {delta:.6g}: {fpr:.4f}")
    return 0


def cmd_simulate(a) -> int:
    text = Path(a.plan).read_text()
    plan = parse_plan(
        text, t=a.t, replications=a.reps, base_seed=a.seed, test_size=a.test_size,
        output_dir=a.out, bandwidth_exponent=a.bandwidth_exponent, n_jobs=a.jobs,
        methods=",".join(a.methods) if a.methods else None,
    )

    def progress(k, n):
        if a.verbose and (k == n or k % max(1, n // 10) == 0):
            print(f"  {k}/{n} replications", file=sys.stderr)

    table = run_experiment(plan, progress=progress)
    sys.stdout.write(render_markdown(table))
    return 0


def cmd_pima(a) -> int:
    report = run_pima(
        a.data, a.split, a.t, a.label, a.positive,
        methods=a.methods or ("glm", "rglm", "stpr"),
        bandwidth_exponent=a.bandwidth_exponent,
    )
    text = report.render()
    if a.out:
        Path(a.out).write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_roc_plot(a) -> int:
    from .plotting import plot_roc

    data = load_csv(a.data, a.label, a.positive)
    curves, labels = [], []
    for path in a.models:
        model, _ = load_model(path)
        curves.append(roc_curve(model.scores(data.cases), model.scores(data.controls)))
        labels.append(model.method_tag)
    if a.labels:
        if len(a.labels) != len(curves):
            raise SystemExit("--labels needs one entry per model")
        labels = a.labels
    plot_roc(curves, labels, a.t, a.out)
    for c, lab in zip(curves, labels):
        print(f"{lab}: TPR at FPR {a.t:g} = {c.tpr_at(a.t):.4f}")
    print(f"wrote {a.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tprmax", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one combination method to a labeled CSV")
    p.add_argument("data")
    _data_args(p)
    p.add_argument("--method", choices=METHODS, default="stpr")
    p.add_argument("--t", type=_rate, default=0.2)
    p.add_argument("--bandwidth-exponent", type=float, default=-0.5)
    p.add_argument("--out", help="model file (default: stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="test TPR/FPR of a saved model")
    p.add_argument("model")
    p.add_argument("data", help="test CSV")
    _data_args(p)
    p.add_argument("--train", help="training CSV; re-estimate the threshold from its controls")
    p.add_argument("--t", type=_rate, default=0.2)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="run a Monte-Carlo plan file")
    p.add_argument("plan")
    p.add_argument("--t", type=_rate)
    p.add_argument("--seed", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--methods", type=_methods)
    p.add_argument("--test-size", type=int)
    p.add_argument("--bandwidth-exponent", type=float)
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--out", help="directory for table.md and table.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pima", help="diabetes-data workflow")
    p.add_argument("data")
    p.add_argument("split", help="file of zero-based training row indices")
    p.add_argument("--label", default="type")
    p.add_argument("--positive", default="Yes")
    p.add_argument("--t", type=_rate, default=0.1)
    p.add_argument("--methods", type=_methods)
    p.add_argument("--bandwidth-exponent", type=float, default=-0.5)
    p.add_argument("--out", help="write the report here as well")
    p.set_defaults(func=cmd_pima)

    p = sub.add_parser("roc-plot", help="ROC curves of saved models on a dataset, as SVG")
    p.add_argument("data")
    p.add_argument("models", nargs="+")
    _data_args(p)
    p.add_argument("--labels", nargs="+")
    p.add_argument("--t", type=_rate, default=0.2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_roc_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
