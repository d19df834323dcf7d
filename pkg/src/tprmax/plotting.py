"""ROC figure with a vertical marker at the target FPR."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .roc import RocCurve  # noqa: E402


def plot_roc(
    curves: Sequence[RocCurve],
    labels: Sequence[str],
    t_marker: float,
    out_path,
    title: str | None = None,
) -> Path:
    """Write an SVG of ``curves`` with TPR-at-``t_marker`` callouts; returns the path."""
    if len(curves) == 0:
        raise ValueError("need at least one ROC curve")
    if len(labels) != len(curves):
        raise ValueError("one label per curve is required")
    if not 0.0 <= t_marker <= 1.0:
        raise ValueError(f"t_marker must lie in [0, 1], got {t_marker}")
    out_path = Path(out_path)
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    try:
        ax.plot([0, 1], [0, 1], color="0.6", lw=0.8, ls=":")
        ax.axvline(t_marker, color="0.3", lw=0.8)
        for curve, label in zip(curves, labels):
            (line,) = ax.plot(curve.fpr, curve.tpr, lw=1.4,
                              label=f"{label} ({100 * curve.tpr_at(t_marker):.1f}%)")
            y = curve.tpr_at(t_marker)
            ax.plot([0, t_marker], [y, y], color=line.get_color(), lw=0.8, ls="-.")
        ax.set(xlim=(0, 1), ylim=(0, 1.01), xlabel="False positive rate",
               ylabel="True positive rate", aspect="equal")
        if title:
            ax.set_title(title)
        ax.legend(loc="lower right", frameon=False)
        fig.tight_layout()
        fig.savefig(out_path, format="svg")
    finally:
        plt.close(fig)
    return out_path
