"""Empirical operating characteristics, control-quantile thresholds, ROC and AUC.

Every rule here classifies a subject as positive when ``score > delta``
(strict), so ties at the threshold count as negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset


@dataclass
class CombinationModel:
    """A linear rule ``theta @ x > delta`` produced by one of the fitting methods."""

    theta: np.ndarray
    delta: float
    method_tag: str
    converged: bool = True
    iterations: int = 0
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float).ravel()
        self.delta = float(self.delta)

    def scores(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.theta


def _scores(theta, X) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).ravel()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != theta.shape[0]:
        raise ValueError(f"theta has length {theta.shape[0]} but data have {X.shape[1]} columns")
    if X.shape[0] == 0:
        raise ValueError("empty marker matrix")
    return X @ theta


def empirical_tpr(theta, delta: float, cases) -> float:
    return float(np.mean(_scores(theta, cases) > delta))


def empirical_fpr(theta, delta: float, controls) -> float:
    return float(np.mean(_scores(theta, controls) > delta))


def _quantile_rank(n0: int, t: float) -> int:
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t}")
    # rounding absorbs binary representation error, e.g. (1 - 0.3) * 10
    return max(1, math.ceil(round((1.0 - t) * n0, 9)))


def quantile_threshold(control_scores, t: float) -> float:
    """The ceil((1 - t) n0)-th smallest control score."""
    s = np.asarray(control_scores, dtype=float).ravel()
    if s.size == 0:
        raise ValueError("no control scores")
    k = _quantile_rank(s.size, t)
    return float(np.partition(s, k - 1)[k - 1])


def threshold_for_fpr(theta, controls, t: float) -> float:
    """Threshold whose in-sample empirical FPR on ``controls`` is at most ``t``."""
    return quantile_threshold(_scores(theta, controls), t)


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray

    def __len__(self) -> int:
        return len(self.fpr)

    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def tpr_at(self, t: float) -> float:
        """Largest TPR among points with FPR <= t."""
        ok = self.fpr <= t + 1e-12
        return float(self.tpr[ok].max())


def roc_curve(case_scores, control_scores) -> RocCurve:
    s1 = np.sort(np.asarray(case_scores, dtype=float).ravel())
    s0 = np.sort(np.asarray(control_scores, dtype=float).ravel())
    if s1.size == 0 or s0.size == 0:
        raise ValueError("roc_curve needs nonempty case and control scores")
    cuts = np.unique(np.concatenate([s1, s0]))[::-1]
    tpr = (s1.size - np.searchsorted(s1, cuts, side="right")) / s1.size
    fpr = (s0.size - np.searchsorted(s0, cuts, side="right")) / s0.size
    thr = np.concatenate([[np.inf], cuts, [-np.inf]])
    fpr = np.concatenate([[0.0], fpr, [1.0]])
    tpr = np.concatenate([[0.0], tpr, [1.0]])
    # drop interior points that repeat their predecessor
    keep = np.ones(thr.size, bool)
    keep[1:-1] = (fpr[1:-1] != fpr[:-2]) | (tpr[1:-1] != tpr[:-2])
    return RocCurve(thr[keep], fpr[keep], tpr[keep])


def auc(curve: RocCurve) -> float:
    """Trapezoidal area; equals the Mann-Whitney statistic with ties counted 1/2."""
    dx = np.diff(curve.fpr)
    if (dx < 0).any() or (np.diff(curve.tpr) < 0).any():
        raise ValueError("ROC curve is not monotone")
    return float(np.sum(dx * (curve.tpr[1:] + curve.tpr[:-1])) / 2.0)


def mann_whitney_auc(case_scores, control_scores) -> float:
    """Pair-counting AUC; O(n1 n0) memory, intended as a check."""
    a = np.asarray(case_scores, dtype=float)[:, None]
    b = np.asarray(control_scores, dtype=float)[None, :]
    return float(((a > b).sum() + 0.5 * (a == b).sum()) / (a.size * b.size))


def tpr_at_test_fpr(theta, test: Dataset, t: float) -> float:
    """TPR on test cases at the threshold that puts test FPR at ``t``."""
    delta = threshold_for_fpr(theta, test.controls, t)
    return empirical_tpr(theta, delta, test.cases)
