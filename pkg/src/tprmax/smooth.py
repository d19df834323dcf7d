"""Normal-CDF smoothing of the empirical TPR and FPR, with analytic gradients.

The indicator ``1(s > delta)`` is replaced by ``Phi((s - delta) / h)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .data import Dataset

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def norm_pdf(z):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


@dataclass(frozen=True)
class SmoothParams:
    h: float
    alpha: float = 0.0

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"bandwidth must be positive, got {self.h}")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")


def _standardized(theta, delta, X, h):
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    theta = np.asarray(theta, dtype=float).ravel()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != theta.shape[0]:
        raise ValueError(f"theta has length {theta.shape[0]} but data have {X.shape[1]} columns")
    return (X @ theta - delta) / h, X


def smooth_rate(theta, delta: float, X, h: float) -> float:
    z, _ = _standardized(theta, delta, X, h)
    return float(np.mean(ndtr(z)))


def smooth_rate_gradient(theta, delta: float, X, h: float) -> tuple[np.ndarray, float]:
    """Gradient of :func:`smooth_rate` with respect to ``(theta, delta)``."""
    z, X = _standardized(theta, delta, X, h)
    w = norm_pdf(z) / (h * X.shape[0])
    return X.T @ w, -float(w.sum())


def smooth_rate_hessian(theta, delta: float, X, h: float) -> np.ndarray:
    """Hessian of :func:`smooth_rate` over ``(theta, delta)``, shape ``(p + 1, p + 1)``."""
    z, X = _standardized(theta, delta, X, h)
    w = -z * norm_pdf(z) / (h * h * X.shape[0])
    U = np.column_stack([X, -np.ones(X.shape[0])])
    return (U * w[:, None]).T @ U


def smooth_tpr(theta, delta, cases, h) -> float:
    return smooth_rate(theta, delta, cases, h)


def smooth_fpr(theta, delta, controls, h) -> float:
    return smooth_rate(theta, delta, controls, h)


def smooth_tpr_gradient(theta, delta, cases, h):
    return smooth_rate_gradient(theta, delta, cases, h)


def smooth_fpr_gradient(theta, delta, controls, h):
    return smooth_rate_gradient(theta, delta, controls, h)


def select_bandwidth(theta_init, data: Dataset, exponent: float = -0.5) -> float:
    """``h = sd(theta_init @ X) * n ** exponent`` over the pooled sample."""
    s = data.pooled() @ np.asarray(theta_init, dtype=float).ravel()
    sd = float(np.std(s, ddof=1)) if s.size > 1 else 0.0
    if not sd > 0:
        raise ValueError("combination scores have zero variance; bandwidth undefined")
    return sd * data.n**exponent


def select_alpha(n0: int) -> float:
    if n0 < 1:
        raise ValueError("n0 must be at least 1")
    return 1.0 / (2.0 * n0)
