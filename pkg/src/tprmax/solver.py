"""Maximize the smoothed empirical TPR subject to a smoothed FPR ceiling.

The problem over ``x = (theta, delta)`` is::

    maximize   smooth_tpr(theta, delta)
    subject to |theta|^2 - 1 = 0
               smooth_fpr(theta, delta) - (t + alpha) <= 0

and is solved with an augmented Lagrangian: each outer iteration minimizes
the augmented function with L-BFGS, then updates the multipliers and grows
the penalty when the constraint violation stalls. Near a solution a few
Newton steps on the KKT system (exact Hessians) bring the first-order
residual down to the requested tolerance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq, minimize

from .baselines import fit_robust_logistic
from .data import Dataset
from .roc import CombinationModel, empirical_fpr, threshold_for_fpr, tpr_at_test_fpr
from .smooth import (
    select_alpha,
    select_bandwidth,
    smooth_rate,
    smooth_rate_gradient,
    smooth_rate_hessian,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    t: float = 0.2
    bandwidth_exponent: float = -0.5
    alpha_override: float | None = None
    max_iterations: int = 500
    constraint_tolerance: float = 1e-8
    objective_tolerance: float = 1e-8
    penalty_growth: float = 10.0
    initial_penalty: float = 10.0
    max_outer: int = 30

    def __post_init__(self):
        if not 0.0 < self.t < 1.0:
            raise ValueError(f"t must lie in (0, 1), got {self.t}")
        if self.constraint_tolerance <= 0 or self.objective_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.alpha_override is not None and self.alpha_override < 0:
            raise ValueError("alpha must be nonnegative")
        if self.penalty_growth <= 1.0:
            raise ValueError("penalty_growth must exceed 1")
        if self.max_iterations < 1 or self.max_outer < 1:
            raise ValueError("iteration limits must be positive")


@dataclass
class FitDiagnostics:
    converged: bool
    iterations: int
    smooth_tpr: float
    smooth_fpr: float
    initializer: str
    fallback: bool
    h: float
    alpha: float
    kkt_residual: float = float("nan")
    message: str = ""


class StartPoint(NamedTuple):
    theta: np.ndarray
    delta: float
    h: float
    initializer: str


def solve_delta(theta, controls, h: float, level: float, xtol: float = 1e-12) -> float:
    """Root in ``delta`` of ``smooth_fpr(theta, delta) = level``."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    s = controls @ theta
    lo, hi = s.min() - 6.0 * h, s.max() + 6.0 * h

    def g(d):
        return smooth_rate(theta, d, controls, h) - level

    while g(lo) < 0:
        lo -= 6.0 * h
    while g(hi) > 0:
        hi += 6.0 * h
    return float(brentq(g, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500))


def initialize(
    train: Dataset,
    t: float,
    bandwidth_exponent: float = -0.5,
    initial: CombinationModel | None = None,
) -> StartPoint:
    """Normalized robust-logistic direction and the delta putting smooth FPR at ``t``.

    The bandwidth is fixed here from the starting direction and reused for
    the whole solve.
    """
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t}")
    if initial is None:
        initial = fit_robust_logistic(train)
        source = "glm" if initial.notes.get("fallback") else "rglm"
    else:
        source = initial.method_tag
    theta = np.asarray(initial.theta, dtype=float)
    norm = np.linalg.norm(theta)
    if not norm > 0:
        raise ValueError("initial direction is the zero vector")
    theta = theta / norm
    h = select_bandwidth(theta, train, bandwidth_exponent)
    delta = solve_delta(theta, train.controls, h, t)
    return StartPoint(theta, delta, h, source)


class _Problem:
    """Objective, constraints and their derivatives on ``x = (theta, delta)``."""

    def __init__(self, train: Dataset, h: float, cap: float):
        self.X1, self.X0 = train.cases, train.controls
        self.p = train.p
        self.h, self.cap = h, cap

    def split(self, x):
        return x[: self.p], x[self.p]

    def tpr(self, x):
        th, d = self.split(x)
        gt, gd = smooth_rate_gradient(th, d, self.X1, self.h)
        return smooth_rate(th, d, self.X1, self.h), np.append(gt, gd)

    def fpr(self, x):
        th, d = self.split(x)
        gt, gd = smooth_rate_gradient(th, d, self.X0, self.h)
        return smooth_rate(th, d, self.X0, self.h), np.append(gt, gd)

    def norm_eq(self, x):
        th, _ = self.split(x)
        return float(th @ th - 1.0), np.append(2.0 * th, 0.0)

    def hessians(self, x):
        th, d = self.split(x)
        He = np.zeros((self.p + 1, self.p + 1))
        He[: self.p, : self.p] = 2.0 * np.eye(self.p)
        return (
            smooth_rate_hessian(th, d, self.X1, self.h),
            smooth_rate_hessian(th, d, self.X0, self.h),
            He,
        )

    def kkt(self, x, tol: float):
        """First-order residual using least-squares multipliers at ``x``.

        Returns ``(residual, tpr, fpr, lam, nu)``.
        """
        tpr, gt = self.tpr(x)
        fpr, gf = self.fpr(x)
        ceq, ge = self.norm_eq(x)
        cin = fpr - self.cap
        lam, nu = float(np.linalg.lstsq(ge[:, None], gt, rcond=None)[0][0]), 0.0
        if cin > -np.sqrt(tol):
            m = np.linalg.lstsq(np.column_stack([ge, gf]), gt, rcond=None)[0]
            if m[1] >= 0:
                lam, nu = float(m[0]), float(m[1])
        stat = float(np.max(np.abs(-gt + lam * ge + nu * gf)))
        return max(stat, abs(ceq), max(cin, 0.0), abs(nu * cin)), tpr, fpr, lam, nu


def _newton_polish(prob: _Problem, x, tol: float, max_steps: int = 20):
    """Newton steps on the KKT system with the FPR constraint active.

    Returns the point with the smallest residual seen (possibly ``x``).
    """
    best, _, _, lam, nu = prob.kkt(x, tol)
    best_x = x
    if nu <= 0:
        return best_x, best
    k = x.size
    for _ in range(max_steps):
        _, gt = prob.tpr(x)
        fpr, gf = prob.fpr(x)
        ceq, ge = prob.norm_eq(x)
        Ht, Hf, He = prob.hessians(x)
        W = -Ht + lam * He + nu * Hf
        J = np.vstack([ge, gf])
        K = np.block([[W, J.T], [J, np.zeros((2, 2))]])
        rhs = -np.concatenate([-gt + lam * ge + nu * gf, [ceq, fpr - prob.cap]])
        try:
            step = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        x = x + step[:k]
        lam, nu = lam + step[k], nu + step[k + 1]
        res = prob.kkt(x, tol)[0]
        if res < best:
            best_x, best = x, res
        if nu < 0 or res <= 1e-3 * tol:
            break
    return best_x, best


def fit_stpr(
    train: Dataset, config: SolverConfig | None = None, start: StartPoint | None = None
) -> tuple[CombinationModel, FitDiagnostics]:
    """Near-maximizer of the smoothed TPR over the relaxed smoothed-FPR set.

    On success theta is renormalized and delta re-solved so the smoothed
    FPR equals ``t + alpha``. On nonconvergence, or if the solve ends below
    the starting objective, the starting point is returned with ``fallback``
    set.
    """
    config = config or SolverConfig()
    if start is None:
        start = initialize(train, config.t, config.bandwidth_exponent)
    h = start.h
    alpha = select_alpha(train.n0) if config.alpha_override is None else config.alpha_override
    cap = config.t + alpha
    if cap >= 1.0:
        raise ValueError(f"t + alpha = {cap} leaves no constraint")
    prob = _Problem(train, h, cap)
    x = np.append(start.theta, start.delta)
    tpr0 = smooth_rate(start.theta, start.delta, train.cases, h)
    fpr0 = smooth_rate(start.theta, start.delta, train.controls, h)

    lam, nu, mu = 0.0, 0.0, config.initial_penalty
    tol = config.constraint_tolerance
    used = 0
    converged = False
    kkt = np.inf
    viol_prev = np.inf
    tpr_prev = tpr0
    message = "iteration limit"

    def aug(xx):
        tpr, gt = prob.tpr(xx)
        fpr, gf = prob.fpr(xx)
        ceq, ge = prob.norm_eq(xx)
        val = -tpr + lam * ceq + 0.5 * mu * ceq * ceq
        grad = -gt + (lam + mu * ceq) * ge
        shifted = nu + mu * (fpr - cap)
        if shifted > 0:
            val += (shifted * shifted - nu * nu) / (2.0 * mu)
            grad = grad + shifted * gf
        else:
            val -= nu * nu / (2.0 * mu)
        return val, grad

    for _ in range(config.max_outer):
        budget = config.max_iterations - used
        if budget <= 0:
            break
        res = minimize(
            aug, x, jac=True, method="L-BFGS-B",
            options={"maxiter": budget, "gtol": 1e-2 * tol, "ftol": 0.0, "maxcor": 20},
        )
        used += max(int(res.nit), 1)
        if not np.all(np.isfinite(res.x)):
            message = "non-finite iterate"
            break
        x = res.x
        ceq = prob.norm_eq(x)[0]
        cin = prob.fpr(x)[0] - cap
        lam += mu * ceq
        nu = max(0.0, nu + mu * cin)
        viol = max(abs(ceq), max(cin, 0.0))
        kkt, tpr, *_ = prob.kkt(x, tol)
        if kkt > tol and viol < 1e-4:
            # line searches on function values stall near 1e-8
            xp, kp = _newton_polish(prob, x, tol)
            tpr_p = prob.tpr(xp)[0]
            if kp <= tol and abs(tpr_p - tpr) < 1e-4:
                x, kkt, tpr = xp, kp, tpr_p
        if kkt <= tol and abs(tpr - tpr_prev) < max(config.objective_tolerance, 1e-4):
            converged = True
            message = "kkt"
            break
        if viol > tol and viol > 0.25 * viol_prev:
            mu *= config.penalty_growth
        viol_prev = viol
        tpr_prev = tpr

    theta = x[: train.p]
    norm = np.linalg.norm(theta)
    if converged and norm > 0:
        theta = theta / norm
        delta = solve_delta(theta, train.controls, h, cap)
        tpr = smooth_rate(theta, delta, train.cases, h)
        fpr = smooth_rate(theta, delta, train.controls, h)
        if tpr < tpr0 - config.objective_tolerance:
            converged = False
            message = "solution below starting objective"
    fallback = not converged
    if fallback:
        theta, delta, tpr, fpr = start.theta, start.delta, tpr0, fpr0
        log.info("sTPR solve did not converge (%s); returning initializer", message)
    diag = FitDiagnostics(
        converged, used, float(tpr), float(fpr), start.initializer, fallback, h, alpha,
        float(kkt), message,
    )
    model = CombinationModel(
        theta, delta, "stpr", converged, used, {"fallback": fallback, "h": h, "alpha": alpha}
    )
    return model, diag


def evaluate_fit(
    model: CombinationModel, train: Dataset, test: Dataset, t: float
) -> tuple[float, float]:
    """``(test TPR at the test-quantile threshold, test FPR at the train-quantile threshold)``.

    The model's own ``delta`` is not used; both thresholds are re-estimated.
    """
    if train.p != test.p:
        raise ValueError("train and test have different numbers of markers")
    tpr = tpr_at_test_fpr(model.theta, test, t)
    delta_train = threshold_for_fpr(model.theta, train.controls, t)
    return tpr, empirical_fpr(model.theta, delta_train, test.controls)
