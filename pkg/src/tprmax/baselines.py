"""Comparison methods: logistic and robust logistic regression, the Su & Liu
combination, exhaustive grid search, and the bivariate-normal likelihood-ratio
quadratic used as an exact oracle."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit, ndtr

from .data import Dataset
from .roc import CombinationModel, _quantile_rank

log = logging.getLogger(__name__)

RIDGE = 1e-10
BY_CONST = 0.5


def _design(train: Dataset) -> tuple[np.ndarray, np.ndarray]:
    X = train.pooled()
    y = np.concatenate([np.ones(train.n1), np.zeros(train.n0)])
    const = [train.marker_names[k] for k in range(train.p) if np.ptp(X[:, k]) == 0]
    if const:
        raise ValueError(f"constant marker(s) in training data: {', '.join(const)}")
    return np.column_stack([np.ones(len(y)), X]), y


def _unit_model(coef: np.ndarray, tag: str, converged: bool, iterations: int, **notes):
    slopes = coef[1:]
    norm = np.linalg.norm(slopes)
    if not norm > 0:
        raise ValueError(f"{tag}: zero slope vector, direction undefined")
    return CombinationModel(
        slopes / norm, -coef[0] / norm, tag, converged, iterations, {"coef": coef, **notes}
    )


def _separates(eta, y, mu) -> bool:
    """Linear predictor splits the classes and every fitted probability is saturated."""
    return bool(
        (eta[y == 1] > 0).all() and (eta[y == 0] < 0).all() and np.max(np.abs(y - mu)) < 1e-6
    )


def logistic_irls(
    A: np.ndarray, y: np.ndarray, *, tol: float = 1e-8, max_iter: int = 100, cap: float = 1e8
) -> tuple[np.ndarray, bool, int, bool]:
    """Newton / IRLS for the logistic likelihood; ``A`` includes the intercept column.

    Returns ``(coef, converged, iterations, separated)``.
    """
    beta = np.zeros(A.shape[1])
    ridge = RIDGE * np.eye(A.shape[1])
    separated = False
    for it in range(1, max_iter + 1):
        mu = expit(A @ beta)
        score = A.T @ (y - mu)
        if np.max(np.abs(score)) <= tol:
            if _separates(A @ beta, y, mu):
                return beta, False, it - 1, True
            return beta, True, it - 1, False
        w = mu * (1.0 - mu)
        H = (A * w[:, None]).T @ A + ridge
        try:
            step = np.linalg.solve(H, score)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, score, rcond=None)[0]
        beta = beta + step
        if not np.isfinite(beta).all() or np.linalg.norm(beta) > cap:
            separated = True
            break
        # relative step below machine resolution; score cannot shrink further
        if np.max(np.abs(step)) <= 1e-14 * (1.0 + np.max(np.abs(beta))):
            return beta, True, it, False
    if separated:
        beta = np.where(np.isfinite(beta), beta, 0.0)
        norm = np.linalg.norm(beta)
        if norm > cap:
            beta = beta * (cap / norm)
    return beta, False, max_iter if not separated else it, separated


def fit_logistic(train: Dataset) -> CombinationModel:
    """Maximum-likelihood logistic regression; the normalized slope vector is the direction."""
    A, y = _design(train)
    coef, ok, it, separated = logistic_irls(A, y)
    if separated:
        log.warning("logistic regression: complete separation suspected, coefficients capped")
    return _unit_model(coef, "glm", ok, it, separated=separated)


# --- Bianco-Yohai bounded-deviance estimator (Croux-Haesbroeck rho) --------


def _by_rho(d, c=BY_CONST):
    sc = np.sqrt(c)
    sd = np.sqrt(np.maximum(d, c))
    big = np.exp(-sc) * (2.0 * (1.0 + sc) + c) - 2.0 * np.exp(-sd) * (1.0 + sd)
    return np.where(d <= c, d * np.exp(-sc), big)


def _by_psi(d, c=BY_CONST):
    return np.exp(-np.sqrt(np.maximum(d, c)))


def _by_dpsi(d, c=BY_CONST):
    sd = np.sqrt(np.maximum(d, c))
    return np.where(d > c, -np.exp(-sd) / (2.0 * sd), 0.0)


def _by_G(u, c=BY_CONST):
    """``G(u) = int_0^u psi(-log v) dv`` for ``u`` in (0, 1]."""
    u = np.asarray(u, dtype=float)
    ec = np.exp(-c)

    def tail(uu):
        # u <= e^{-c}: substitute v = exp(-r^2)
        s = np.sqrt(-np.log(np.clip(uu, 1e-300, 1.0)))
        w = s + 0.5
        return np.exp(-s * s - s) - np.exp(0.25) * np.sqrt(np.pi) * ndtr(-np.sqrt(2.0) * w)

    head = tail(np.minimum(u, ec))
    return np.where(u <= ec, head, tail(ec) + np.exp(-np.sqrt(c)) * (u - ec))


def _by_parts(s: np.ndarray, y: np.ndarray, c: float):
    lF, l1F = log_expit(s), log_expit(-s)  # log F, log(1 - F)
    F = expit(s)
    d = -(y * lF + (1.0 - y) * l1F)
    a, b = -lF, -l1F
    return F, d, a, b, lF, l1F


def by_objective(beta, A, y, c=BY_CONST) -> float:
    s = A @ beta
    F, d, *_ = _by_parts(s, y, c)
    return float(np.sum(_by_rho(d, c) + _by_G(F, c) + _by_G(1.0 - F, c)))


def by_gradient_hessian(beta, A, y, c=BY_CONST):
    s = A @ beta
    F, d, a, b, *_ = _by_parts(s, y, c)
    q = F * (1.0 - F)
    r = F - y
    g = _by_psi(d, c) * r + q * (_by_psi(a, c) - _by_psi(b, c))
    dg = (
        _by_dpsi(d, c) * r * r
        + _by_psi(d, c) * q
        + q * (1.0 - 2.0 * F) * (_by_psi(a, c) - _by_psi(b, c))
        - q * ((1.0 - F) * _by_dpsi(a, c) + F * _by_dpsi(b, c))
    )
    return A.T @ g, (A * dg[:, None]).T @ A


def by_logistic(A, y, beta0, *, c=BY_CONST, tol=1e-8, max_iter=200):
    """Damped Newton on the Bianco-Yohai objective from ``beta0``.

    Non-positive-definite Hessians fall back to a scaled gradient step.
    Returns ``(coef, converged, iterations)``.
    """
    beta = np.array(beta0, dtype=float)
    f = by_objective(beta, A, y, c)
    k = A.shape[1]
    for it in range(1, max_iter + 1):
        g, H = by_gradient_hessian(beta, A, y, c)
        if np.max(np.abs(g)) <= tol:
            return beta, True, it - 1
        try:
            L = np.linalg.cholesky(H + RIDGE * np.eye(k))
            step = -np.linalg.solve(L.T, np.linalg.solve(L, g))
        except np.linalg.LinAlgError:
            step = -g / max(np.abs(np.diag(H)).max(), 1.0)
        lam = 1.0
        while lam > 1e-10:
            cand = beta + lam * step
            fc = by_objective(cand, A, y, c)
            if fc <= f + 1e-4 * lam * float(g @ step):
                break
            lam *= 0.5
        else:
            # no descent along the step; accept only if already stationary-ish
            return beta, bool(np.max(np.abs(g)) <= 1e-5 * max(1.0, abs(f))), it
        beta, f_old, f = cand, f, fc
        if abs(f_old - f) <= 1e-15 * max(1.0, abs(f)) and np.max(np.abs(lam * step)) < 1e-12:
            return beta, True, it
    return beta, False, max_iter


def fit_robust_logistic(train: Dataset, c: float = BY_CONST) -> CombinationModel:
    """Bianco-Yohai robust logistic regression started from the ML fit.

    On nonconvergence the plain logistic model is returned, flagged.
    """
    A, y = _design(train)
    start, ok0, _, _ = logistic_irls(A, y)
    coef, ok, it = by_logistic(A, y, start, c=c)
    if not ok or not np.isfinite(coef).all() or not np.any(coef[1:]):
        log.info("robust logistic fit did not converge; using plain logistic slopes")
        m = _unit_model(start, "rglm", False, it, fallback=True)
        return m
    return _unit_model(coef, "rglm", True, it, fallback=False)


# --- Su & Liu ---------------------------------------------------------------


def fit_su_liu(train: Dataset) -> CombinationModel:
    """``(S0 + S1)^{-1} (m1 - m0)`` with n - 1 sample covariances."""
    if train.n1 < 2 or train.n0 < 2:
        raise ValueError("Su & Liu needs at least two cases and two controls")
    m1, m0 = train.cases.mean(0), train.controls.mean(0)
    S = np.atleast_2d(np.cov(train.cases, rowvar=False)) + np.atleast_2d(
        np.cov(train.controls, rowvar=False)
    )
    if np.linalg.matrix_rank(S) < train.p:
        raise np.linalg.LinAlgError("singular covariance sum")
    w = np.linalg.solve(S, m1 - m0)
    norm = np.linalg.norm(w)
    if not norm > 0:
        raise ValueError("su-liu: equal group means, direction undefined")
    theta = w / norm
    delta = float(theta @ (m1 + m0) / 2.0)
    return CombinationModel(theta, delta, "suliu", True, 0)


# --- grid search -------------------------------------------------------------


def direction_grid(p: int, resolution: int | None = None) -> np.ndarray:
    """Unit directions: an angle grid on the circle (p=2) or a Fibonacci sphere (p=3)."""
    if p == 2:
        m = resolution or 2000
        a = 2.0 * np.pi * np.arange(m) / m
        return np.column_stack([np.cos(a), np.sin(a)])
    if p == 3:
        m = resolution or 20000
        i = np.arange(m) + 0.5
        z = 1.0 - 2.0 * i / m
        r = np.sqrt(1.0 - z * z)
        phi = np.pi * (3.0 - np.sqrt(5.0)) * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    raise ValueError(f"grid search supports p in {{2, 3}}, got p={p}")


def grid_search(
    train: Dataset, t: float, resolution: int | None = None, chunk: int = 2048
) -> CombinationModel:
    """Exhaustive search of the empirical TPR at control-quantile thresholds."""
    grid = direction_grid(train.p, resolution)
    k = _quantile_rank(train.n0, t)
    best_tpr, best_i, best_delta = -1.0, -1, 0.0
    for lo in range(0, grid.shape[0], chunk):
        G = grid[lo : lo + chunk]
        s0 = train.controls @ G.T
        deltas = np.partition(s0, k - 1, axis=0)[k - 1]
        tpr = (train.cases @ G.T > deltas).mean(axis=0)
        i = int(np.argmax(tpr))
        if tpr[i] > best_tpr:
            best_tpr, best_i, best_delta = float(tpr[i]), lo + i, float(deltas[i])
    return CombinationModel(
        grid[best_i], best_delta, "grid", True, grid.shape[0], {"train_tpr": best_tpr}
    )


# --- likelihood-ratio quadratic ---------------------------------------------


@dataclass(frozen=True)
class QuadraticCombination:
    """``b0 + b1 x1 + b2 x2 + b3 x1 x2 + b4 x1^2 + b5 x2^2``."""

    beta: tuple[float, float, float, float, float, float]

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        x1, x2 = X[:, 0], X[:, 1]
        b = self.beta
        return b[0] + b[1] * x1 + b[2] * x2 + b[3] * x1 * x2 + b[4] * x1**2 + b[5] * x2**2


def quadratic_lr(mu0, mu1, sigma, sigma2: float) -> QuadraticCombination:
    """Log likelihood ratio of ``N(mu1, sigma2 * Sigma)`` to ``N(mu0, Sigma)``,
    up to the additive constant ``-log(sigma2)``, as a quadratic in the markers.

    Coordinates are shifted so that the control mean is zero; the
    returned coefficients act on the shifted markers ``x - mu0``.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (2, 2) or not np.allclose(sigma, sigma.T):
        raise ValueError("sigma must be a symmetric 2x2 matrix")
    if np.any(np.linalg.eigvalsh(sigma) <= 0):
        raise ValueError("sigma must be positive definite")
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    S = np.linalg.inv(sigma)
    S11, S12, S21, S22 = S[0, 0], S[0, 1], S[1, 0], S[1, 1]
    m1, m2 = np.asarray(mu1, dtype=float) - np.asarray(mu0, dtype=float)
    v = sigma2
    # the overall factor 1/2 of the expanded exponent is folded in
    b0 = 0.5 * (-S11 * m1**2 - S21 * m1 * m2 - S12 * m1 * m2 - S22 * m2**2) / v
    b1 = 0.5 * (2 * S11 * m1 + S21 * m2 + S12 * m2) / v
    b2 = 0.5 * (S21 * m1 + S12 * m1 + 2 * S22 * m2) / v
    b3 = 0.5 * (S12 + S21 - S12 / v - S21 / v)
    b4 = 0.5 * (S11 - S11 / v)
    b5 = 0.5 * (S22 - S22 / v)
    return QuadraticCombination(tuple(float(b) for b in (b0, b1, b2, b3, b4, b5)))
