"""Seeded generators for the three simulation designs.

* ``contaminated-normal``: two iid N(0, 1) markers, latent-logistic disease
  rule ``D = 1(2 X1 + 2 X2 + zeta > 0)``, plus extra controls fixed at (6, 6).
* ``lognormal3``: group-specific bivariate lognormal markers plus one
  lognormal noise marker shared by both groups.
* ``normal-mixture``: a two-component normal mixture with disease drawn from
  a cubic risk score through an expit (``f1``) or piecewise-logistic (``f2``) link.

All generators are pure functions of their arguments; ``seed`` may be an
int, a :class:`numpy.random.SeedSequence` or a Generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .data import Dataset

FAMILIES = ("contaminated-normal", "lognormal3", "normal-mixture")
LINKS = ("f1", "f2")

CONTAM_POINT = (6.0, 6.0)

LOG_MEAN_CONTROLS = np.array([1.1, 1.1])
LOG_COV_CONTROLS = np.array([[0.04, 0.09], [0.09, 0.5]])
LOG_MEAN_CASES = np.array([1.0, 1.0])
LOG_COV_CASES = np.array([[0.05, 0.015], [0.015, 0.05]])
NOISE_LOG_MEAN, NOISE_LOG_VAR = 1.65, 4.66

MIX_COV_TYPICAL = 0.2 * np.array([[1.0, 0.9], [0.9, 1.0]])
MIX_COV_OUTLIER = 2.0 * np.eye(2)
OUTLIER_PROB = 0.05


@dataclass(frozen=True)
class GeneratedSample:
    data: Dataset
    params: dict = field(default_factory=dict)

    @property
    def prevalence(self) -> float:
        return self.data.n1 / self.data.n


@dataclass(frozen=True)
class ScenarioSpec:
    """One simulation design. Only the fields of the chosen family are used."""

    family: str
    # contaminated-normal
    n_typical: int = 800
    n_contam: int = 50
    # lognormal3
    n_cases: int = 400
    n_controls: int = 400
    # normal-mixture
    n: int = 800
    link: str = "f1"
    beta0: float = 0.0
    outliers: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "contaminated-normal":
            if self.n_typical < 1 or self.n_contam < 0:
                raise ValueError("contaminated-normal needs n_typical >= 1 and n_contam >= 0")
        elif self.family == "lognormal3":
            if self.n_cases < 1 or self.n_controls < 1:
                raise ValueError("lognormal3 needs at least one case and one control")
        else:
            if self.n < 1:
                raise ValueError("normal-mixture needs n >= 1")
            if self.link not in LINKS:
                raise ValueError(f"unknown link {self.link!r}")
            if not np.isfinite(self.beta0):
                raise ValueError("beta0 must be finite")

    @property
    def train_size(self) -> int:
        if self.family == "contaminated-normal":
            return self.n_typical + self.n_contam
        if self.family == "lognormal3":
            return self.n_cases + self.n_controls
        return self.n

    def generate(self, seed) -> GeneratedSample:
        if self.family == "contaminated-normal":
            return gen_contaminated(self.n_typical, self.n_contam, seed)
        if self.family == "lognormal3":
            return gen_lognormal3(self.n_cases, self.n_controls, seed)
        return gen_mixture(self.n, self.link, self.beta0, self.outliers, seed)

    def generate_test(self, test_size: int, seed) -> GeneratedSample:
        """A large evaluation sample from the same design.

        ``test_size`` counts typical observations; contaminating controls
        are added in the training ratio, and lognormal groups are split evenly.
        """
        if self.family == "contaminated-normal":
            n_contam = round(test_size * self.n_contam / self.n_typical)
            return gen_contaminated(test_size, n_contam, seed)
        if self.family == "lognormal3":
            half = test_size // 2
            return gen_lognormal3(test_size - half, half, seed)
        return gen_mixture(test_size, self.link, self.beta0, self.outliers, seed)

    def to_dict(self) -> dict:
        keys = {
            "contaminated-normal": ("n_typical", "n_contam"),
            "lognormal3": ("n_cases", "n_controls"),
            "normal-mixture": ("n", "link", "beta0", "outliers"),
        }[self.family]
        return {"family": self.family, **{k: getattr(self, k) for k in keys}}


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def derive_replication_seed(base_seed: int, replication: int) -> np.random.SeedSequence:
    """Independent stream for replication ``r``; independent of execution order."""
    return np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(replication),))


def gen_contaminated(n_typical: int, n_contam: int, seed) -> GeneratedSample:
    if n_typical < 0 or n_contam < 0:
        raise ValueError("counts must be nonnegative")
    rng = _rng(seed)
    X = rng.standard_normal((n_typical, 2))
    zeta = rng.logistic(0.0, 1.0, n_typical)
    d = 2.0 * X[:, 0] + 2.0 * X[:, 1] + zeta > 0
    Xc = np.tile(CONTAM_POINT, (n_contam, 1))
    data = Dataset(
        X[d], np.vstack([X[~d], Xc]), ("X1", "X2"),
        np.flatnonzero(d), np.concatenate([np.flatnonzero(~d), n_typical + np.arange(n_contam)]),
    )
    return GeneratedSample(
        data, {"family": "contaminated-normal", "n_typical": n_typical, "n_contam": n_contam}
    )


def gen_lognormal3(n_cases: int, n_controls: int, seed) -> GeneratedSample:
    if n_cases < 1 or n_controls < 1:
        raise ValueError("counts must be at least 1")
    rng = _rng(seed)
    l1 = rng.multivariate_normal(LOG_MEAN_CASES, LOG_COV_CASES, n_cases, method="cholesky")
    l0 = rng.multivariate_normal(LOG_MEAN_CONTROLS, LOG_COV_CONTROLS, n_controls, method="cholesky")
    sd3 = np.sqrt(NOISE_LOG_VAR)
    n3 = rng.normal(NOISE_LOG_MEAN, sd3, n_cases + n_controls)
    cases = np.exp(np.column_stack([l1, n3[:n_cases]]))
    controls = np.exp(np.column_stack([l0, n3[n_cases:]]))
    return GeneratedSample(
        Dataset(cases, controls, ("X1", "X2", "X3")),
        {"family": "lognormal3", "n_cases": n_cases, "n_controls": n_controls},
    )


def link_f1(v):
    return expit(v)


def link_f2(v):
    """Piecewise logistic: slope 1/3 below zero and 3 above, both 1/2 at zero."""
    v = np.asarray(v, dtype=float)
    return np.where(v < 0, expit(v / 3.0), expit(3.0 * v))


def mixture_risk_score(X: np.ndarray, beta0: float) -> np.ndarray:
    x1, x2 = X[:, 0], X[:, 1]
    return beta0 + 4.0 * x1 - 3.0 * x2 - 0.8 * (x1 - x2) ** 3


def gen_mixture(n: int, link: str, beta0: float, outliers: bool, seed) -> GeneratedSample:
    if n < 1:
        raise ValueError("n must be at least 1")
    f = {"f1": link_f1, "f2": link_f2}.get(link)
    if f is None:
        raise ValueError(f"unknown link {link!r}")
    rng = _rng(seed)
    z0 = rng.multivariate_normal(np.zeros(2), MIX_COV_TYPICAL, n, method="cholesky")
    z1 = rng.multivariate_normal(np.zeros(2), MIX_COV_OUTLIER, n, method="cholesky")
    pi = OUTLIER_PROB if outliers else 0.0
    is_out = rng.random(n) < pi
    X = np.where(is_out[:, None], z1, z0)
    d = rng.random(n) < f(mixture_risk_score(X, beta0))
    if d.all() or not d.any():
        raise ValueError("generated sample has only one class; increase n")
    data = Dataset(X[d], X[~d], ("X1", "X2"), np.flatnonzero(d), np.flatnonzero(~d))
    return GeneratedSample(
        data,
        {"family": "normal-mixture", "n": n, "link": link, "beta0": beta0,
         "outliers": outliers, "n_outliers": int(is_out.sum())},
    )
