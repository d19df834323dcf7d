import numpy as np
import pytest
from scipy.stats import chi2

from tprmax.roc import auc, roc_curve
from tprmax.simgen import (
    CONTAM_POINT,
    MIX_COV_OUTLIER,
    MIX_COV_TYPICAL,
    OUTLIER_PROB,
    ScenarioSpec,
    derive_replication_seed,
    gen_contaminated,
    gen_lognormal3,
    gen_mixture,
    link_f1,
    link_f2,
    mixture_risk_score,
)


def test_contaminated_prevalence():
    for seed in range(5):
        assert abs(gen_contaminated(800, 50, seed).prevalence - 0.47) < 0.03


def test_contaminated_symmetric_without_contamination():
    assert abs(gen_contaminated(100_000, 0, 1).prevalence - 0.5) < 0.01


def test_contamination_rows_are_controls_at_point():
    s = gen_contaminated(100, 30, 2).data
    n_at = np.all(s.controls == CONTAM_POINT, axis=1).sum()
    assert n_at == 30
    assert not np.any(np.all(s.cases == CONTAM_POINT, axis=1))


def test_true_direction_signal_grows():
    w = np.array([1.0, 1.0]) / np.sqrt(2)
    aucs = []
    for n in (50, 5000):
        d = gen_contaminated(n, 0, 3).data
        aucs.append(auc(roc_curve(d.cases @ w, d.controls @ w)))
    assert aucs[0] > 0.5 and aucs[1] > 0.9


def test_lognormal_control_moments():
    d = gen_lognormal3(10, 100_000, 4).data
    L = np.log(d.controls[:, :2])
    m, C = L.mean(0), np.cov(L, rowvar=False)
    n = L.shape[0]
    se_mean = np.sqrt(np.diag(C) / n)
    assert np.all(np.abs(m - 1.1) < 3 * se_mean)
    # var(s^2) = 2 sigma^4 / (n - 1); var(s12) = (s11 s22 + s12^2) / (n - 1)
    se_var = np.sqrt(2 * np.array([0.04, 0.5]) ** 2 / (n - 1))
    assert np.all(np.abs(np.diag(C) - [0.04, 0.5]) < 3 * se_var)
    se_cov = np.sqrt((0.04 * 0.5 + 0.09**2) / (n - 1))
    assert abs(C[0, 1] - 0.09) < 3 * se_cov


def test_lognormal_case_moments():
    L = np.log(gen_lognormal3(100_000, 10, 5).data.cases[:, :2])
    np.testing.assert_allclose(L.mean(0), [1.0, 1.0], atol=0.005)
    np.testing.assert_allclose(np.cov(L, rowvar=False), [[0.05, 0.015], [0.015, 0.05]], atol=0.002)


def test_noise_marker_same_in_both_groups():
    d = gen_lognormal3(10_000, 10_000, 6).data
    a, b = np.log(d.cases[:, 2]), np.log(d.controls[:, 2])
    tstat = (a.mean() - b.mean()) / np.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size)
    assert abs(tstat) < 4
    assert np.all(d.pooled() > 0)


def test_lognormal_fixed_group_sizes():
    d = gen_lognormal3(400, 400, 7).data
    assert (d.n1, d.n0) == (400, 400)


CELLS = [("f1", 0.0, (50, 60)), ("f2", 0.0, (50, 60)), ("f1", -1.75, (16, 18)),
         ("f2", -5.25, (16, 18)), ("f1", 1.75, (77, 82)), ("f2", 0.6, (77, 82))]


def expected_prevalence(link, beta0, outliers):
    """E f(score(X)) by Gauss-Hermite quadrature over the normal mixture."""
    f = {"f1": link_f1, "f2": link_f2}[link]
    z, w = np.polynomial.hermite_e.hermegauss(120)
    Z = np.stack(np.meshgrid(z, z, indexing="ij"), -1).reshape(-1, 2)
    W = np.outer(w, w).ravel() / (2 * np.pi)
    comps = [(1 - OUTLIER_PROB * outliers, MIX_COV_TYPICAL), (OUTLIER_PROB * outliers, MIX_COV_OUTLIER)]
    return sum(p * W @ f(mixture_risk_score(Z @ np.linalg.cholesky(S).T, beta0)) for p, S in comps)


@pytest.mark.parametrize("link, beta0, band", CELLS)
@pytest.mark.parametrize("outliers", [False, True])
def test_mixture_prevalence_matches_quadrature(link, beta0, band, outliers):
    prev = gen_mixture(100_000, link, beta0, outliers, 8).prevalence
    p = expected_prevalence(link, beta0, outliers)
    assert abs(prev - p) < 4 * np.sqrt(p * (1 - p) / 100_000)


@pytest.mark.parametrize("link, beta0, band", [c for c in CELLS if c[:2] != ("f2", 0.0)])
def test_mixture_prevalence_bands(link, beta0, band):
    for outliers in (False, True):
        prev = 100 * gen_mixture(100_000, link, beta0, outliers, 8).prevalence
        assert band[0] - 2 <= prev <= band[1] + 2


def test_f2_continuity():
    assert link_f2(0.0) == 0.5
    assert link_f2(-1e-12) == pytest.approx(0.5) and link_f2(1e-12) == pytest.approx(0.5)


def test_stable_link_never_drops_rows():
    s = gen_mixture(5000, "f1", 0.0, True, 9)
    assert s.data.n == 5000
    assert np.all(np.isfinite(s.data.pooled()))


def test_outlier_ellipse_fraction():
    X = gen_mixture(10_000, "f1", 0.0, True, 10).data.pooled()
    m = np.einsum("ij,jk,ik->i", X, np.linalg.inv(MIX_COV_TYPICAL), X)
    outside = (m > chi2.ppf(0.99, 2)).mean()
    assert abs(outside - 0.05) <= 0.015


def test_seed_derivation():
    a = derive_replication_seed(5, 3)
    b = derive_replication_seed(5, 3)
    c = derive_replication_seed(5, 4)
    ra, rb, rc = (np.random.default_rng(s).random(100) for s in (a, b, c))
    np.testing.assert_array_equal(ra, rb)
    assert np.all(ra != rc)


def test_generators_are_pure():
    for spec in (ScenarioSpec("contaminated-normal"), ScenarioSpec("lognormal3"),
                 ScenarioSpec("normal-mixture", link="f2", outliers=True)):
        a, b = spec.generate(17).data, spec.generate(17).data
        assert a.cases.tobytes() == b.cases.tobytes()
        assert a.controls.tobytes() == b.controls.tobytes()


def test_test_sample_sizes():
    s = ScenarioSpec("contaminated-normal").generate_test(100_000, 1).data
    assert s.n == 106_250
    s = ScenarioSpec("lognormal3").generate_test(20_000, 1).data
    assert (s.n1, s.n0) == (10_000, 10_000)


@pytest.mark.parametrize(
    "kw",
    [dict(family="x"), dict(family="normal-mixture", link="f3"),
     dict(family="normal-mixture", beta0=float("inf")), dict(family="lognormal3", n_cases=0),
     dict(family="contaminated-normal", n_contam=-1)],
)
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        ScenarioSpec(**kw)


def test_train_size():
    assert ScenarioSpec("contaminated-normal").train_size == 850
    assert ScenarioSpec("lognormal3").train_size == 800
    assert ScenarioSpec("normal-mixture", n=200).train_size == 200
