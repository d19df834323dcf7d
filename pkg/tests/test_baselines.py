import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import multivariate_normal, spearmanr

from tprmax.baselines import (
    by_gradient_hessian,
    by_objective,
    direction_grid,
    fit_logistic,
    fit_robust_logistic,
    fit_su_liu,
    grid_search,
    logistic_irls,
    quadratic_lr,
)
from tprmax.data import Dataset, SplitSpec, apply_scaling, fit_scaling, load_csv, split
from tprmax.roc import _quantile_rank, auc, empirical_tpr, roc_curve, threshold_for_fpr
from tprmax.simgen import ScenarioSpec, derive_replication_seed
from tprmax.solver import evaluate_fit

from conftest import PIMA_CSV, PIMA_SPLIT, make_normal

UNIT = 1e-8


def test_single_marker_direction():
    rng = np.random.default_rng(0)
    d = Dataset(rng.normal(1.0, 1.0, (100, 1)), rng.normal(-1.0, 1.0, (100, 1)))
    m = fit_logistic(d)
    assert m.theta.tolist() == [1.0] and m.converged and m.method_tag == "glm"


def test_duplicated_marker_splits_slope():
    rng = np.random.default_rng(1)
    x1, x0 = rng.normal(0.7, 1, 80), rng.normal(0, 1, 90)
    one = fit_logistic(Dataset(x1[:, None], x0[:, None]))
    two = fit_logistic(Dataset(np.column_stack([x1, x1]), np.column_stack([x0, x0])))
    c1, c2 = one.notes["coef"], two.notes["coef"]
    X = np.concatenate([x1, x0])
    np.testing.assert_allclose(c2[0] + X * (c2[1] + c2[2]), c1[0] + X * c1[1], atol=1e-6)
    assert two.theta[0] == pytest.approx(two.theta[1], abs=1e-4)


def test_pima_glucose_dominates():
    train, _ = split(load_csv(PIMA_CSV, "type", "Yes"), SplitSpec.read(PIMA_SPLIT))
    train = apply_scaling(train, fit_scaling(train))
    m = fit_logistic(train)
    assert train.marker_names[int(np.argmax(np.abs(m.theta)))] == "glu"
    assert m.theta[1] == pytest.approx(0.79, abs=0.05)


def test_separation_flagged():
    A = np.column_stack([np.ones(6), [-3, -2, -1, 1, 2, 3]])
    y = np.array([0, 0, 0, 1, 1, 1.0])
    coef, ok, _, sep = logistic_irls(A, y)
    assert sep and not ok and np.all(np.isfinite(coef))
    d = Dataset(np.array([[1.0], [2.0], [3.0]]), np.array([[-1.0], [-2.0], [-3.0]]))
    m = fit_logistic(d)
    assert m.notes["separated"] and m.theta.tolist() == [1.0]


def test_constant_marker_rejected():
    d = Dataset(np.array([[1.0, 2.0], [1.0, 3.0]]), np.array([[1.0, 0.0]]), ("c", "v"))
    with pytest.raises(ValueError, match="c"):
        fit_logistic(d)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 100), st.floats(-50, 50), st.integers(0, 1), st.integers(0, 999))
def test_logistic_affine_invariance(a, b, k, seed):
    d = make_normal(40, 50, p=2, seed=seed)
    shift = np.zeros(2)
    scale = np.ones(2)
    scale[k], shift[k] = a, b
    d2 = Dataset(d.cases * scale + shift, d.controls * scale + shift)
    m, m2 = fit_logistic(d), fit_logistic(d2)
    a1 = auc(roc_curve(m.scores(d.cases), m.scores(d.controls)))
    a2 = auc(roc_curve(m2.scores(d2.cases), m2.scores(d2.controls)))
    assert a1 == pytest.approx(a2, abs=1e-10)


def test_by_derivatives_match_differences():
    rng = np.random.default_rng(3)
    A = np.column_stack([np.ones(50), rng.normal(size=(50, 2))])
    y = (rng.random(50) < 0.5).astype(float)
    b = rng.normal(size=3)
    g, H = by_gradient_hessian(b, A, y)
    eye = 1e-6 * np.eye(3)
    num_g = np.array([(by_objective(b + e, A, y) - by_objective(b - e, A, y)) / 2e-6 for e in eye])
    np.testing.assert_allclose(g, num_g, rtol=1e-5, atol=1e-7)
    num_H = np.column_stack(
        [(by_gradient_hessian(b + e, A, y)[0] - by_gradient_hessian(b - e, A, y)[0]) / 2e-6 for e in eye]
    )
    np.testing.assert_allclose(H, num_H, rtol=1e-4, atol=1e-6)


def test_robust_matches_logistic_on_clean_mixture():
    for r in range(5):
        d = ScenarioSpec("normal-mixture").generate(derive_replication_seed(3, r)).data
        m, g = fit_robust_logistic(d), fit_logistic(d)
        assert m.converged and not m.notes["fallback"]
        assert np.max(np.abs(m.theta - g.theta)) < 0.01


def test_robust_gains_under_contamination():
    scen = ScenarioSpec("contaminated-normal")
    diff = []
    for r in range(20):
        a, b = derive_replication_seed(11, r).spawn(2)
        train, test = scen.generate(a).data, scen.generate_test(20_000, b).data
        diff.append(evaluate_fit(fit_robust_logistic(train), train, test, 0.2)[0]
                    - evaluate_fit(fit_logistic(train), train, test, 0.2)[0])
    assert np.mean(diff) > 0


def test_gross_outlier_moves_robust_less():
    moves = []
    for seed in range(5):
        d = make_normal(150, 150, p=2, shift=1.5, seed=seed)
        bad = Dataset(d.cases, np.vstack([d.controls, [[8.0, 8.0]]]))
        g0, g1 = fit_logistic(d).theta, fit_logistic(bad).theta
        r0, r1 = fit_robust_logistic(d).theta, fit_robust_logistic(bad).theta
        moves.append((np.linalg.norm(r1 - r0), np.linalg.norm(g1 - g0)))
    moves = np.array(moves)
    assert np.all(moves[:, 0] < moves[:, 1])


def test_robust_fallback_flag(monkeypatch):
    import tprmax.baselines as bl

    monkeypatch.setattr(bl, "by_logistic", lambda A, y, b, c: (b * np.nan, False, 7))
    d = make_normal()
    m = bl.fit_robust_logistic(d)
    assert m.notes["fallback"] and not m.converged
    np.testing.assert_allclose(m.theta, fit_logistic(d).theta)


def _two_point_cloud():
    # sample covariance exactly proportional to the identity
    return np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])


def test_su_liu_spherical():
    base = _two_point_cloud()
    d = Dataset(base + [2.0, 0.5], base)
    diff = np.array([2.0, 0.5])
    np.testing.assert_allclose(fit_su_liu(d).theta, diff / np.linalg.norm(diff), atol=1e-12)


def test_su_liu_equal_covariance_is_fisher():
    rng = np.random.default_rng(4)
    base = rng.normal(size=(30, 3)) @ np.array([[2, 0, 0], [0.5, 1, 0], [0, 0.3, 0.2]])
    shift = np.array([0.4, -0.1, 0.7])
    d = Dataset(base + shift, base)
    w = np.linalg.solve(np.cov(base, rowvar=False), shift)
    np.testing.assert_allclose(fit_su_liu(d).theta, w / np.linalg.norm(w), atol=1e-10)


def test_su_liu_equivariance():
    d = make_normal(50, 60, p=3, seed=6)
    c = np.array([1.0, 25.0, 0.01])
    d2 = Dataset(d.cases * c, d.controls * c)
    m, m2 = fit_su_liu(d), fit_su_liu(d2)
    r1 = roc_curve(m.scores(d.cases), m.scores(d.controls))
    r2 = roc_curve(m2.scores(d2.cases), m2.scores(d2.controls))
    np.testing.assert_allclose(r1.fpr, r2.fpr)
    np.testing.assert_allclose(r1.tpr, r2.tpr)


def test_su_liu_singular():
    d = Dataset(np.ones((3, 2)) * [1, 2], np.ones((3, 2)))
    with pytest.raises(np.linalg.LinAlgError):
        fit_su_liu(d)


@pytest.mark.parametrize("p", [1, 4])
def test_grid_dimension_limits(p):
    with pytest.raises(ValueError):
        grid_search(make_normal(p=p), 0.2)


def test_grid_sizes_and_norms():
    for p, m in ((2, 2000), (3, 20000)):
        G = direction_grid(p)
        assert G.shape == (m, p)
        np.testing.assert_allclose(np.linalg.norm(G, axis=1), 1.0, atol=UNIT)


def test_grid_finds_informative_axis():
    rng = np.random.default_rng(7)
    # marker 1 separates perfectly, marker 2 is pure noise
    d = Dataset(np.column_stack([rng.normal(10, 1, 400), rng.normal(size=400)]), rng.normal(size=(500, 2)))
    m = grid_search(d, 0.2)
    step = 2 * np.pi / 2000
    angle = np.arctan2(m.theta[1], m.theta[0])
    assert min(abs(angle), abs(abs(angle) - np.pi)) <= step + 1e-12


def test_grid_equals_brute_force_small():
    cases = np.array([[0.0, 1.0], [1.0, 2.0], [2.0, -1.0]])
    controls = np.array([[0.5, 0.0], [-1.0, 1.0], [1.0, -2.0]])
    d = Dataset(cases, controls)
    G = direction_grid(2, 360)
    best = max(
        range(360),
        key=lambda i: (empirical_tpr(G[i], threshold_for_fpr(G[i], controls, 0.4), cases), -i),
    )
    m = grid_search(d, 0.4, resolution=360, chunk=50)
    np.testing.assert_array_equal(m.theta, G[best])


def test_grid_dominates_other_methods_in_sample():
    d = make_normal(80, 90, p=2, seed=8)
    t = 0.2
    g = grid_search(d, t)
    for m in (fit_logistic(d), fit_robust_logistic(d), fit_su_liu(d)):
        tpr = empirical_tpr(m.theta, threshold_for_fpr(m.theta, d.controls, t), d.cases)
        assert g.notes["train_tpr"] >= tpr - 1.0 / d.n1


def test_quantile_rank_used_by_grid():
    assert _quantile_rank(10, 0.2) == 8


def test_quadratic_identity_case():
    q = quadratic_lr([0, 0], [1, 0], np.eye(2), 1.0)
    b = np.array(q.beta)
    # half of the expanded exponent: b1 = S11 mu1 / sigma2, b0 = -S11 mu1^2 / (2 sigma2)
    np.testing.assert_allclose(b, [-0.5, 1.0, 0.0, 0.0, 0.0, 0.0], atol=1e-15)


def test_quadratic_curvature_terms():
    b = quadratic_lr([0, 0], [0, 0], np.eye(2), 2.0).beta
    assert b[3] == 0.0 and b[4] == pytest.approx(0.25) and b[5] == pytest.approx(0.25)


def test_quadratic_rejects_bad_inputs():
    with pytest.raises(ValueError):
        quadratic_lr([0, 0], [1, 1], np.array([[1.0, 2.0], [2.0, 1.0]]), 2.0)
    with pytest.raises(ValueError):
        quadratic_lr([0, 0], [1, 1], np.eye(2), 0.0)


def test_quadratic_rank_matches_density_ratio():
    rng = np.random.default_rng(10)
    L = rng.normal(size=(2, 2))
    S = L @ L.T + 0.5 * np.eye(2)
    mu1 = rng.normal(size=2)
    q = quadratic_lr([0, 0], mu1, S, 3.0)
    X = rng.normal(scale=2.0, size=(500, 2))
    ratio = multivariate_normal(mu1, 3.0 * S).pdf(X) / multivariate_normal([0, 0], S).pdf(X)
    assert spearmanr(np.exp(q(X)), ratio).statistic == pytest.approx(1.0, abs=1e-12)
