import numpy as np
import pytest

import svmbalance as sb
from conftest import random_problem


def test_weighted_mmd_identical_weighted_samples_zero():
    K = np.full((2, 2), 1.5)
    qm = sb.q_matrix(K, np.array([1, -1]))
    assert sb.weighted_mmd(np.array([1.0, 1.0]), qm.Q) == pytest.approx(0.0, abs=1e-12)


def _uniform(W):
    a = np.where(W > 0, 1.0 / (W > 0).sum(), 1.0 / (W < 0).sum())
    return sb.WeightVector(a, normalized=True)


def test_weighted_mmd_uniform_equals_mean_difference_linear():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((14, 3))
    W = np.array([1] * 6 + [-1] * 8)
    qm = sb.q_matrix(X @ X.T, W)
    tilde = _uniform(W)
    direct = np.linalg.norm(X[W > 0].mean(axis=0) - X[W < 0].mean(axis=0))
    assert sb.weighted_mmd(tilde, qm.Q) == pytest.approx(direct, rel=1e-12)


def test_weighted_mmd_two_point_expansion():
    K = np.array([[2.0, 0.7], [0.7, 1.1]])
    qm = sb.q_matrix(K, np.array([1, -1]))
    expected = np.sqrt(K[0, 0] - 2 * K[0, 1] + K[1, 1])
    assert sb.weighted_mmd(np.array([1.0, 1.0]), qm.Q) == pytest.approx(expected)


def test_weighted_mmd_rejects_broken_psd():
    Q = np.array([[1.0, -2.0], [-2.0, 1.0]])  # indefinite
    with pytest.raises(ValueError, match="PSD"):
        sb.weighted_mmd(np.array([1.0, 1.0]), Q)


def test_weighted_mmd_scale_free_after_normalization():
    ds, qm, _, _ = random_problem(2, kernel="rbf")
    sol = sb.solve_dual(qm.Q, ds.W, 0.5)
    base = sb.weighted_mmd(sb.normalize_simplex(sol.weights, ds.W), qm.Q)
    for c in (0.3, 2.0, 17.0):
        scaled = sb.normalize_simplex(c * sol.weights, ds.W)
        assert sb.weighted_mmd(scaled, qm.Q) == pytest.approx(base, rel=1e-12)


def test_ess_kish_all_ones_is_n():
    W = np.array([1, 1, 1, -1, -1])
    assert sb.ess_kish(np.ones(5), W) == pytest.approx(5.0)


def test_ess_kish_one_unit_per_group():
    assert sb.ess_kish(np.array([1.0, 1.0]), np.array([1, -1])) == pytest.approx(2.0)


def test_ess_kish_mixed_weights():
    # treated (1, 0.5), control (1, 1): 1.5^2/1.25 + 4/2 = 3.8
    alpha = np.array([1.0, 0.5, 1.0, 1.0])
    W = np.array([1, 1, -1, -1])
    assert sb.ess_kish(alpha, W) == pytest.approx(3.8)


def test_ess_kish_zero_group_errors():
    with pytest.raises(ValueError, match="zero weight sum"):
        sb.ess_kish(np.array([1.0, 0.0]), np.array([1, -1]))


def test_ess_bounded_by_weight_sum_structure():
    # per group, (sum a)^2 / sum a^2 <= group size with equality at constant
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = int(rng.integers(4, 18))
        W = np.where(rng.random(n) < 0.5, 1, -1)
        if not (W > 0).any() or not (W < 0).any():
            continue
        a = rng.random(n) + 0.01
        ess = sb.ess_kish(a, W)
        assert ess <= n + 1e-12
    const = sb.ess_kish(np.full(6, 0.37), np.array([1, 1, 1, -1, -1, -1]))
    assert const == pytest.approx(6.0)


def test_sdim_identical_groups_zero():
    X = np.vstack([np.eye(3), np.eye(3)])
    W = np.array([1] * 3 + [-1] * 3)
    tilde = sb.normalize_simplex(np.ones(6), W)
    assert np.allclose(sb.sdim(X, tilde, W), 0.0, atol=1e-12)


def test_sdim_unit_gap_is_one():
    # single covariate, group means differ by exactly the pooled sd
    x_t = np.array([0.0, 2.0])
    sd = np.sqrt((x_t.var(ddof=1) + x_t.var(ddof=1)) / 2)
    X = np.concatenate([x_t, x_t + sd])[:, None]
    W = np.array([1, 1, -1, -1])
    tilde = sb.normalize_simplex(np.ones(4), W)
    out = sb.sdim(X, tilde, W)
    assert out[0] == pytest.approx(-1.0)


def test_sdim_matches_direct_formula():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((4, 2))
    W = np.array([1, 1, -1, -1])
    a = np.array([0.7, 0.3, 0.4, 0.6])
    out = sb.sdim(X, a, W)
    for d in range(2):
        mt = a[:2] @ X[:2, d]
        mc = a[2:] @ X[2:, d]
        pooled = np.sqrt((X[:2, d].var(ddof=1) + X[2:, d].var(ddof=1)) / 2)
        assert out[d] == pytest.approx((mt - mc) / pooled, rel=1e-12)


def test_sdim_constant_column_reports_zero():
    X = np.column_stack([np.ones(4), np.arange(4.0)])
    W = np.array([1, 1, -1, -1])
    tilde = sb.normalize_simplex(np.ones(4), W)
    assert sb.sdim(X, tilde, W)[0] == 0.0


def test_coverage_identical_supports():
    alpha = np.array([0.5, 0.0, 0.7, 0.0])
    sel = np.array([1, 0, 1, 0])
    assert sb.coverage(alpha, sel) == 1.0


def test_coverage_partial_overlap():
    alpha = np.array([0.0, 0.6, 0.6, 0.0])
    sel = np.array([1, 1, 0, 0])
    assert sb.coverage(alpha, sel) == 0.5


def test_coverage_empty_selection_zero():
    assert sb.coverage(np.array([0.5, 0.5]), np.zeros(2)) == 0.0


def test_normed_dim_equals_mmd_for_linear_kernel():
    for seed in range(8):
        ds, qm, Xs, _ = random_problem(seed + 60, kernel="linear")
        sol = sb.solve_dual(qm.Q, ds.W, 0.8)
        tilde = sb.normalize_simplex(sol.weights, ds.W)
        mmd = sb.weighted_mmd(tilde, qm.Q)
        ndim = sb.normed_diff_in_means(tilde, Xs, ds.W)
        # the squared forms agree to roundoff even at exact balance, where
        # the square root amplifies cancellation noise
        assert ndim ** 2 == pytest.approx(mmd ** 2, rel=1e-9, abs=1e-13)
        if mmd > 1e-6:
            assert ndim == pytest.approx(mmd, rel=1e-9)


def test_balance_report_roundtrip():
    ds, qm, Xs, _ = random_problem(70, kernel="rbf")
    tilde = _uniform(ds.W)
    rep = sb.balance_report(tilde, qm.Q, ds.W, X=Xs, lam=1.5)
    d = rep.to_dict()
    assert d["lambda"] == 1.5
    assert d["ess"] == pytest.approx(ds.n)
    assert "sdim_max_abs" in d
