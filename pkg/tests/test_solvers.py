import numpy as np
import pytest

import svmbalance as sb
from conftest import random_problem
from oracles import brute_force_dual, brute_force_l2, grid_mmd_min


def test_solve_dual_identical_pair_keeps_both():
    # one treated and one control at the same point: perfect match, a = (1,1)
    K = np.full((2, 2), 3.0)
    qm = sb.q_matrix(K, np.array([1, -1]))
    sol = sb.solve_dual(qm.Q, np.array([1, -1]), lam=50.0)
    assert np.allclose(sol.weights, 1.0, atol=1e-10)
    assert sol.objective == pytest.approx(-2.0, abs=1e-10)


def test_solve_dual_single_class_errors():
    with pytest.raises(sb.SolverError, match="one class"):
        sb.solve_dual(np.eye(3), np.array([1, 1, 1]), 1.0)


def test_solve_dual_rejects_nonpositive_lambda():
    with pytest.raises(ValueError):
        sb.solve_dual(np.eye(2), np.array([1, -1]), 0.0)


def test_solve_dual_matches_brute_force_enumeration():
    rng = np.random.default_rng(11)
    for trial in range(12):
        n = 6
        X = rng.standard_normal((n, 2))
        W = np.array([1, 1, 1, -1, -1, -1])
        qm = sb.q_matrix(X @ X.T + 0.1 * np.eye(n), W)
        lam = float(rng.uniform(0.05, 3.0))
        sol = sb.solve_dual(qm.Q, W, lam)
        obj_star, alpha_star = brute_force_dual(qm.Q, W, lam)
        assert sol.objective == pytest.approx(obj_star, abs=1e-6)
        assert np.allclose(sol.weights, alpha_star, atol=1e-6)


def test_solve_dual_kkt_sets_consistent():
    ds, qm, _, _ = random_problem(21, kernel="rbf")
    sol = sb.solve_dual(qm.Q, ds.W, 0.5)
    a = sol.weights
    assert np.all(a[sol.outside_set] <= 1e-7)
    assert np.all(a[sol.inside_set] >= 1 - 1e-7)
    assert abs(float(ds.W @ a)) < 1e-9
    assert sol.kkt.max_residual < 1e-8


def test_solve_dual_equals_init_above_lambda_max():
    for seed in range(5):
        ds, qm, _, _ = random_problem(seed + 40, kernel="rbf")
        init = sb.solve_init(qm.Q, ds.W)
        if init.degenerate:
            continue
        for factor in (1.0, 1.7, 4.0):
            sol = sb.solve_dual(qm.Q, ds.W, init.lam * factor)
            assert np.allclose(sol.weights, init.weights, atol=1e-8)


def test_solve_init_exact_pairs_all_ones():
    X = np.array([[0.0, 1.0], [2.0, -1.0], [0.0, 1.0], [2.0, -1.0]])
    W = np.array([1, 1, -1, -1])
    qm = sb.q_matrix(X @ X.T, W)
    init = sb.solve_init(qm.Q, W)
    assert np.allclose(init.weights, 1.0)
    assert init.degenerate  # exact balance: solution constant in lambda


def test_solve_init_symmetric_controls_split_weight():
    # one treated at 0, controls at +1/-1: symmetric halves minimize a'Qa
    X = np.array([[0.0], [1.0], [-1.0]])
    W = np.array([1, -1, -1])
    qm = sb.q_matrix(X @ X.T, W)
    init = sb.solve_init(qm.Q, W)
    assert init.weights[0] == pytest.approx(1.0)
    assert np.allclose(init.weights[1:], 0.5, atol=1e-9)


def test_solve_init_duplicate_control_takes_all_weight():
    X = np.array([[1.0, 2.0], [1.0, 2.0], [-3.0, 0.5]])
    W = np.array([1, -1, -1])
    qm = sb.q_matrix(X @ X.T, W)
    init = sb.solve_init(qm.Q, W)
    assert init.weights[1] == pytest.approx(1.0, abs=1e-9)
    assert init.weights[2] == pytest.approx(0.0, abs=1e-9)


def test_solve_init_weight_sum_is_twice_minority():
    for seed in range(6):
        ds, qm, _, _ = random_problem(seed, kernel="linear")
        init = sb.solve_init(qm.Q, ds.W)
        expected = 2.0 * min(ds.n_treated, ds.n_control)
        assert init.weights.sum() == pytest.approx(expected, abs=1e-8)


def test_solve_init_anchors_minority_class_regardless_of_label():
    # flip labels: the smaller group is anchored at 1 either way
    rng = np.random.default_rng(3)
    X = rng.standard_normal((12, 3))
    T = np.array([1] * 4 + [0] * 8)
    ds = sb.make_dataset(X, T)
    qm = sb.q_matrix(X @ X.T, ds.W)
    init = sb.solve_init(qm.Q, ds.W)
    assert np.allclose(init.weights[:4], 1.0)
    ds_flip = sb.make_dataset(X, 1 - T)
    qm_flip = sb.q_matrix(X @ X.T, ds_flip.W)
    init_flip = sb.solve_init(qm_flip.Q, ds_flip.W)
    assert np.allclose(init_flip.weights[:4], 1.0)
    # Q is invariant under the relabeling, so the solutions agree
    assert np.allclose(init.weights, init_flip.weights, atol=1e-9)


def test_solve_mmd_min_identical_pair_zero():
    K = np.full((2, 2), 2.0)
    qm = sb.q_matrix(K, np.array([1, -1]))
    wv = sb.solve_mmd_min(qm.Q, np.array([1, -1]))
    assert sb.weighted_mmd(wv, qm.Q) == pytest.approx(0.0, abs=1e-8)
    assert np.allclose(wv.alpha, 1.0)


def test_solve_mmd_min_symmetric_controls():
    X = np.array([[0.0], [1.0], [-1.0]])
    W = np.array([1, -1, -1])
    qm = sb.q_matrix(X @ X.T, W)
    wv = sb.solve_mmd_min(qm.Q, W)
    assert np.allclose(wv.alpha[1:], 0.5, atol=1e-9)
    assert sb.weighted_mmd(wv, qm.Q) == pytest.approx(0.0, abs=1e-9)


def test_solve_mmd_min_matches_grid_search():
    rng = np.random.default_rng(13)
    for trial in range(5):
        X = rng.standard_normal((6, 2))
        W = np.array([1, 1, 1, -1, -1, -1])
        spec = sb.KernelSpec("rbf", gamma=float(rng.uniform(0.3, 1.5)))
        K = sb.gram(X, spec)
        qm = sb.q_matrix(K, W)
        wv = sb.solve_mmd_min(qm.Q, W)
        ours = sb.weighted_mmd(wv, qm.Q)
        grid = grid_mmd_min(qm.Q, [0, 1, 2], [3, 4, 5], step=0.02)
        assert ours <= grid + 1e-3


def test_solve_l2_zero_q_gives_inverse_lambda():
    W = np.array([1, -1, 1, -1])
    wv = sb.solve_l2_dual(np.zeros((4, 4)), W, lam=2.5)
    assert np.allclose(wv.alpha, 1 / 2.5, atol=1e-9)


def test_solve_l2_large_lambda_shrinks_to_zero():
    ds, qm, _, _ = random_problem(8, kernel="linear")
    small = sb.solve_l2_dual(qm.Q, ds.W, lam=1e6)
    assert np.all(small.alpha <= 2e-6)


def test_solve_l2_matches_support_enumeration():
    rng = np.random.default_rng(17)
    for trial in range(8):
        X = rng.standard_normal((4, 2))
        W = np.array([1, 1, -1, -1])
        qm = sb.q_matrix(X @ X.T, W)
        lam = float(rng.uniform(0.2, 2.0))
        wv = sb.solve_l2_dual(qm.Q, W, lam)
        obj = (0.5 * wv.alpha @ qm.Q @ wv.alpha - wv.alpha.sum()
               + 0.5 * lam * wv.alpha @ wv.alpha)
        obj_star, alpha_star = brute_force_l2(qm.Q, W, lam)
        assert obj == pytest.approx(obj_star, abs=1e-6)
        assert np.allclose(wv.alpha, alpha_star, atol=1e-6)


def test_kkt_report_clean_on_hand_built_point():
    # both units on the margin: Qa + W a0 = lam exactly
    K = np.array([[2.0, 1.0], [1.0, 2.0]])
    W = np.array([1, -1])
    qm = sb.q_matrix(K, W)
    alpha = np.array([1.0, 1.0])
    lam = 1.0
    qa = qm.Q @ alpha
    alpha0 = lam - qa[0]
    sol = sb.solvers.make_solution(qm.Q, W, lam, alpha, alpha0)
    rep = sb.kkt_report(sol, qm.Q, W)
    assert rep.stationarity == pytest.approx(0.0, abs=1e-14)
    assert rep.balance == 0.0


def test_kkt_report_detects_perturbation():
    ds, qm, _, _ = random_problem(30, kernel="rbf")
    sol = sb.solve_dual(qm.Q, ds.W, 0.7)
    good = sb.kkt_report(sol, qm.Q, ds.W).max_residual
    bumped = sol.weights.copy()
    free = [i for i in sol.margin_set if 0.1 < bumped[i] < 0.9]
    idx = free[0] if free else sol.margin_set[0]
    bumped[idx] += 1e-3
    worse = sb.solvers.make_solution(qm.Q, ds.W, 0.7, bumped, sol.alpha0)
    assert worse.kkt.max_residual > max(good * 10, 1e-5)


def test_balance_term_improves_as_lambda_decreases():
    # the normalized discrepancy can only improve under a stronger penalty;
    # by the envelope bound the raw objective moves the other way
    ds, qm, _, _ = random_problem(31, kernel="rbf")
    lams = (3.0, 1.0, 0.3, 0.1, 0.03)
    sols = [sb.solve_dual(qm.Q, ds.W, lam) for lam in lams]
    mmds = [sb.weighted_mmd(sb.normalize_simplex(s.weights, ds.W), qm.Q)
            for s in sols]
    assert all(mmds[i] >= mmds[i + 1] - 1e-8 for i in range(len(mmds) - 1))
    objs = [s.objective for s in sols]
    assert all(objs[i] <= objs[i + 1] + 1e-12 for i in range(len(objs) - 1))
