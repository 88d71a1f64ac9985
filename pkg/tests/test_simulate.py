import numpy as np
import pytest

import svmbalance as sb


def test_sim_a_truth_constants():
    ds, truth = sb.gen_sim_a(50, 0)
    assert truth.tau_true == -0.4
    assert np.all(truth.per_unit_tau == -0.4)
    assert truth.noise_sd == pytest.approx(np.sqrt(0.1))
    assert ds.X.shape == (50, 10)
    assert ds.Y is not None


def test_sim_a_bit_reproducible():
    ds1, _ = sb.gen_sim_a(200, 123)
    ds2, _ = sb.gen_sim_a(200, 123)
    assert np.array_equal(ds1.X, ds2.X)
    assert np.array_equal(ds1.T, ds2.T)
    assert np.array_equal(ds1.Y, ds2.Y)
    ds3, _ = sb.gen_sim_a(200, 124)
    assert not np.array_equal(ds1.X, ds3.X)


def test_sim_a_assignment_rate_moderate():
    # large-sample check that the frozen coefficients give overlap
    ds, _ = sb.gen_sim_a(100_000, 7)
    rate = ds.T.mean()
    assert 0.2 < rate < 0.8


def test_sim_a_correlation_structure():
    ds, _ = sb.gen_sim_a(100_000, 8)
    C = np.corrcoef(ds.X.T)
    for a, b, rho in sb.simulate.SCENARIO_G["corr_pairs"]:
        assert C[a, b] == pytest.approx(rho, abs=0.02)
    # untouched pairs stay near zero
    assert abs(C[0, 1]) < 0.02


def test_sim_a_outcome_linear_in_truth():
    ds, truth = sb.gen_sim_a(500, 9)
    resid = ds.Y - (truth.f0(ds.X) + np.asarray(ds.T) * truth.tau_true)
    assert abs(resid.mean()) < 0.05
    assert resid.std() == pytest.approx(truth.noise_sd, rel=0.15)


def test_sim_b_transform_values_at_origin():
    # push the latent origin through the observation maps
    z = np.zeros((1, 10))
    x1 = np.exp(z[0, 0] / 2)
    x2 = z[0, 1] / (1 + np.exp(z[0, 0]))
    x3 = (z[0, 0] * z[0, 2] / 25 + 0.6) ** 3
    x4 = (z[0, 1] + z[0, 3] + 20) ** 2
    assert x1 == pytest.approx(1.0)
    assert x2 == pytest.approx(0.0)
    assert x3 == pytest.approx(0.216)
    assert x4 == pytest.approx(400.0)
    ds, truth = sb.gen_sim_b(5000, 3)
    Z = truth.latent
    assert np.allclose(ds.X[:, 0], np.exp(Z[:, 0] / 2))
    assert np.allclose(ds.X[:, 1], Z[:, 1] / (1 + np.exp(Z[:, 0])))
    assert np.allclose(ds.X[:, 2], (Z[:, 0] * Z[:, 2] / 25 + 0.6) ** 3)
    assert np.allclose(ds.X[:, 3], (Z[:, 1] + Z[:, 3] + 20) ** 2)
    assert np.allclose(ds.X[:, 4:], Z[:, 4:])


def test_sim_b_true_effect_is_ten():
    ds, truth = sb.gen_sim_b(20_000, 4)
    assert truth.tau_true == 10.0
    # per-unit effects average to the population value; their sd is ~54, so
    # allow a few standard errors at this sample size
    assert truth.per_unit_tau.mean() == pytest.approx(10.0, abs=2.0)


def test_sim_b_assignment_probability_at_origin():
    assert sb.simulate.expit(0.0) == 0.5


def test_sim_b_outcome_matches_displayed_model():
    ds, truth = sb.gen_sim_b(300, 5)
    Z = truth.latent
    load = 27.4 * Z[:, 0] + 13.7 * (Z[:, 1] + Z[:, 2] + Z[:, 3])
    mean = 200 + 10 * ds.T + (1.5 * ds.T - 0.5) * load
    resid = ds.Y - mean
    assert np.abs(resid).max() < 6.0  # N(0,1) noise only
    assert resid.std() == pytest.approx(1.0, rel=0.25)


def test_generators_reject_tiny_n():
    with pytest.raises(ValueError):
        sb.gen_sim_a(5, 0)
    with pytest.raises(ValueError):
        sb.gen_sim_b(9, 0)


def test_run_monte_carlo_single_rep_rows():
    spec = sb.MonteCarloSpec(scenario="a", n=60, kernel=sb.KernelSpec("linear"),
                             lambdas=(1.0, 0.1), reps=1, seed=0,
                             lambda_min=0.01)
    table = sb.run_monte_carlo(spec)
    lam_rows = table[table["tag"].str.startswith("lam=")]
    assert len(lam_rows) == 2
    assert set(table["tag"]) == {"lam=1", "lam=0.1", "unweighted",
                                 "imbalance", "balance"}
    assert (table["error"] == "").all()


def test_run_monte_carlo_deterministic():
    spec = sb.MonteCarloSpec(scenario="b", n=40, kernel=sb.KernelSpec("linear"),
                             lambdas=(0.5,), reps=3, seed=11, lambda_min=0.01)
    t1 = sb.run_monte_carlo(spec)
    t2 = sb.run_monte_carlo(spec)
    assert t1.equals(t2)


def test_sim_a_bias_bounded_by_discrepancy_times_coefficient_norm():
    # linear truth: |conditional bias| <= ||sd-scaled gamma|| * mmd by
    # Cauchy-Schwarz, since the bias is gamma' (weighted raw-covariate gap)
    # and the discrepancy is computed on standardized columns
    gamma = sb.simulate.SCENARIO_G["gamma"]
    for rep in range(8):
        ds, truth = sb.gen_sim_a(200, 300 + rep)
        qm, Xs, _ = sb.build_q(ds.X, ds.W, sb.KernelSpec("linear"))
        _, _, sds = sb.standardize(ds.X)
        wv = sb.solve_mmd_min(qm.Q, ds.W)
        bias = sb.conditional_bias(wv, ds.X, ds.W, truth.f0, truth.f1, "sate")
        bound = np.linalg.norm(gamma * sds) * sb.weighted_mmd(wv, qm.Q)
        assert abs(bias) <= bound + 1e-10


def test_summarize_monte_carlo():
    spec = sb.MonteCarloSpec(scenario="a", n=50, kernel=sb.KernelSpec("linear"),
                             lambdas=(0.5,), reps=4, seed=2, lambda_min=0.01)
    table = sb.run_monte_carlo(spec)
    summary = sb.summarize_monte_carlo(table)
    assert set(summary["tag"]) == set(table["tag"].unique())
    row = summary[summary["tag"] == "lam=0.5"].iloc[0]
    assert row["n_ok"] == 4
    assert np.isfinite(row["mean_bias"])
