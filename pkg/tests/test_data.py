import numpy as np
import pytest

import svmbalance as sb
from svmbalance.data import group_sums


def test_validate_accepts_clean_dataset():
    ds = sb.make_dataset(np.eye(4), [1, 1, 0, 0])
    assert sb.validate(ds).ok


def test_validate_flags_single_class():
    ds = sb.make_dataset(np.eye(4), [1, 1, 1, 1])
    report = sb.validate(ds)
    assert any("no control units" in v for v in report.violations)


def test_validate_flags_nonfinite_covariate():
    X = np.eye(4)
    X[2, 1] = np.nan
    report = sb.validate(sb.make_dataset(X, [1, 1, 0, 0]))
    assert any("non-finite covariate" in v for v in report.violations)


def test_validate_flags_nonfinite_outcome_and_tiny_n():
    ds = sb.make_dataset([[1.0]], [1], Y=[np.inf])
    report = sb.validate(ds)
    assert not report.ok
    assert any("at least 2 units" in v for v in report.violations)
    assert any("non-finite outcome" in v for v in report.violations)


def test_w_derived_from_t():
    ds = sb.make_dataset(np.eye(4), [1, 0, 1, 0])
    assert np.array_equal(ds.W, [1, -1, 1, -1])


def test_normalize_simplex_uniform():
    W = np.array([1, 1, -1, -1])
    out = sb.normalize_simplex(np.ones(4), W)
    assert np.allclose(out.alpha, 0.5)
    assert out.normalized


def test_normalize_simplex_already_normalized():
    W = np.array([1, 1, -1, -1])
    out = sb.normalize_simplex(np.array([1.0, 0.0, 0.5, 0.5]), W)
    assert np.allclose(out.alpha, [1.0, 0.0, 0.5, 0.5])


def test_normalize_simplex_zero_sum_errors():
    with pytest.raises(ValueError, match="zero weight sum"):
        sb.normalize_simplex(np.zeros(4), np.array([1, 1, -1, -1]))


def test_normalize_simplex_unbalanced_errors():
    with pytest.raises(ValueError, match="unbalanced"):
        sb.normalize_simplex(np.array([1.0, 1.0, 0.5, 0.5]),
                             np.array([1, 1, -1, -1]))


def test_normalize_simplex_idempotent_and_ratio_preserving():
    rng = np.random.default_rng(1)
    for _ in range(25):
        n = int(rng.integers(4, 20))
        W = np.where(rng.random(n) < 0.5, 1, -1)
        if not (W > 0).any() or not (W < 0).any():
            continue
        a = rng.random(n)
        # impose group-sum balance
        st, sc = group_sums(a, W)
        if sc == 0 or st == 0:
            continue
        a[W < 0] *= st / sc
        once = sb.normalize_simplex(a, W)
        twice = sb.normalize_simplex(once, W)
        assert np.allclose(once.alpha, twice.alpha, atol=1e-14)
        nz = (a > 1e-12) & (np.roll(a, 1) > 1e-12)
        ratio_before = a / np.roll(a, 1)
        ratio_after = once.alpha / np.roll(once.alpha, 1)
        assert np.allclose(ratio_before[nz], ratio_after[nz], rtol=1e-12)
        st2, sc2 = group_sums(once.alpha, W)
        assert st2 == pytest.approx(1.0, abs=1e-12)
        assert sc2 == pytest.approx(1.0, abs=1e-12)


def test_load_csv_roundtrip(tmp_path):
    import pandas as pd
    df = pd.DataFrame({
        "x1": [0.1, 0.2, 0.3, 0.4],
        "x2": [1.0, 0.0, 1.0, 0.0],
        "treat": [1, 1, 0, 0],
        "y": [2.0, 1.0, 0.0, 1.0],
        "label": ["a", "b", "c", "d"],
    })
    path = tmp_path / "toy.csv"
    df.to_csv(path, index=False)
    ds = sb.load_csv(path, "treat", outcome="y")
    assert ds.names == ("x1", "x2")  # non-numeric column ignored
    assert ds.n_treated == 2 and ds.n_control == 2
    assert np.allclose(ds.Y, df["y"])


def test_load_csv_missing_column(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(sb.DataValidationError):
        sb.load_csv(path, "treat")


def test_load_csv_non_binary_treatment(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text("x,t\n1.0,2\n2.0,0\n")
    with pytest.raises(sb.DataValidationError, match="0/1"):
        sb.load_csv(path, "t")


def test_dataset_arrays_frozen():
    ds = sb.make_dataset(np.eye(3), [1, 0, 0])
    with pytest.raises(ValueError):
        ds.X[0, 0] = 5.0
