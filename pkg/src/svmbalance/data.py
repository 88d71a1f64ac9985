"""Dataset and weight-vector containers plus their validation rules.

A :class:`Dataset` stores the covariate matrix ``X``, the 0/1 treatment
indicator ``T``, the derived sign labels ``W = 2T - 1`` and, optionally, an
outcome vector ``Y``. All arrays are frozen after construction so instances
can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DataValidationError

# Tolerance for treating the treated/control weight sums as equal,
# relative to max(1, total weight).
GROUP_SUM_TOL = 1e-8

# alpha_i > SUPPORT_TOL counts as support membership (used by coverage and
# support-size reporting; ties exactly at 0/1 are classified by tolerance).
SUPPORT_TOL = 1e-8


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Covariates, treatment labels and optional outcomes for N units."""

    X: np.ndarray
    T: np.ndarray
    W: np.ndarray
    Y: np.ndarray | None = None
    names: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def n_treated(self) -> int:
        return int(np.sum(self.T == 1))

    @property
    def n_control(self) -> int:
        return int(np.sum(self.T == 0))

    @property
    def treated(self) -> np.ndarray:
        return np.flatnonzero(self.T == 1)

    @property
    def control(self) -> np.ndarray:
        return np.flatnonzero(self.T == 0)


def make_dataset(X, T, Y=None, names=None) -> Dataset:
    """Build a Dataset, deriving W = 2T - 1 and freezing the arrays."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    T = np.asarray(T)
    T = T.astype(int)
    W = 2 * T - 1
    if Y is not None:
        Y = np.asarray(Y, dtype=float)
    if names is None:
        names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
    return Dataset(
        X=_frozen(X),
        T=_frozen(T),
        W=_frozen(W),
        Y=None if Y is None else _frozen(Y),
        names=tuple(names),
    )


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_if_invalid(self):
        if self.violations:
            raise DataValidationError("; ".join(self.violations))


def validate(dataset: Dataset) -> ValidationReport:
    """Check Dataset invariants and report every violation found."""
    v: list[str] = []
    X, T, W, Y = dataset.X, dataset.T, dataset.W, dataset.Y
    n = X.shape[0]
    if n < 2:
        v.append(f"need at least 2 units, got {n}")
    if T.shape[0] != n:
        v.append("treatment length does not match covariate rows")
    if not np.isin(T, (0, 1)).all():
        v.append("treatment indicator must be 0/1")
    if not np.array_equal(W, 2 * T - 1):
        v.append("sign labels W inconsistent with W = 2T - 1")
    if not (T == 1).any():
        v.append("no treated units")
    if not (T == 0).any():
        v.append("no control units")
    if not np.isfinite(X).all():
        v.append("non-finite covariate")
    if Y is not None:
        if Y.shape[0] != n:
            v.append("outcome length does not match covariate rows")
        elif not np.isfinite(Y).all():
            v.append("non-finite outcome")
    return ValidationReport(tuple(v))


@dataclass(frozen=True)
class WeightVector:
    """Per-unit weights; ``normalized`` marks simplex scaling (each group sums to 1)."""

    alpha: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alpha", _frozen(np.asarray(self.alpha, dtype=float)))

    @property
    def total(self) -> float:
        return float(self.alpha.sum())

    def support(self, tol: float = SUPPORT_TOL) -> np.ndarray:
        return np.flatnonzero(self.alpha > tol)


def weights_of(alpha) -> np.ndarray:
    """Accept a WeightVector or a plain array and return the value array."""
    if isinstance(alpha, WeightVector):
        return alpha.alpha
    return np.asarray(alpha, dtype=float)


def group_sums(alpha, W) -> tuple[float, float]:
    a = weights_of(alpha)
    W = np.asarray(W)
    return float(a[W > 0].sum()), float(a[W < 0].sum())


def normalize_simplex(alpha, W) -> WeightVector:
    """Rescale weights so the treated and control groups each sum to one.

    Uses a_tilde = 2a / sum(a), which lands on the simplex set exactly when
    the group sums are balanced (the SVM equality constraint).
    """
    a = weights_of(alpha)
    total = float(a.sum())
    if total <= 0.0:
        raise ValueError("zero weight sum")
    st, sc = group_sums(a, W)
    if abs(st - sc) > GROUP_SUM_TOL * max(1.0, total):
        raise ValueError(
            f"unbalanced group sums beyond tolerance: treated {st:.3e} vs control {sc:.3e}"
        )
    return WeightVector(2.0 * a / total, normalized=True)


def load_csv(path, treatment, outcome=None, covariates=None) -> Dataset:
    """Ingest a CSV file with a header row into a Dataset.

    ``covariates`` defaults to every remaining numeric column; non-numeric
    columns are ignored. The treatment column must be 0/1-coded.
    """
    df = pd.read_csv(path)
    if treatment not in df.columns:
        raise DataValidationError(f"treatment column {treatment!r} not in CSV header")
    if outcome is not None and outcome not in df.columns:
        raise DataValidationError(f"outcome column {outcome!r} not in CSV header")
    if covariates is None:
        skip = {treatment} | ({outcome} if outcome else set())
        covariates = [
            c for c in df.columns
            if c not in skip and pd.api.types.is_numeric_dtype(df[c])
        ]
    else:
        missing = [c for c in covariates if c not in df.columns]
        if missing:
            raise DataValidationError(f"covariate columns not found: {missing}")
    if not covariates:
        raise DataValidationError("no usable covariate columns")
    try:
        X = df[list(covariates)].to_numpy(dtype=float)
        T = df[treatment].to_numpy(dtype=float)
        Y = df[outcome].to_numpy(dtype=float) if outcome else None
    except (TypeError, ValueError) as exc:
        raise DataValidationError(f"non-numeric data in selected columns: {exc}") from exc
    if not np.isin(T[np.isfinite(T)], (0.0, 1.0)).all():
        raise DataValidationError("treatment column must be coded 0/1")
    ds = make_dataset(X, T.astype(int), Y=Y, names=covariates)
    validate(ds).raise_if_invalid()
    return ds
