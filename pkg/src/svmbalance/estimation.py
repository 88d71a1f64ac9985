"""Weighted effect estimation, variance, and bias decompositions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import SUPPORT_TOL, WeightVector, weights_of
from .balance import ess_kish, weighted_mmd

ESTIMANDS = ("sate", "satt")


@dataclass(frozen=True)
class EffectEstimate:
    tau_hat: float
    se: float
    ess: float
    lam: float
    estimand: str
    n_support: int

    @property
    def ci95(self) -> tuple[float, float]:
        return (self.tau_hat - 1.96 * self.se, self.tau_hat + 1.96 * self.se)

    def to_dict(self) -> dict:
        lo, hi = self.ci95
        return {
            "tau_hat": self.tau_hat,
            "se": self.se,
            "ci95": [lo, hi],
            "ess": self.ess,
            "lambda": self.lam,
            "estimand": self.estimand,
            "n_support": self.n_support,
        }


def _require_normalized(alpha, W):
    a = weights_of(alpha)
    W = np.asarray(W)
    if isinstance(alpha, WeightVector) and alpha.normalized:
        return a
    st = a[W > 0].sum()
    sc = a[W < 0].sum()
    if abs(st - 1.0) > 1e-8 or abs(sc - 1.0) > 1e-8:
        raise ValueError("weights must be simplex-normalized (each group sums to 1)")
    return a


def estimate(Y, alpha, W, lam=float("nan"), estimand="sate") -> EffectEstimate:
    """Weighted difference in mean outcomes between treated and control."""
    Y = np.asarray(Y, dtype=float)
    W = np.asarray(W)
    a = _require_normalized(alpha, W)
    tau = float(a[W > 0] @ Y[W > 0] - a[W < 0] @ Y[W < 0])
    return EffectEstimate(
        tau_hat=tau,
        se=float("nan"),
        ess=ess_kish(a, W),
        lam=float(lam),
        estimand=estimand,
        n_support=int((a > SUPPORT_TOL).sum()),
    )


def neyman_se(Y, alpha, W) -> float:
    """Conservative two-group weighted variance estimate (square root).

    se^2 = sum_T a_i^2 (Y_i - Ybar_T)^2 + sum_C a_j^2 (Y_j - Ybar_C)^2 with
    weighted group means; with uniform weights this reduces to
    sqrt(s_T^2/n_T + s_C^2/n_C) using divisor-n variances.
    """
    Y = np.asarray(Y, dtype=float)
    W = np.asarray(W)
    a = _require_normalized(alpha, W)
    var = 0.0
    for mask in (W > 0, W < 0):
        aw, yw = a[mask], Y[mask]
        if (aw > SUPPORT_TOL).sum() < 2:
            raise ValueError("need at least 2 positively weighted units per group")
        ybar = float(aw @ yw)
        var += float(aw ** 2 @ (yw - ybar) ** 2)
    return float(np.sqrt(var))


def effect_estimate(Y, alpha, W, lam=float("nan"), estimand="sate") -> EffectEstimate:
    """Point estimate plus Neyman standard error in one record."""
    point = estimate(Y, alpha, W, lam=lam, estimand=estimand)
    se = neyman_se(Y, alpha, W)
    return EffectEstimate(tau_hat=point.tau_hat, se=se, ess=point.ess,
                          lam=point.lam, estimand=estimand,
                          n_support=point.n_support)


def _eval_truth(f, X):
    if callable(f):
        return np.asarray(f(np.asarray(X, dtype=float)), dtype=float)
    return np.asarray(f, dtype=float)


def conditional_bias(alpha, X, W, f0, f1, estimand="sate") -> float:
    """Exact conditional bias of the weighted estimator under known truths.

    bias = sum_i a_i W_i f0(X_i) + sum_i (a_i T_i - v_i) tau(X_i), with
    tau(x) = f1(x) - f0(x) and v_i = 1/N for the sample effect or T_i/n_T
    for the effect on the treated. ``f0``/``f1`` may be callables over rows
    of X or precomputed per-unit arrays.
    """
    a = weights_of(alpha)
    W = np.asarray(W)
    T = (W > 0).astype(float)
    n = len(W)
    if estimand not in ESTIMANDS:
        raise ValueError(f"estimand must be one of {ESTIMANDS}")
    f0v = _eval_truth(f0, X)
    f1v = _eval_truth(f1, X)
    tau_x = f1v - f0v
    if estimand == "sate":
        v = np.full(n, 1.0 / n)
    else:
        v = T / T.sum()
    return float(a * W @ f0v + (a * T - v) @ tau_x)


def conditional_bias_outcome_form(alpha, X, W, f0, f1, estimand="sate") -> float:
    """Same bias via the two-outcome decomposition; used to cross-check."""
    a = weights_of(alpha)
    W = np.asarray(W)
    T = (W > 0).astype(float)
    n = len(W)
    f0v = _eval_truth(f0, X)
    f1v = _eval_truth(f1, X)
    v = np.full(n, 1.0 / n) if estimand == "sate" else T / T.sum()
    return float((a * T - v) @ f1v + (v - a * (1.0 - T)) @ f0v)


def worst_case_bias(alpha, Q) -> float:
    """Largest bias over unit-norm prognostic functions; equals the weighted
    discrepancy sqrt(a'Qa) exactly."""
    return weighted_mmd(alpha, Q)


def satt_weights(alpha, W) -> WeightVector:
    """Fix treated weights to 1/n_T (effect-on-the-treated mode); control
    weights are simplex-normalized."""
    a = weights_of(alpha).copy()
    W = np.asarray(W)
    t, c = W > 0, W < 0
    sc = a[c].sum()
    if sc <= 0:
        raise ValueError("zero control weight sum")
    a[t] = 1.0 / t.sum()
    a[c] = a[c] / sc
    return WeightVector(a, normalized=True)
