"""Balance and sample-size diagnostics for a weight vector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import SUPPORT_TOL, weights_of
from .solvers import q_array


@dataclass(frozen=True)
class BalanceReport:
    """Per-lambda balance summary serialized into path CSV / diagnose JSON."""

    mmd: float
    normed_dim: float
    sdim: np.ndarray | None
    weight_sum: float
    ess: float
    lam: float

    def to_dict(self) -> dict:
        d = {
            "lambda": self.lam,
            "weight_sum": self.weight_sum,
            "ess": self.ess,
            "mmd": self.mmd,
            "normed_dim": self.normed_dim,
        }
        if self.sdim is not None:
            d["sdim_max_abs"] = float(np.max(np.abs(self.sdim)))
        return d


def weighted_mmd(alpha, Q) -> float:
    """Weighted discrepancy sqrt(a'Qa) between the reweighted groups."""
    a = weights_of(alpha)
    Q = q_array(Q)
    val = float(a @ Q @ a)
    scale = max(1.0, float(np.abs(np.diag(Q)).max(initial=0.0)) * float(a @ a))
    if val < -1e-10 * scale:
        raise ValueError(f"quadratic form is negative ({val:.3e}); Q is not PSD")
    return float(np.sqrt(max(val, 0.0)))


def normed_diff_in_means(alpha, X, W) -> float:
    """Euclidean norm of the weighted treated-control covariate mean gap."""
    a = weights_of(alpha)
    X = np.asarray(X, dtype=float)
    W = np.asarray(W, dtype=float)
    return float(np.linalg.norm(X.T @ (a * W)))


def ess_kish(alpha, W) -> float:
    """Kish effective sample size, computed per group and summed."""
    a = weights_of(alpha)
    W = np.asarray(W)
    total = 0.0
    for mask in (W > 0, W < 0):
        s = float(a[mask].sum())
        s2 = float((a[mask] ** 2).sum())
        if s <= 0.0 or s2 <= 0.0:
            raise ValueError("zero weight sum in one group")
        total += s * s / s2
    return total


def sdim(X, alpha, W) -> np.ndarray:
    """Standardized difference-in-means per covariate.

    Weighted mean gap divided by the unweighted pooled standard deviation
    sqrt((s_T^2 + s_C^2)/2); columns with zero pooled sd report 0.
    """
    a = weights_of(alpha)
    X = np.asarray(X, dtype=float)
    W = np.asarray(W)
    t, c = W > 0, W < 0
    st = float(a[t].sum())
    sc = float(a[c].sum())
    if st <= 0 or sc <= 0:
        raise ValueError("zero weight sum in one group")
    mean_t = X[t].T @ (a[t] / st)
    mean_c = X[c].T @ (a[c] / sc)
    var_t = X[t].var(axis=0, ddof=1) if t.sum() > 1 else np.zeros(X.shape[1])
    var_c = X[c].var(axis=0, ddof=1) if c.sum() > 1 else np.zeros(X.shape[1])
    pooled = np.sqrt(0.5 * (var_t + var_c))
    out = np.zeros(X.shape[1])
    ok = pooled > 0
    out[ok] = (mean_t - mean_c)[ok] / pooled[ok]
    return out


def coverage(alpha_svm, selection) -> float:
    """Fraction of selected units that carry positive dual weight.

    Returns 0 when the selection is empty (degenerate integer solution).
    """
    a = weights_of(alpha_svm)
    s = np.asarray(selection)
    chosen = np.flatnonzero(s > 0)
    if len(chosen) == 0:
        return 0.0
    return float(np.sum(a[chosen] > SUPPORT_TOL)) / float(len(chosen))


def balance_report(alpha, Q, W, X=None, lam=float("nan")) -> BalanceReport:
    """Assemble the full diagnostic record for one weight vector."""
    a = weights_of(alpha)
    return BalanceReport(
        mmd=weighted_mmd(a, Q),
        normed_dim=normed_diff_in_means(a, X, W) if X is not None else float("nan"),
        sdim=sdim(X, a, W) if X is not None else None,
        weight_sum=float(a.sum()),
        ess=ess_kish(a, W),
        lam=float(lam),
    )
