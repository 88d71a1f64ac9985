"""Balance vs sample-size frontier built from a regularization path."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .balance import ess_kish, normed_diff_in_means, sdim, weighted_mmd
from .data import normalize_simplex
from .errors import InfeasibleCriterionError
from .estimation import EffectEstimate, effect_estimate
from .path import RegularizationPath
from .solvers import q_array

CRITERIA = ("balance", "elbow", "imbalance", "ess_target",
            "normed_dim_target", "sdim_cap")


@dataclass(frozen=True)
class FrontierPoint:
    lam: float
    weight_sum: float
    ess: float
    mmd: float
    normed_dim: float
    sdim: np.ndarray | None = None
    estimate: EffectEstimate | None = None

    def to_row(self) -> dict:
        row = {
            "lambda": self.lam,
            "weight_sum": self.weight_sum,
            "mmd": self.mmd,
            "normed_dim": self.normed_dim,
            "ess": self.ess,
        }
        if self.estimate is not None:
            row["tau_hat"] = self.estimate.tau_hat
            row["se"] = self.estimate.se
        return row


def build_frontier(path: RegularizationPath, Q, W, Y=None, X=None,
                   estimand="sate") -> list[FrontierPoint]:
    """One frontier point per breakpoint, ordered by decreasing lambda.

    Balance metrics use simplex-normalized weights so they are comparable
    across lambda; ``weight_sum`` reports the raw dual weights. Estimates
    are attached when an outcome vector is supplied, and per-covariate
    standardized differences when the design matrix is supplied.
    """
    Q = q_array(Q)
    W = np.asarray(W)
    points = []
    for k in range(path.n_breakpoints):
        lam = float(path.lambdas[k])
        a = path.alphas[k]
        tilde = normalize_simplex(a, W)
        est = None
        if Y is not None:
            est = effect_estimate(Y, tilde, W, lam=lam, estimand=estimand)
        points.append(FrontierPoint(
            lam=lam,
            weight_sum=float(a.sum()),
            ess=ess_kish(tilde, W),
            mmd=weighted_mmd(tilde, Q),
            normed_dim=(normed_diff_in_means(tilde, X, W)
                        if X is not None else float("nan")),
            sdim=sdim(X, tilde, W) if X is not None else None,
            estimate=est,
        ))
    return points


def kneedle_elbow(points, sensitivity: float = 1.0):
    """Knee of the (mmd, weight_sum) trade-off curve, or None.

    Standard kneedle on the min-max normalized curve with x = mmd ascending:
    a knee is a local maximum of the difference y_n - x_n that the curve
    falls away from by more than sensitivity * mean x-spacing. Flat or
    straight curves yield None (callers fall back to the best-balance point).
    """
    if len(points) < 3:
        raise ValueError("need at least 3 frontier points for knee detection")
    x = np.array([p.mmd for p in points])
    y = np.array([p.weight_sum for p in points])
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    if x[-1] - x[0] <= 0 or y.max() - y.min() <= 0:
        return None
    xn = (x - x[0]) / (x[-1] - x[0])
    yn = (y - y.min()) / (y.max() - y.min())
    d = yn - xn
    threshold_drop = sensitivity * float(np.mean(np.diff(xn)))
    best = None
    k = len(d)
    for i in range(1, k - 1):
        if not (d[i] > d[i - 1] and d[i] >= d[i + 1]):
            continue
        thresh = d[i] - threshold_drop
        for j in range(i + 1, k):
            if d[j] > d[i]:
                break  # a higher local max supersedes this candidate
            if d[j] < thresh:
                best = i
                break
        if best is not None:
            break
    if best is None:
        return None
    return int(order[best])


def select(points, criterion: str, target: float | None = None) -> FrontierPoint:
    """Pick one frontier point by a named rule.

    balance: minimum discrepancy; imbalance: the initial (largest-lambda)
    point; elbow: kneedle knee with minimum-discrepancy fallback;
    ess_target / normed_dim_target: nearest by |metric - target| with ties
    to larger lambda; sdim_cap: largest-weight-sum point with every
    standardized difference under the cap.
    """
    if not points:
        raise InfeasibleCriterionError("empty frontier")
    if criterion == "imbalance":
        return points[0]
    if criterion == "balance":
        vals = [p.mmd for p in points]
        return points[int(np.argmin(vals))]
    if criterion == "elbow":
        idx = kneedle_elbow(points) if len(points) >= 3 else None
        if idx is None:
            return select(points, "balance")
        return points[idx]
    if criterion in ("ess_target", "normed_dim_target"):
        if target is None:
            raise InfeasibleCriterionError(f"{criterion} requires a target value")
        key = "ess" if criterion == "ess_target" else "normed_dim"
        gaps = [abs(getattr(p, key) - target) for p in points]
        return points[int(np.argmin(gaps))]  # first minimum = larger lambda
    if criterion == "sdim_cap":
        cap = 0.1 if target is None else float(target)
        feasible = [p for p in points
                    if p.sdim is not None and np.max(np.abs(p.sdim)) < cap]
        if not feasible:
            worst = None
            with_sdim = [p for p in points if p.sdim is not None]
            if with_sdim:
                best_p = min(with_sdim, key=lambda p: np.max(np.abs(p.sdim)))
                worst = int(np.argmax(np.abs(best_p.sdim)))
            raise InfeasibleCriterionError(
                f"no frontier point has all |sdim| < {cap}"
                + (f"; binding covariate index {worst}" if worst is not None else "")
            )
        return max(feasible, key=lambda p: p.weight_sum)
    raise InfeasibleCriterionError(f"unknown criterion {criterion!r}")


def write_frontier_csv(points, fileobj):
    """One CSV row per breakpoint: lambda, weight sum, balance metrics, ESS."""
    fields = ["lambda", "weight_sum", "mmd", "normed_dim", "ess"]
    if any(p.estimate is not None for p in points):
        fields += ["tau_hat", "se"]
    writer = csv.DictWriter(fileobj, fieldnames=fields, extrasaction="ignore")
    writer.writeheader()
    for p in points:
        writer.writerow(p.to_row())
