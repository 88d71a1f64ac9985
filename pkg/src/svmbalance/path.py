"""Exact regularization path of the balancing dual.

The optimal weights a(L) and scaled intercept a0(L) are piecewise linear in
the regularization value L. Between breakpoints the active sets are fixed:
units on the margin (unit margin value) satisfy a linear KKT system

    [ Q_MM  W_M ] [ a_M ]   [ L*1 - Q_MI * 1 ]
    [ W_M'   0  ] [ a0  ] = [ -sum(W_I)      ]

whose solution is affine in L, while units inside the margin stay at 1 and
units outside stay at 0. Differentiating in L gives the per-segment slopes;
a breakpoint occurs when a margin weight reaches a bound or a bound unit's
margin value reaches 1. Tracking runs from the largest-weight-sum solution
at L_max down to ``lambda_min``, or stops early once no unit remains
strictly inside the margin (weights are then proportional to L and the
normalized solution no longer changes).

Degenerate ties are resolved one pivot at a time: simultaneous candidates
are processed lowest-index first with a minimum L decrement of 1e-14, and
each accepted breakpoint is re-solved and KKT-repaired so the tracked point
never drifts off the true solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PathError
from .solvers import (DualSolution, _ridge, _solve_bordered, make_solution,
                      q_array, solve_init)

DEFAULT_LAMBDA_MIN = 1e-3
MIN_DECREMENT = 1e-14
# relative tolerance for margin membership while tracking
TRACK_TOL = 1e-9
# threshold for re-opening a unit during KKT repair
REPAIR_TOL = 1e-7

EVENT_INIT = "init"
EVENT_ENTRY = "margin-entry"
EVENT_EXIT0 = "margin-exit-to-0"
EVENT_EXIT1 = "margin-exit-to-1"
EVENT_TERMINAL = "terminal"


@dataclass
class RegularizationPath:
    """Breakpoint solutions of the dual over a decreasing L grid.

    Breakpoint weights are stored densely (one N-vector per breakpoint), so
    memory grows as breakpoints x N; at 5,000-10,000 units this is a few
    hundred MB for long paths and negligible at test scale.
    """

    lambdas: np.ndarray
    alphas: np.ndarray
    alpha0s: np.ndarray
    events: list[str]
    event_units: list[int | None]
    terminal_lambda: float
    lambda_max: float
    termination: str
    Q: np.ndarray
    W: np.ndarray
    exact_balance: bool = False

    @property
    def n_breakpoints(self) -> int:
        return len(self.lambdas)

    def breakpoint_solution(self, k: int) -> DualSolution:
        return make_solution(self.Q, self.W, self.lambdas[k],
                             self.alphas[k], self.alpha0s[k])

    def solution_at(self, lam: float) -> DualSolution:
        return solution_at(self, lam)


def margin_system(margin_idx, Q, W):
    """Slopes (da/dL for the margin set, da0/dL) of the current segment."""
    Q = q_array(Q)
    W = np.asarray(W, dtype=float)
    margin_idx = np.asarray(margin_idx, dtype=int)
    k = len(margin_idx)
    if k == 0:
        return np.zeros(0), 0.0
    A = Q[np.ix_(margin_idx, margin_idx)]
    rhs = np.concatenate([np.ones(k), [0.0]])
    sol = _solve_bordered(A, W[margin_idx][:, None], rhs, ridge=_ridge(Q))
    return sol[:k], float(sol[k])


def _alpha0_bounds(Q, W, lam, alpha, status, qa=None):
    """Feasible intercept interval when the margin set is empty.

    Bounds come from requiring unit margins <= 1 on the inside set and
    >= 1 on the outside set; each bound is affine in L with slope +-1.
    """
    if qa is None:
        qa = Q @ alpha
    pos = W > 0
    one = status == 1
    zero = status == 0
    lo_c = np.where(one & ~pos, qa - lam, np.where(zero & pos, lam - qa, -np.inf))
    hi_c = np.where(one & pos, lam - qa, np.where(zero & ~pos, qa - lam, np.inf))
    return lo_c, hi_c


def _resolve_at(Q, W, lam, status, repair_rounds=30):
    """Solve the KKT system for the current sets at L, repairing the sets
    when the solved point violates a box or margin condition."""
    n = len(status)
    Wf = W.astype(float)
    ridge = _ridge(Q)
    for _ in range(repair_rounds):
        midx = np.flatnonzero(status == 2)
        a = np.where(status == 1, 1.0, 0.0)
        k = len(midx)
        if k:
            A = Q[np.ix_(midx, midx)]
            ones_idx = np.flatnonzero(status == 1)
            rhs = np.concatenate([
                lam - Q[np.ix_(midx, ones_idx)].sum(axis=1),
                [-float(Wf[ones_idx].sum())],
            ])
            sol = _solve_bordered(A, Wf[midx][:, None], rhs, ridge=ridge)
            am, alpha0 = sol[:k], float(sol[k])
            out_lo = am < -1e-9
            out_hi = am > 1.0 + 1e-9
            if out_lo.any() or out_hi.any():
                status[midx[out_lo]] = 0
                status[midx[out_hi]] = 1
                continue
            a[midx] = np.clip(am, 0.0, 1.0)
        else:
            lo_c, hi_c = _alpha0_bounds(Q, Wf, lam, a, status)
            lo, hi = float(lo_c.max()), float(hi_c.min())
            if lo > hi + 1e-12 * (1.0 + abs(lo)):
                status[int(np.argmax(lo_c))] = 2
                status[int(np.argmin(hi_c))] = 2
                continue
            alpha0 = 0.5 * (max(lo, -1e300) + min(hi, 1e300))

        margins = (Q @ a + Wf * alpha0) / lam
        scale = 1.0 + np.abs(margins)
        viol = ((status == 0) & (margins < 1.0 - REPAIR_TOL * scale)) | \
               ((status == 1) & (margins > 1.0 + REPAIR_TOL * scale))
        if not viol.any():
            return a, alpha0, status
        status[int(np.argmax(np.where(viol, np.abs(margins - 1.0), -np.inf)))] = 2
    raise PathError(
        "KKT repair did not converge while re-solving the active set",
        state={"lambda": lam, "status": status.copy()},
    )


def _scan_events(Q, W, lam, alpha, alpha0, status, b, b0):
    """Next breakpoint below ``lam``: (L_event, kind, unit) or None.

    Ties within 1e-12 are broken toward the lowest unit index. Pivots that
    must happen at the current L (a margin weight sitting on a bound with an
    outward slope, or a bound unit whose margin is pinned at 1 and moving
    into violation) are returned as immediate events at L - 1e-14.
    """
    Wf = W.astype(float)
    midx = np.flatnonzero(status == 2)
    cands: list[tuple[float, int, str]] = []

    # margin weights hitting a box bound
    for pos_k, i in enumerate(midx):
        bi = b[pos_k]
        ai = alpha[i]
        if bi > 1e-300:
            if ai <= MIN_DECREMENT * bi:
                cands.append((lam - MIN_DECREMENT, i, EVENT_EXIT0))
            else:
                cands.append((lam - ai / bi, i, EVENT_EXIT0))
        elif bi < -1e-300:
            room = 1.0 - ai
            if room <= MIN_DECREMENT * (-bi):
                cands.append((lam - MIN_DECREMENT, i, EVENT_EXIT1))
            else:
                cands.append((lam + room / bi, i, EVENT_EXIT1))

    # bound units reaching the margin: solve h_i(L') = L' with h affine in L
    h = Q @ alpha + Wf * alpha0
    g = (Q[:, midx] @ b + Wf * b0) if len(midx) else Wf * b0
    for i in np.flatnonzero(status != 2):
        denom = 1.0 - g[i]
        resid = h[i] - lam  # (margin - 1) * L
        if abs(resid) <= 1e-12 * lam:
            # pinned at the margin: entering only if moving into violation
            inward = denom < -1e-12 if status[i] == 0 else denom > 1e-12
            if inward:
                cands.append((lam - MIN_DECREMENT, i, EVENT_ENTRY))
            continue
        if abs(denom) < 1e-300:
            continue
        le = (h[i] - lam * g[i]) / denom
        if 0.0 < le < lam:
            cands.append((min(le, lam - MIN_DECREMENT), i, EVENT_ENTRY))

    if not cands:
        return None
    best = max(c[0] for c in cands)
    tied = [c for c in cands if c[0] >= best - 1e-12]
    tied.sort(key=lambda c: c[1])
    le, unit, kind = tied[0]
    return min(le, lam - MIN_DECREMENT), kind, unit


def compute_path(Q, W, lambda_min: float = DEFAULT_LAMBDA_MIN,
                 max_events: int | None = None) -> RegularizationPath:
    """Track the full solution path from L_max down to ``lambda_min``."""
    Q = q_array(Q)
    W = np.asarray(W)
    n = len(W)
    if lambda_min <= 0:
        raise ValueError("lambda_min must be positive")
    if max_events is None:
        max_events = 50 * n

    init = solve_init(Q, W)
    alpha = init.weights.copy()
    status = np.where(alpha <= 1e-9, 0,
                      np.where(alpha >= 1.0 - 1e-9, 1, 2)).astype(np.int8)
    exact_balance = bool(init.degenerate and
                         alpha @ Q @ alpha <= 1e-10 * max(1.0, float(np.trace(Q))))

    lams: list[float] = []
    alphas: list[np.ndarray] = []
    alpha0s: list[float] = []
    events: list[str] = []
    event_units: list[int | None] = []

    def record(lam, a, a0, event, unit=None):
        lams.append(float(lam))
        alphas.append(a.copy())
        alpha0s.append(float(a0))
        events.append(event)
        event_units.append(unit)

    if init.degenerate or init.lam <= lambda_min:
        lam = lambda_min
        a, a0, status = _resolve_at(Q, W, lam, status)
        record(lam, a, a0, EVENT_INIT)
        return RegularizationPath(
            lambdas=np.array(lams), alphas=np.array(alphas),
            alpha0s=np.array(alpha0s), events=events, event_units=event_units,
            terminal_lambda=lam, lambda_max=lam,
            termination="degenerate", Q=Q, W=np.asarray(W), exact_balance=exact_balance,
        )

    lam = float(init.lam)
    lambda_max = lam
    near = np.abs(init.margins - 1.0) <= TRACK_TOL * (1.0 + np.abs(init.margins))
    status[np.flatnonzero(near)] = 2
    record(lam, alpha, init.alpha0, EVENT_INIT)
    alpha0 = init.alpha0
    termination = "lambda_min"

    n_events = 0
    while lam > lambda_min:
        if n_events > max_events:
            raise PathError(
                f"event count exceeded cap {max_events}",
                state={"lambda": lam, "n_events": n_events,
                       "status": status.copy(), "alpha": alpha.copy()},
            )
        alpha, alpha0, status = _resolve_at(Q, W, lam, status)
        midx = np.flatnonzero(status == 2)

        if len(midx) == 0:
            # weights frozen; track the feasible intercept interval until two
            # opposing bounds cross and both units enter the margin
            qa = Q @ alpha
            lo_c, hi_c = _alpha0_bounds(Q, W.astype(float), lam, alpha, status, qa=qa)
            pos = W > 0
            lo_slope = np.where((status == 0) & pos, 1.0, -1.0)
            hi_slope = np.where((status == 1) & pos, 1.0, -1.0)
            best_le, pair = -np.inf, None
            lo_idx = np.flatnonzero(np.isfinite(lo_c))
            hi_idx = np.flatnonzero(np.isfinite(hi_c))
            for i in lo_idx:
                for j in hi_idx:
                    if lo_slope[i] == hi_slope[j]:
                        continue
                    # bounds are c +- L; opposite slopes cross at the mean of
                    # their L-free parts
                    ci = lo_c[i] - lo_slope[i] * lam
                    cj = hi_c[j] - hi_slope[j] * lam
                    le = (cj - ci) / (lo_slope[i] - hi_slope[j])
                    if le < lam - MIN_DECREMENT and le > best_le:
                        best_le, pair = le, (int(i), int(j))
            if pair is None or best_le <= lambda_min:
                lam_t = lambda_min
                lo_c, hi_c = _alpha0_bounds(Q, W.astype(float), lam_t, alpha, status, qa=qa)
                a0_t = 0.5 * (float(lo_c.max()) + float(hi_c.min()))
                record(lam_t, alpha, a0_t, EVENT_TERMINAL)
                lam = lam_t
                break
            lam = best_le
            status[pair[0]] = 2
            status[pair[1]] = 2
            alpha, alpha0, status = _resolve_at(Q, W, lam, status)
            record(lam, alpha, alpha0, EVENT_ENTRY, pair[0])
            n_events += 1
            continue

        b, b0 = margin_system(midx, Q, W)
        hit = _scan_events(Q, W, lam, alpha, alpha0, status, b, b0)
        if hit is None or hit[0] <= lambda_min:
            lam_t = lambda_min
            alpha = alpha.copy()
            alpha[midx] += (lam_t - lam) * b
            alpha0 += (lam_t - lam) * b0
            np.clip(alpha, 0.0, 1.0, out=alpha)
            record(lam_t, alpha, alpha0, EVENT_TERMINAL)
            lam = lam_t
            break

        le, kind, unit = hit
        alpha = alpha.copy()
        alpha[midx] += (le - lam) * b
        alpha0 += (le - lam) * b0
        if kind == EVENT_EXIT0:
            alpha[unit] = 0.0
        elif kind == EVENT_EXIT1:
            alpha[unit] = 1.0
        np.clip(alpha, 0.0, 1.0, out=alpha)
        lam = le
        record(lam, alpha, alpha0, kind, unit)
        if kind == EVENT_EXIT0:
            status[unit] = 0
        elif kind == EVENT_EXIT1:
            status[unit] = 1
        else:
            status[unit] = 2
        n_events += 1

        if not (status == 1).any():
            termination = "no-inside-units"
            break

    return RegularizationPath(
        lambdas=np.array(lams), alphas=np.array(alphas),
        alpha0s=np.array(alpha0s), events=events, event_units=event_units,
        terminal_lambda=float(lams[-1]), lambda_max=lambda_max,
        termination=termination, Q=Q, W=np.asarray(W),
        exact_balance=exact_balance,
    )


def solution_at(path: RegularizationPath, lam: float) -> DualSolution:
    """Solution at any L in the covered range via exact affine interpolation.

    Values outside [terminal_lambda, lambda_max] clamp to the nearest
    endpoint and set ``clamped=True`` on the result.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    lams = path.lambdas
    if lam >= lams[0]:
        clamped = lam > lams[0] * (1 + 1e-12)
        return make_solution(path.Q, path.W, lams[0], path.alphas[0],
                             path.alpha0s[0], clamped=clamped)
    if lam <= lams[-1]:
        clamped = lam < lams[-1] * (1 - 1e-12)
        return make_solution(path.Q, path.W, lams[-1], path.alphas[-1],
                             path.alpha0s[-1], clamped=clamped)
    k = int(np.searchsorted(-lams, -lam, side="right")) - 1
    k = min(max(k, 0), len(lams) - 2)
    span = lams[k + 1] - lams[k]
    theta = 0.0 if span == 0 else (lam - lams[k]) / span
    a = path.alphas[k] + theta * (path.alphas[k + 1] - path.alphas[k])
    a0 = path.alpha0s[k] + theta * (path.alpha0s[k + 1] - path.alpha0s[k])
    return make_solution(path.Q, path.W, lam, a, a0)
