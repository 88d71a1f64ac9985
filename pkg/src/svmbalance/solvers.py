"""Dual solvers for the balancing problems.

All problems share the signed Gram matrix Q and the +-1 labels W:

* :func:`solve_dual`     min (1/2L) a'Qa - 1'a   s.t. W'a = 0, 0 <= a <= 1
* :func:`solve_init`     anchor class fixed at 1; other class minimizes a'Qa
                         with its weight sum matching the anchor count
* :func:`solve_mmd_min`  min sqrt(a'Qa) over the product of group simplices
* :func:`solve_l2_dual`  min 1/2 a'Qa - 1'a + (L/2)||a||^2  s.t. W'a = 0, a >= 0

Each solver runs a sequential-minimal-optimization loop (pairwise updates
that preserve the equality constraint, second-order working-set selection)
and finishes with a primal active-set method that solves the KKT system of
the identified free set exactly. A ridge of 1e-10 * trace(Q)/N stabilizes
every linear-system factorization (iterative refinement recovers full
precision when the exact system is solvable); the ridge never enters
reported objectives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import WeightVector
from .errors import SolverError
from .kernels import QMatrix

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100_000

# distance from a bound below which a weight counts as bound-active when
# seeding the finishing active set
ACTIVE_TOL = 1e-9

_BOUND_SNAP = 1e-14


def q_array(Q) -> np.ndarray:
    if isinstance(Q, QMatrix):
        return Q.Q
    return np.asarray(Q, dtype=float)


def _ridge(Q) -> float:
    n = Q.shape[0]
    return 1e-10 * float(np.trace(Q)) / max(n, 1)


def _solve_bordered(A, C, rhs, ridge=0.0, refine=2):
    """Solve [[A, C], [C', 0]] x = rhs.

    A ridge on the A-block diagonal keeps the factorization stable when A is
    singular on the constraint null space; iterative refinement against the
    unridged matrix then recovers full precision whenever the exact system
    is solvable.
    """
    k = A.shape[0]
    m = C.shape[1]
    B = np.zeros((k + m, k + m))
    B[:k, :k] = A
    B[:k, k:] = C
    B[k:, :k] = C.T
    Breg = B
    if ridge > 0.0:
        Breg = B.copy()
        Breg[np.arange(k), np.arange(k)] += ridge
    try:
        x = np.linalg.solve(Breg, rhs)
    except np.linalg.LinAlgError:
        sol, *_ = np.linalg.lstsq(B, rhs, rcond=None)
        return sol
    best_x = x
    best_r = float(np.linalg.norm(rhs - B @ x))
    for _ in range(refine):
        try:
            x = x + np.linalg.solve(Breg, rhs - B @ x)
        except np.linalg.LinAlgError:
            break
        r = float(np.linalg.norm(rhs - B @ x))
        if r < best_r:
            best_x, best_r = x, r
        else:
            break
    return best_x


# ---------------------------------------------------------------------------
# generic primal active-set QP with one equality constraint and box bounds

def _active_set_qp(A, b, c, d, lo, hi, x0, ridge, max_rounds=None):
    """min 1/2 x'Ax + b'x  s.t. c'x = d, lo <= x <= hi  (A PSD, c entries != 0).

    Primal active-set method: solve the equality QP on the current free set,
    step to the first blocking bound, release the worst multiplier when the
    candidate is feasible. Returns (x, mu) with mu the equality multiplier.
    ``x0`` must satisfy the constraints (up to roundoff).
    """
    n = len(b)
    if max_rounds is None:
        max_rounds = 4 * n + 100
    x = np.clip(x0, lo, hi)
    work = np.zeros(n, dtype=np.int8)
    work[x <= lo + ACTIVE_TOL] = -1
    if np.isfinite(hi):
        work[x >= hi - ACTIVE_TOL] = 1
    best = None
    mu = 0.0
    for _ in range(max_rounds):
        free = work == 0
        idx = np.flatnonzero(free)
        xb = np.where(work < 0, lo, np.where(work > 0, hi, 0.0))
        xstar = xb.copy()
        if len(idx):
            fixed = ~free
            rhs = np.concatenate([
                -(b[idx] + A[np.ix_(idx, np.flatnonzero(fixed))] @ xb[fixed]),
                [d - float(c[fixed] @ xb[fixed])],
            ])
            sol = _solve_bordered(A[np.ix_(idx, idx)], c[idx][:, None], rhs,
                                  ridge=ridge)
            xstar[idx] = sol[:len(idx)]
            mu = float(sol[len(idx)])
        else:
            # no free coordinates: multiplier must fit every bound condition
            g = A @ xb + b
            ratios = -g / c
            lo_mu = np.where((work < 0) == (c > 0), ratios, -np.inf)
            hi_mu = np.where((work < 0) == (c > 0), np.inf, ratios)
            ml, mh = float(lo_mu.max()), float(hi_mu.min())
            if ml > mh + 1e-12 * (1.0 + abs(ml)):
                work[int(np.argmax(lo_mu))] = 0
                work[int(np.argmin(hi_mu))] = 0
                continue
            mu = 0.5 * (max(ml, -1e300) + min(mh, 1e300))
            return xb, mu

        delta = xstar - x
        # ratio test over moving coordinates
        t = 1.0
        block = -1
        block_side = 0
        for i in idx:
            di = delta[i]
            if di < -1e-300:
                ti = (lo - x[i]) / di
                if ti < t:
                    t, block, block_side = ti, i, -1
            elif di > 1e-300 and np.isfinite(hi):
                ti = (hi - x[i]) / di
                if ti < t:
                    t, block, block_side = ti, i, 1
        if t < 1.0:
            x = x + max(t, 0.0) * delta
            x[block] = lo if block_side < 0 else hi
            work[block] = block_side
            continue
        x = xstar
        g = A @ x + b + mu * c
        # at a lower bound the reduced gradient must point inward (>= 0),
        # at an upper bound outward (<= 0); release the worst violator
        viol = np.maximum(np.where(work < 0, -g, 0.0),
                          np.where(work > 0, g, 0.0))
        scale = 1.0 + float(np.abs(g).max(initial=0.0))
        worst = int(np.argmax(viol))
        if viol[worst] <= 1e-11 * scale:
            return x, mu
        if best is None or viol[worst] < best[2]:
            best = (x.copy(), mu, float(viol[worst]))
        work[worst] = 0
    if best is not None:
        return best[0], best[1]
    return x, mu


@dataclass(frozen=True)
class KktReport:
    """Residual summary for a box-constrained balanced dual solution."""

    stationarity: float
    complementary: float
    box: float
    balance: float

    @property
    def max_residual(self) -> float:
        return max(self.stationarity, self.complementary, self.box, self.balance)

    def within(self, tol: float) -> bool:
        return self.max_residual <= tol


@dataclass(frozen=True)
class DualSolution:
    """Solution of the balancing dual at one regularization value."""

    alpha: WeightVector
    alpha0: float
    lam: float
    margins: np.ndarray
    objective: float
    slack: np.ndarray
    margin_set: np.ndarray
    inside_set: np.ndarray
    outside_set: np.ndarray
    kkt: KktReport
    degenerate: bool = False
    clamped: bool = False

    @property
    def weights(self) -> np.ndarray:
        return self.alpha.alpha


def _classify(margins, alpha, margin_tol):
    near = np.abs(margins - 1.0) <= margin_tol * (1.0 + np.abs(margins))
    margin = np.flatnonzero(near)
    inside = np.flatnonzero(~near & (margins < 1.0))
    outside = np.flatnonzero(~near & (margins > 1.0))
    return margin, inside, outside


def _kkt_residuals(Q, W, lam, alpha, alpha0, active_tol=1e-7) -> KktReport:
    margins = (Q @ alpha + W * alpha0) / lam
    free = (alpha > active_tol) & (alpha < 1.0 - active_tol)
    at_zero = alpha <= active_tol
    at_one = alpha >= 1.0 - active_tol
    stationarity = float(np.max(np.abs(margins[free] - 1.0), initial=0.0))
    comp = max(
        float(np.max(1.0 - margins[at_zero], initial=0.0)),
        float(np.max(margins[at_one] - 1.0, initial=0.0)),
        stationarity,
    )
    box = max(float(np.max(-alpha, initial=0.0)), float(np.max(alpha - 1.0, initial=0.0)))
    balance = abs(float(W @ alpha))
    return KktReport(stationarity=stationarity, complementary=max(comp, 0.0),
                     box=box, balance=balance)


def make_solution(Q, W, lam, alpha, alpha0, margin_tol=1e-7,
                  degenerate=False, clamped=False) -> DualSolution:
    """Assemble a DualSolution (margins, sets, objective) from raw weights."""
    Q = q_array(Q)
    W = np.asarray(W, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    margins = (Q @ alpha + W * alpha0) / lam
    objective = float(alpha @ Q @ alpha / (2.0 * lam) - alpha.sum())
    margin, inside, outside = _classify(margins, alpha, margin_tol)
    return DualSolution(
        alpha=WeightVector(alpha),
        alpha0=float(alpha0),
        lam=float(lam),
        margins=margins,
        objective=objective,
        slack=np.maximum(0.0, 1.0 - margins),
        margin_set=margin,
        inside_set=inside,
        outside_set=outside,
        kkt=_kkt_residuals(Q, W, lam, alpha, alpha0),
        degenerate=degenerate,
        clamped=clamped,
    )


def kkt_report(sol: DualSolution, Q, W, tol: float = 1e-6) -> KktReport:
    """Recompute KKT residuals of a solution against (Q, W) from scratch."""
    Q = q_array(Q)
    W = np.asarray(W, dtype=float)
    return _kkt_residuals(Q, W, sol.lam, sol.alpha.alpha, sol.alpha0)


def _snap(x):
    if x < _BOUND_SNAP:
        return 0.0
    if x > 1.0 - _BOUND_SNAP:
        return 1.0
    return x


def _smo_dual(Q, W, lam, eps, max_iter):
    """SMO with maximal-violating-pair i and second-order choice of j."""
    n = Q.shape[0]
    alpha = np.zeros(n)
    grad = np.full(n, -1.0)  # gradient (Q a)/lam - 1
    Wf = W.astype(float)
    pos = Wf > 0
    inv_lam = 1.0 / lam
    diag = np.diag(Q) * inv_lam
    gap = np.inf
    for it in range(max_iter):
        mwg = -Wf * grad
        up = (pos & (alpha < 1.0)) | (~pos & (alpha > 0.0))
        low = (~pos & (alpha < 1.0)) | (pos & (alpha > 0.0))
        if not up.any() or not low.any():
            return alpha, 0.0, it
        i = int(np.argmax(np.where(up, mwg, -np.inf)))
        gap = mwg[i] - float(np.min(np.where(low, mwg, np.inf)))
        if gap <= eps:
            return alpha, gap, it
        # second-order selection of the partner: largest decrease estimate
        diff = mwg[i] - mwg
        H_row = np.maximum(diag[i] + diag - 2.0 * Wf[i] * Wf * Q[i] * inv_lam,
                           1e-12)
        cand = low & (diff > 0)
        if not cand.any():
            return alpha, gap, it
        j = int(np.argmax(np.where(cand, diff * diff / H_row, -np.inf)))
        step = diff[j] / H_row[j]
        cap_i = (1.0 - alpha[i]) if pos[i] else alpha[i]
        cap_j = alpha[j] if pos[j] else (1.0 - alpha[j])
        step = min(step, cap_i, cap_j)
        if step <= 0.0:
            return alpha, gap, it
        alpha[i] = _snap(alpha[i] + Wf[i] * step)
        alpha[j] = _snap(alpha[j] - Wf[j] * step)
        grad += (Wf[i] * Q[:, i] - Wf[j] * Q[:, j]) * (step * inv_lam)
    return alpha, gap, max_iter


def solve_dual(Q, W, lam, tol: float = DEFAULT_TOL,
               max_iter: int = DEFAULT_MAX_ITER) -> DualSolution:
    """Solve the balancing dual at regularization ``lam``.

    Raises SolverError if the KKT residual still exceeds ``tol`` after the
    iteration budget and the active-set finish.
    """
    Q = q_array(Q)
    W = np.asarray(W)
    if lam <= 0:
        raise ValueError("lam must be positive")
    if (W > 0).all() or (W < 0).all():
        raise SolverError("all units share one class; only the zero solution is feasible")
    Wf = W.astype(float)
    # SMO is a warm start; the active-set finisher supplies the precision,
    # so cap the pairwise phase well below the overall budget
    warm_cap = min(max_iter, 5 * len(Wf) + 500)
    alpha, gap, _ = _smo_dual(Q, Wf, lam, 1e-6, warm_cap)
    alpha, mu = _active_set_qp(Q / lam, -np.ones(len(Wf)), Wf, 0.0, 0.0, 1.0,
                               alpha, ridge=_ridge(Q) / lam)
    sol = make_solution(Q, W, lam, alpha, mu * lam)
    if not sol.kkt.within(tol):
        raise SolverError(
            f"dual solve did not reach tolerance {tol:g} "
            f"(residual {sol.kkt.max_residual:.3e})",
            residual=sol.kkt.max_residual,
        )
    return sol


def _smo_sum_constrained(Qsub, cross, a, eps, max_iter):
    """SMO on min a'Qsub a + 2 cross'a with sum(a) fixed, 0 <= a <= 1."""
    grad = 2.0 * (Qsub @ a + cross)
    viol = 0.0
    for it in range(max_iter):
        can_up = a < 1.0
        can_dn = a > 0.0
        if not can_up.any() or not can_dn.any():
            return a, 0.0
        i = int(np.argmin(np.where(can_up, grad, np.inf)))
        j = int(np.argmax(np.where(can_dn, grad, -np.inf)))
        viol = grad[j] - grad[i]
        if viol <= eps:
            return a, viol
        H = 2.0 * (Qsub[i, i] + Qsub[j, j] - 2.0 * Qsub[i, j])
        cap = min(1.0 - a[i], a[j])
        step = viol / H if H > 0.0 else np.inf
        step = min(step, cap)
        if step <= 0.0:
            return a, viol
        a[i] = _snap(a[i] + step)
        a[j] = _snap(a[j] - step)
        grad += 2.0 * (Qsub[:, i] - Qsub[:, j]) * step
    return a, viol


def solve_init(Q, W, tol: float = 1e-10,
               max_iter: int = DEFAULT_MAX_ITER) -> DualSolution:
    """Largest-weight-sum solution: the start of the regularization path.

    The minority class is anchored at weight 1; the other class minimizes
    the balance quadratic with its weight sum fixed to the minority count.
    Returns a DualSolution at the largest lambda for which this solution
    satisfies the KKT conditions (``sol.lam``); for any larger lambda the
    optimum does not change. A ``degenerate`` flag marks problems whose
    solution is constant over the whole positive lambda axis (for example
    exactly balanced data), in which case ``sol.lam`` is reported as 1.
    """
    Q = q_array(Q)
    W = np.asarray(W)
    n = len(W)
    n_pos = int((W > 0).sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SolverError("both classes must be nonempty")
    anchor_sign = 1 if n_pos <= n_neg else -1
    A_idx = np.flatnonzero(W == anchor_sign)
    B_idx = np.flatnonzero(W == -anchor_sign)
    nA = len(A_idx)

    Qbb = Q[np.ix_(B_idx, B_idx)]
    cross = Q[np.ix_(B_idx, A_idx)].sum(axis=1)
    aB = np.full(len(B_idx), nA / len(B_idx))
    scale = max(1.0, float(np.abs(np.diag(Q)).mean()))
    warm_cap = min(max_iter, 5 * len(B_idx) + 500)
    aB, _ = _smo_sum_constrained(Qbb, cross, aB, tol * scale, warm_cap)
    aB, _ = _active_set_qp(2.0 * Qbb, 2.0 * cross, np.ones(len(B_idx)),
                           float(nA), 0.0, 1.0, aB, ridge=_ridge(Q))

    alpha = np.zeros(n)
    alpha[A_idx] = 1.0
    alpha[B_idx] = aB

    qa = Q @ alpha
    frac = (aB > ACTIVE_TOL) & (aB < 1.0 - ACTIVE_TOL)
    if frac.any():
        q_m = float(qa[B_idx[frac]].mean())
    else:
        at_one = B_idx[aB >= 1.0 - ACTIVE_TOL]
        q_m = float(qa[at_one].max()) if len(at_one) else 0.0
    lam_max = float((qa[A_idx] + q_m).max()) / 2.0

    degenerate = lam_max <= max(1e-12 * scale, 0.0)
    if degenerate:
        return make_solution(Q, W, 1.0, alpha, 0.0, degenerate=True)
    alpha0 = float(-anchor_sign) * (lam_max - q_m)
    return make_solution(Q, W, lam_max, alpha, alpha0)


def solve_mmd_min(Q, W, tol: float = 1e-10,
                  max_iter: int = DEFAULT_MAX_ITER) -> WeightVector:
    """Minimize the weighted discrepancy sqrt(a'Qa) over the simplex set.

    Both groups' weights are optimized subject to summing to one each;
    the returned vector is normalized.
    """
    Q = q_array(Q)
    W = np.asarray(W)
    T_idx = np.flatnonzero(W > 0)
    C_idx = np.flatnonzero(W < 0)
    if len(T_idx) == 0 or len(C_idx) == 0:
        raise SolverError("both classes must be nonempty")
    n = len(W)
    alpha = np.zeros(n)
    alpha[T_idx] = 1.0 / len(T_idx)
    alpha[C_idx] = 1.0 / len(C_idx)
    scale = max(1.0, float(np.abs(np.diag(Q)).mean()))
    eps = tol * scale

    grad = 2.0 * (Q @ alpha)
    warm_cap = min(max_iter, 5 * n + 500)
    for it in range(warm_cap):
        moved = False
        for grp in (T_idx, C_idx):
            g = grad[grp]
            a = alpha[grp]
            can_up = a < 1.0
            can_dn = a > 0.0
            if not can_up.any() or not can_dn.any():
                continue
            i = int(np.argmin(np.where(can_up, g, np.inf)))
            j = int(np.argmax(np.where(can_dn, g, -np.inf)))
            viol = g[j] - g[i]
            if viol <= eps:
                continue
            gi, gj = int(grp[i]), int(grp[j])
            H = 2.0 * (Q[gi, gi] + Q[gj, gj] - 2.0 * Q[gi, gj])
            cap = min(1.0 - alpha[gi], alpha[gj])
            step = viol / H if H > 0.0 else np.inf
            step = min(step, cap)
            if step <= 0.0:
                continue
            alpha[gi] = _snap(alpha[gi] + step)
            alpha[gj] = _snap(alpha[gj] - step)
            grad += 2.0 * (Q[:, gi] - Q[:, gj]) * step
            moved = True
        if not moved:
            break

    # polish each group against the other held fixed; the coupling enters
    # only through the linear term, so alternate twice
    for _ in range(2):
        for grp, other in ((T_idx, C_idx), (C_idx, T_idx)):
            Qsub = Q[np.ix_(grp, grp)]
            cross = Q[np.ix_(grp, other)] @ alpha[other]
            alpha[grp], _ = _active_set_qp(2.0 * Qsub, 2.0 * cross,
                                           np.ones(len(grp)), 1.0, 0.0, 1.0,
                                           alpha[grp].copy(), ridge=_ridge(Q))
    return WeightVector(alpha, normalized=True)


def solve_l2_dual(Q, W, lam, tol: float = DEFAULT_TOL,
                  max_iter: int = DEFAULT_MAX_ITER) -> WeightVector:
    """Squared-slack variant: adds (lam/2)||a||^2 and drops the upper bound."""
    Q = q_array(Q)
    W = np.asarray(W)
    if lam <= 0:
        raise ValueError("lam must be positive")
    if (W > 0).all() or (W < 0).all():
        raise SolverError("all units share one class; only the zero solution is feasible")
    n = len(W)
    Wf = W.astype(float)
    pos = Wf > 0
    alpha = np.zeros(n)
    grad = np.full(n, -1.0)  # (Q + lam I) a - 1
    warm_cap = min(max_iter, 5 * n + 500)
    for it in range(warm_cap):
        mwg = -Wf * grad
        up = pos | (~pos & (alpha > 0.0))
        low = ~pos | (pos & (alpha > 0.0))
        i = int(np.argmax(np.where(up, mwg, -np.inf)))
        j = int(np.argmin(np.where(low, mwg, np.inf)))
        gap = mwg[i] - mwg[j]
        if gap <= tol * 0.1:
            break
        H = (Q[i, i] + Q[j, j] - 2.0 * Wf[i] * Wf[j] * Q[i, j]) + 2.0 * lam
        cap_i = np.inf if pos[i] else alpha[i]
        cap_j = alpha[j] if pos[j] else np.inf
        step = min(gap / H, cap_i, cap_j)
        if step <= 0.0:
            break
        alpha[i] += Wf[i] * step
        alpha[j] -= Wf[j] * step
        alpha[alpha < _BOUND_SNAP] = 0.0
        grad += (Wf[i] * Q[:, i] - Wf[j] * Q[:, j]) * step
        grad[i] += lam * Wf[i] * step
        grad[j] -= lam * Wf[j] * step

    A = Q + lam * np.eye(n)
    alpha, _ = _active_set_qp(A, -np.ones(n), Wf, 0.0, 0.0, np.inf, alpha,
                              ridge=_ridge(Q))
    return WeightVector(alpha, normalized=False)
