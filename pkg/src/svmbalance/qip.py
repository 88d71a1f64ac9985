"""Integer-constrained variant: select the largest balanced subset.

Replacing the box constraint of the dual with binary weights gives a
quadratic integer program over equal-count treated/control subsets. The
exact solver enumerates subsets (vectorized per subset size, feasible up to
N = 24); the heuristic runs greedy construction plus seeded
simulated-annealing swaps for larger problems.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .solvers import q_array


@dataclass(frozen=True)
class QipSolution:
    selection: np.ndarray  # 0/1 per unit
    objective: float
    exact: bool
    elapsed: float

    @property
    def size(self) -> int:
        return int(self.selection.sum())


def qip_objective(Q, selection, lam) -> float:
    s = np.asarray(selection, dtype=float)
    Q = q_array(Q)
    return float(s @ Q @ s / (2.0 * lam) - s.sum())


def _combo_matrix(m, k):
    rows = list(combinations(range(m), k))
    A = np.zeros((len(rows), m))
    for r, cols in enumerate(rows):
        A[r, list(cols)] = 1.0
    return A


def solve_qip_exact(Q, W, lam, max_n: int = 24) -> QipSolution:
    """Global optimum by enumeration over equal-count subsets.

    Iterates subset size k downward and prunes sizes whose best possible
    objective (-2k, at zero discrepancy) cannot beat the incumbent.
    """
    t0 = time.monotonic()
    Q = q_array(Q)
    W = np.asarray(W)
    n = len(W)
    if n > max_n:
        raise ValueError(f"N = {n} exceeds the exact enumeration cap {max_n}")
    if lam <= 0:
        raise ValueError("lam must be positive")
    T_idx = np.flatnonzero(W > 0)
    C_idx = np.flatnonzero(W < 0)
    best_obj = 0.0  # empty selection is always feasible
    best_sel = np.zeros(n)
    Q_TT = Q[np.ix_(T_idx, T_idx)]
    Q_CC = Q[np.ix_(C_idx, C_idx)]
    Q_TC = Q[np.ix_(T_idx, C_idx)]
    for k in range(min(len(T_idx), len(C_idx)), 0, -1):
        if -2.0 * k >= best_obj:
            break
        A = _combo_matrix(len(T_idx), k)
        B = _combo_matrix(len(C_idx), k)
        quad_T = np.einsum("ij,jk,ik->i", A, Q_TT, A)
        quad_C = np.einsum("ij,jk,ik->i", B, Q_CC, B)
        total = quad_T[:, None] + quad_C[None, :] + 2.0 * (A @ Q_TC @ B.T)
        obj = total / (2.0 * lam) - 2.0 * k
        r, c = np.unravel_index(np.argmin(obj), obj.shape)
        if obj[r, c] < best_obj - 1e-15:
            best_obj = float(obj[r, c])
            best_sel = np.zeros(n)
            best_sel[T_idx[A[r] > 0]] = 1.0
            best_sel[C_idx[B[c] > 0]] = 1.0
    return QipSolution(selection=best_sel, objective=best_obj, exact=True,
                       elapsed=time.monotonic() - t0)


def _greedy(Q, T_idx, C_idx, lam):
    n = Q.shape[0]
    sel = np.zeros(n, dtype=bool)
    qs = np.zeros(n)  # Q @ selection
    obj = 0.0
    free_t = list(T_idx)
    free_c = list(C_idx)
    while free_t and free_c:
        ft = np.array(free_t)
        fc = np.array(free_c)
        # objective change from adding the pair (t, c)
        delta = (Q[np.ix_(ft, ft)].diagonal()[:, None]
                 + Q[np.ix_(fc, fc)].diagonal()[None, :]
                 + 2.0 * Q[np.ix_(ft, fc)]
                 + 2.0 * qs[ft][:, None] + 2.0 * qs[fc][None, :]) / (2.0 * lam) - 2.0
        r, c = np.unravel_index(np.argmin(delta), delta.shape)
        if delta[r, c] >= -1e-12:
            break
        t_new, c_new = int(ft[r]), int(fc[c])
        sel[t_new] = sel[c_new] = True
        qs += Q[:, t_new] + Q[:, c_new]
        obj += float(delta[r, c])
        free_t.remove(t_new)
        free_c.remove(c_new)
    return sel, qs, obj


def _anneal(Q, W, lam, sel, qs, obj, rng, deadline):
    n = Q.shape[0]
    T_idx = np.flatnonzero(W > 0)
    C_idx = np.flatnonzero(W < 0)
    best_sel, best_obj = sel.copy(), obj
    t0 = max(1.0, 0.1 * abs(obj))
    t_end = 1e-4 * t0
    n_steps = 2000
    step = 0
    while time.monotonic() < deadline:
        temp = t0 * (t_end / t0) ** min(1.0, step / n_steps)
        step += 1
        move = rng.integers(3)
        grp = T_idx if rng.integers(2) else C_idx
        inside = grp[sel[grp]]
        outside = grp[~sel[grp]]
        if move == 0 and len(inside) and len(outside):
            # swap one selected unit for an unselected one within a class
            i = int(inside[rng.integers(len(inside))])
            j = int(outside[rng.integers(len(outside))])
            delta = _swap_delta(Q, lam, qs, i, j)
            changes = ((i, False), (j, True))
        else:
            ti = T_idx[sel[T_idx]]
            ci = C_idx[sel[C_idx]]
            to = T_idx[~sel[T_idx]]
            co = C_idx[~sel[C_idx]]
            if move == 1 and len(to) and len(co):
                t_new = int(to[rng.integers(len(to))])
                c_new = int(co[rng.integers(len(co))])
                quad = (Q[t_new, t_new] + Q[c_new, c_new] + 2.0 * Q[t_new, c_new]
                        + 2.0 * qs[t_new] + 2.0 * qs[c_new])
                delta = quad / (2.0 * lam) - 2.0
                changes = ((t_new, True), (c_new, True))
            elif move == 2 and len(ti) and len(ci):
                t_old = int(ti[rng.integers(len(ti))])
                c_old = int(ci[rng.integers(len(ci))])
                quad = (Q[t_old, t_old] + Q[c_old, c_old] + 2.0 * Q[t_old, c_old]
                        - 2.0 * qs[t_old] - 2.0 * qs[c_old])
                delta = quad / (2.0 * lam) + 2.0
                changes = ((t_old, False), (c_old, False))
            else:
                continue
        if delta <= 0.0 or rng.random() < np.exp(-delta / max(temp, 1e-300)):
            for unit, add in changes:
                if add and not sel[unit]:
                    sel[unit] = True
                    qs += Q[:, unit]
                elif not add and sel[unit]:
                    sel[unit] = False
                    qs -= Q[:, unit]
            obj += delta
            if obj < best_obj - 1e-12:
                best_obj = obj
                best_sel = sel.copy()
    return best_sel, best_obj


def _swap_delta(Q, lam, qs, i, j):
    """Objective change from dropping selected i and adding j (same class)."""
    # qs includes i, so the cross terms gained by j must exclude Q[j, i]
    quad = Q[j, j] + 2.0 * (qs[j] - Q[j, i]) - (2.0 * qs[i] - Q[i, i])
    return quad / (2.0 * lam)


def solve_qip_heuristic(Q, W, lam, time_budget: float = 1.0, seed: int = 0,
                        restarts: int = 4) -> QipSolution:
    """Greedy construction plus seeded annealing restarts within a time budget.

    Always returns a feasible selection no worse than the greedy start;
    ``time_budget=0`` returns the greedy solution itself. Restart results
    merge deterministically (best objective, ties to the lexicographically
    smallest selection).
    """
    t0 = time.monotonic()
    Q = q_array(Q)
    W = np.asarray(W)
    if lam <= 0:
        raise ValueError("lam must be positive")
    T_idx = np.flatnonzero(W > 0)
    C_idx = np.flatnonzero(W < 0)
    sel, qs, obj = _greedy(Q, T_idx, C_idx, lam)
    best_sel, best_obj = sel.copy(), obj
    if time_budget > 0:
        seeds = np.random.SeedSequence(seed).spawn(max(restarts, 1))
        slice_budget = time_budget / max(restarts, 1)
        for ss in seeds:
            rng = np.random.default_rng(ss)
            deadline = time.monotonic() + slice_budget
            cand_sel, cand_obj = _anneal(Q, W, lam, sel.copy(), qs.copy(), obj,
                                         rng, deadline)
            # recompute exactly to keep incremental drift out of the merge
            cand_obj = qip_objective(Q, cand_sel, lam)
            if (cand_obj < best_obj - 1e-12 or
                    (abs(cand_obj - best_obj) <= 1e-12 and
                     tuple(cand_sel) < tuple(best_sel))):
                best_sel, best_obj = cand_sel.copy(), cand_obj
    if 0.0 < best_obj or not np.isfinite(best_obj):
        best_sel, best_obj = np.zeros(len(W), dtype=bool), 0.0
    return QipSolution(selection=best_sel.astype(float),
                       objective=float(qip_objective(Q, best_sel, lam)),
                       exact=False, elapsed=time.monotonic() - t0)
