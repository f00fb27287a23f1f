"""Dense bounded-variable primal simplex.

Solves ``min c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq`` and
``0 <= x <= upper``. Upper bounds are handled implicitly: a nonbasic variable
sits at either its lower or its upper bound, and the ratio test allows bound
flips. Pivoting follows Bland's smallest-index rule so degenerate problems
(which is all of ours) cannot cycle. Meant for desk-scale problems with a few
hundred columns; everything is dense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOL = 1e-9


class NumericalFailure(RuntimeError):
    pass


@dataclass
class SimplexResult:
    status: str  # "optimal" | "infeasible"
    x: np.ndarray
    fun: float
    iterations: int


class _Tableau:
    def __init__(self, M, beta, basis, upper, at_upper):
        self.M = M
        self.beta = beta
        self.basis = basis
        self.upper = upper
        self.at_upper = at_upper
        self.iterations = 0

    def values(self) -> np.ndarray:
        x = np.where(self.at_upper, self.upper, 0.0)
        x[self.basis] = self.beta
        return x

    def pivot(self, r: int, j: int) -> None:
        M = self.M
        M[r] /= M[r, j]
        col = M[:, j].copy()
        col[r] = 0.0
        M -= np.outer(col, M[r])
        # snap fill-in noise; data here is small integers
        M[np.abs(M) < 1e-12] = 0.0

    def run(self, cost: np.ndarray, allowed: np.ndarray, max_iter: int) -> None:
        M = self.M
        ub = self.upper
        while True:
            if self.iterations >= max_iter:
                raise NumericalFailure(f"simplex did not terminate in {max_iter} iterations")
            d = cost - cost[self.basis] @ M
            in_basis = np.zeros(M.shape[1], dtype=bool)
            in_basis[self.basis] = True
            improve = np.where(self.at_upper, d > TOL, d < -TOL) & allowed & ~in_basis
            cand = np.flatnonzero(improve)
            if cand.size == 0:
                return
            j = int(cand[0])
            delta = -1.0 if self.at_upper[j] else 1.0
            col = delta * M[:, j]

            t_best = np.inf
            leave = -1
            leave_to_upper = False
            for r in range(M.shape[0]):
                a = col[r]
                b = self.basis[r]
                if a > TOL:
                    t = self.beta[r] / a
                    to_upper = False
                elif a < -TOL and np.isfinite(ub[b]):
                    t = (ub[b] - self.beta[r]) / (-a)
                    to_upper = True
                else:
                    continue
                t = max(t, 0.0)
                if t < t_best - TOL or (abs(t - t_best) <= TOL and b < self.basis[leave]):
                    t_best, leave, leave_to_upper = t, r, to_upper

            self.iterations += 1
            if np.isfinite(ub[j]) and ub[j] <= t_best + TOL:
                self.beta -= ub[j] * col
                self.at_upper[j] = not self.at_upper[j]
                continue
            if leave < 0:
                raise NumericalFailure("problem is unbounded")
            entering_value = t_best if delta > 0 else ub[j] - t_best
            self.beta -= t_best * col
            old = self.basis[leave]
            self.at_upper[old] = leave_to_upper
            self.pivot(leave, j)
            self.basis[leave] = j
            self.at_upper[j] = False
            self.beta[leave] = entering_value
            self.beta[np.abs(self.beta) < 1e-12] = 0.0


def linprog_bounded(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, upper=None, max_iter=None):
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    if np.any(upper < 0):
        return SimplexResult("infeasible", np.full(n, np.nan), np.nan, 0)

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    # columns: originals | slacks | artificials (one per row, unused ones stay out)
    A = np.zeros((m, n + m_ub + m))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n : n + m_ub] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1.0
    b = np.abs(b)

    art0 = n + m_ub
    basis = []
    need_art = []
    for r in range(m):
        if r < m_ub and not neg[r]:
            basis.append(n + r)
        else:
            A[r, art0 + r] = 1.0
            basis.append(art0 + r)
            need_art.append(r)

    ncol = A.shape[1]
    ub_all = np.concatenate([upper, np.full(m_ub + m, np.inf)])
    tab = _Tableau(A.copy(), b.copy(), basis, ub_all, np.zeros(ncol, dtype=bool))
    max_iter = max_iter or 50 * (ncol + m) + 1000

    is_art = np.zeros(ncol, dtype=bool)
    is_art[art0:] = True
    used_art = np.zeros(ncol, dtype=bool)
    used_art[[art0 + r for r in need_art]] = True

    if need_art:
        cost1 = used_art.astype(float)
        tab.run(cost1, ~is_art | used_art, max_iter)
        infeas = float(cost1 @ tab.values())
        if infeas > TOL * max(1.0, np.abs(b).sum()):
            return SimplexResult("infeasible", np.full(n, np.nan), np.nan, tab.iterations)
        # drive zero-valued artificials out of the basis, dropping redundant rows
        keep = []
        for r in range(tab.M.shape[0]):
            bv = tab.basis[r]
            if not is_art[bv]:
                keep.append(r)
                continue
            row = tab.M[r].copy()
            row[is_art] = 0.0
            row[tab.basis] = 0.0
            cands = np.flatnonzero(np.abs(row) > TOL)
            if cands.size == 0:
                continue
            j = int(cands[0])
            value = ub_all[j] if tab.at_upper[j] else 0.0
            tab.pivot(r, j)
            tab.basis[r] = j
            tab.at_upper[j] = False
            tab.beta[r] = value
            keep.append(r)
        tab.M = tab.M[keep]
        tab.beta = tab.beta[keep]
        tab.basis = [tab.basis[r] for r in keep]

    cost2 = np.concatenate([c, np.zeros(ncol - n)])
    tab.run(cost2, ~is_art, max_iter)
    x = tab.values()[:n]
    return SimplexResult("optimal", x, float(c @ x), tab.iterations)
