"""Dense two-phase simplex for the small LPs behind cone certificates.

Minimises ``c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq`` and
per-variable bounds.  Bland's rule is used for both the entering and the
leaving variable, so the method cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

OPTIMAL, INFEASIBLE, UNBOUNDED, ITERATION_LIMIT = "optimal", "infeasible", "unbounded", "iteration_limit"


@dataclass
class LPResult:
    status: str
    x: Optional[np.ndarray]
    fun: float
    iterations: int = 0

    @property
    def success(self):
        return self.status == OPTIMAL


class LPError(RuntimeError):
    pass


def _pivot(T, row, col):
    T[row] /= T[row, col]
    piv = T[row].copy()
    f = T[:, col].copy()
    f[row] = 0.0
    T -= np.outer(f, piv)


def _simplex(T, basis, n_cols, tol, max_iter, allowed):
    """Run Bland-rule simplex on tableau ``T`` whose last row is the objective.

    Columns ``>= n_cols`` are the right-hand side.  ``allowed`` masks columns
    permitted to enter.  Returns (status, iterations).
    """
    m = T.shape[0] - 1
    it = 0
    while it < max_iter:
        obj = T[-1, :n_cols]
        cand = np.where((obj < -tol) & allowed)[0]
        if len(cand) == 0:
            return OPTIMAL, it
        col = int(cand[0])
        colv = T[:m, col]
        pos = colv > tol
        if not np.any(pos):
            return UNBOUNDED, it
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / colv[pos]
        best = ratios.min()
        ties = np.where(ratios <= best + tol * max(1.0, abs(best)))[0]
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
        it += 1
    return ITERATION_LIMIT, it


def _standard_form(c, A_ub, b_ub, A_eq, b_eq, bounds):
    n = len(c)
    if bounds is None:
        bounds = [(0.0, None)] * n
    elif isinstance(bounds, tuple) and len(bounds) == 2 and not isinstance(bounds[0], (tuple, list)):
        bounds = [bounds] * n
    # x = offset + M @ y with y >= 0
    cols = []
    offset = np.zeros(n)
    extra_ub_rows = []
    for j, (lo, hi) in enumerate(bounds):
        lo = -np.inf if lo is None else float(lo)
        hi = np.inf if hi is None else float(hi)
        if np.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_ub_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    M = np.zeros((n, len(cols)))
    for k, (j, s) in enumerate(cols):
        M[j, k] = s
    ny = len(cols)

    rows_ub, rhs_ub = [], []
    if A_ub is not None and len(A_ub):
        A_ub = np.atleast_2d(np.asarray(A_ub, float))
        rows_ub.append(A_ub @ M)
        rhs_ub.append(np.asarray(b_ub, float) - A_ub @ offset)
    for k, ub in extra_ub_rows:
        r = np.zeros((1, ny))
        r[0, k] = 1.0
        rows_ub.append(r)
        rhs_ub.append(np.array([ub]))
    G = np.vstack(rows_ub) if rows_ub else np.zeros((0, ny))
    h = np.concatenate(rhs_ub) if rhs_ub else np.zeros(0)
    if A_eq is not None and len(A_eq):
        A_eq = np.atleast_2d(np.asarray(A_eq, float))
        E = A_eq @ M
        e = np.asarray(b_eq, float) - A_eq @ offset
    else:
        E = np.zeros((0, ny))
        e = np.zeros(0)
    cy = np.asarray(c, float) @ M
    const = float(np.asarray(c, float) @ offset)
    return M, offset, G, h, E, e, cy, const


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None,
            tol=1e-9, max_iter=None) -> LPResult:
    """Solve a small dense LP.  ``bounds`` defaults to ``x >= 0`` (scipy convention)."""
    c = np.asarray(c, float)
    M, offset, G, h, E, e, cy, const = _standard_form(c, A_ub, b_ub, A_eq, b_eq, bounds)
    ny = cy.shape[0]
    m_ub, m_eq = G.shape[0], E.shape[0]
    m = m_ub + m_eq
    if max_iter is None:
        max_iter = 50 * (m + ny + 10)

    # columns: y (ny) | slacks (m_ub) | artificials (as needed) | rhs
    A = np.zeros((m, ny + m_ub))
    A[:m_ub, :ny] = G
    A[:m_ub, ny:] = np.eye(m_ub)
    A[m_ub:, :ny] = E
    b = np.concatenate([h, e])
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    basis = [-1] * m
    art_rows = []
    for i in range(m):
        if i < m_ub and not neg[i]:
            basis[i] = ny + i
        else:
            art_rows.append(i)
    n_art = len(art_rows)
    n_cols = ny + m_ub + n_art
    T = np.zeros((m + 1, n_cols + 1))
    T[:m, :ny + m_ub] = A
    T[:m, -1] = b
    for k, i in enumerate(art_rows):
        T[i, ny + m_ub + k] = 1.0
        basis[i] = ny + m_ub + k
    iters = 0

    if n_art:
        T[-1, ny + m_ub:n_cols] = 1.0
        for i in art_rows:
            T[-1] -= T[i]
        allowed = np.ones(n_cols, bool)
        status, it = _simplex(T, basis, n_cols, tol, max_iter, allowed)
        iters += it
        if status == ITERATION_LIMIT:
            return LPResult(ITERATION_LIMIT, None, np.nan, iters)
        if -T[-1, -1] > tol * max(1.0, np.abs(b).max(initial=0.0)) * 10:
            return LPResult(INFEASIBLE, None, np.nan, iters)
        # drive artificials out of the basis
        keep = np.ones(m, bool)
        for r in range(m):
            if basis[r] >= ny + m_ub:
                cand = np.where(np.abs(T[r, :ny + m_ub]) > tol)[0]
                if len(cand):
                    _pivot(T, r, int(cand[0]))
                    basis[r] = int(cand[0])
                else:
                    keep[r] = False
        if not keep.all():
            T = np.vstack([T[:m][keep], T[-1:]])
            basis = [bi for bi, k in zip(basis, keep) if k]
            m = len(basis)

    # phase 2
    T[-1, :] = 0.0
    T[-1, :ny] = cy
    for r, bi in enumerate(basis):
        if T[-1, bi] != 0.0:
            T[-1] -= T[-1, bi] * T[r]
    allowed = np.zeros(n_cols, bool)
    allowed[:ny + m_ub] = True
    status, it = _simplex(T, basis, n_cols, tol, max_iter, allowed)
    iters += it
    if status != OPTIMAL:
        return LPResult(status, None, -np.inf if status == UNBOUNDED else np.nan, iters)
    y = np.zeros(n_cols)
    for r, bi in enumerate(basis):
        y[bi] = T[r, -1]
    x = offset + M @ y[:ny]
    return LPResult(OPTIMAL, x, float(c @ x), iters)


def feasible_point(A_ub=None, b_ub=None, A_eq=None, b_eq=None, n=None, bounds=None):
    """Return some feasible point of the system (free variables by default) or ``None``."""
    if n is None:
        for mat in (A_ub, A_eq):
            if mat is not None and len(mat):
                n = np.atleast_2d(mat).shape[1]
                break
    if bounds is None:
        bounds = [(None, None)] * n
    res = linprog(np.zeros(n), A_ub, b_ub, A_eq, b_eq, bounds=bounds)
    return res.x if res.success else None


def linprog_rows(c, A_ub, b_ub, bounds, tol=1e-9, batch=8, max_rounds=200) -> LPResult:
    """:func:`linprog` for many inequality rows and bounded variables.

    Row generation: solve on a working set, then add the ``batch`` most
    violated remaining rows until none is violated by more than ``tol``.
    The bounds must keep every restricted problem bounded.
    """
    A_ub = np.atleast_2d(np.asarray(A_ub, float))
    b_ub = np.asarray(b_ub, float)
    m = A_ub.shape[0]
    if m <= 4 * batch:
        return linprog(c, A_ub, b_ub, bounds=bounds, tol=tol)
    scale = np.maximum(np.linalg.norm(A_ub, axis=1), 1e-300)
    work = list(range(min(batch, m)))
    total = 0
    for _ in range(max_rounds):
        res = linprog(c, A_ub[work], b_ub[work], bounds=bounds, tol=tol)
        total += res.iterations
        if not res.success:
            return LPResult(res.status, None, res.fun, total)
        viol = (A_ub @ res.x - b_ub) / scale
        viol[work] = -np.inf
        order = np.argsort(-viol)[:batch]
        order = order[viol[order] > tol]
        if not len(order):
            return LPResult(OPTIMAL, res.x, res.fun, total)
        work.extend(int(i) for i in order)
    return LPResult(ITERATION_LIMIT, None, np.nan, total)
