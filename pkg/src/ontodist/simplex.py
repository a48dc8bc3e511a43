"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves ``max c.x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq`` and
``x >= 0``. Intended for the small encoder programs of the classical
communication optimiser (a few dozen variables), where a dense tableau is
simpler and more predictable than a revised or interior-point method.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOL = 1e-10
MAX_PIVOTS = 100_000


class LpError(ValueError):
    """The linear program has no optimal solution."""


class LpInfeasible(LpError):
    pass


class LpUnbounded(LpError):
    pass


@dataclass(frozen=True)
class LpResult:
    x: np.ndarray
    value: float
    pivots: int


def _pivot(t: np.ndarray, basis: list[int], row: int, col: int) -> None:
    t[row] /= t[row, col]
    factors = t[:, col].copy()
    factors[row] = 0.0
    t -= np.outer(factors, t[row])
    basis[row] = col


def _iterate(t: np.ndarray, basis: list[int], n_enter: int, budget: int) -> int:
    """Run simplex pivots on the tableau; return the number of pivots used.

    Entering column: smallest index with positive reduced cost. Leaving row:
    minimum ratio, ties broken by smallest basic variable index (Bland).
    """
    m = t.shape[0] - 1
    pivots = 0
    while True:
        reduced = t[-1, :n_enter]
        candidates = np.flatnonzero(reduced > TOL)
        if candidates.size == 0:
            return pivots
        col = int(candidates[0])
        column = t[:m, col]
        positive = column > TOL
        if not positive.any():
            raise LpUnbounded("objective is unbounded above")
        ratios = np.full(m, np.inf)
        ratios[positive] = t[:m, -1][positive] / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + TOL * max(1.0, abs(best)))
        row = int(min(ties, key=lambda i: basis[i]))
        _pivot(t, basis, row, col)
        pivots += 1
        if pivots > budget:
            raise LpError(f"no convergence after {budget} pivots")


def linprog_max(
    c: np.ndarray,
    a_ub: np.ndarray | None = None,
    b_ub: np.ndarray | None = None,
    a_eq: np.ndarray | None = None,
    b_eq: np.ndarray | None = None,
) -> LpResult:
    """Maximise ``c @ x`` over the polyhedron; raises :class:`LpInfeasible` or :class:`LpUnbounded`."""
    c = np.asarray(c, dtype=float).reshape(-1)
    n = c.size
    a_ub = np.zeros((0, n)) if a_ub is None else np.asarray(a_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).reshape(-1)
    a_eq = np.zeros((0, n)) if a_eq is None else np.asarray(a_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).reshape(-1)
    if len(a_ub) != len(b_ub) or len(a_eq) != len(b_eq):
        raise ValueError("constraint matrix and right-hand side lengths differ")

    m_ub, m_eq = len(a_ub), len(a_eq)
    m = m_ub + m_eq
    # every row gets rhs >= 0; an inequality whose rhs was negative becomes >= after the flip
    sign_ub = np.where(b_ub < 0, -1.0, 1.0)
    sign_eq = np.where(b_eq < 0, -1.0, 1.0)
    needs_art = np.concatenate([sign_ub < 0, np.ones(m_eq, dtype=bool)])
    art_rows = np.flatnonzero(needs_art)
    n_art = art_rows.size
    width = n + m_ub + n_art

    t = np.zeros((m + 1, width + 1))
    t[:m_ub, :n] = a_ub * sign_ub[:, None]
    t[:m_ub, n : n + m_ub] = np.diag(sign_ub)
    t[:m_ub, -1] = b_ub * sign_ub
    t[m_ub:m, :n] = a_eq * sign_eq[:, None]
    t[m_ub:m, -1] = b_eq * sign_eq
    basis = [n + i for i in range(m_ub)] + [-1] * m_eq
    for k, row in enumerate(art_rows):
        t[row, n + m_ub + k] = 1.0
        basis[row] = n + m_ub + k

    pivots = 0
    if n_art:
        # phase 1: maximise -sum(artificials)
        t[-1, :] = t[art_rows].sum(axis=0)
        t[-1, n + m_ub :width] = 0.0
        pivots += _iterate(t, basis, width, MAX_PIVOTS)
        if -t[-1, -1] < -1e-8 * max(1.0, np.abs(t[:m, -1]).max(initial=0.0)):
            raise LpInfeasible("constraints admit no non-negative solution")
        # drive zero-level artificials out of the basis, or drop their redundant rows
        keep = np.ones(m + 1, dtype=bool)
        for row in range(m):
            if basis[row] >= n + m_ub:
                cols = np.flatnonzero(np.abs(t[row, : n + m_ub]) > 1e-9)
                if cols.size:
                    _pivot(t, basis, row, int(cols[0]))
                else:
                    keep[row] = False
        basis = [b for b, k in zip(basis, keep[:m]) if k]
        t = t[keep]
        t = np.delete(t, np.s_[n + m_ub : width], axis=1)
        m = t.shape[0] - 1

    # phase 2
    cost = np.concatenate([c, np.zeros(m_ub)])
    t[-1, :-1] = cost
    t[-1, -1] = 0.0
    for row, b in enumerate(basis):
        if cost[b] != 0.0:
            t[-1] -= cost[b] * t[row]
    pivots += _iterate(t, basis, n + m_ub, MAX_PIVOTS - pivots)

    x = np.zeros(n + m_ub)
    for row, b in enumerate(basis):
        x[b] = t[row, -1]
    x = x[:n]
    return LpResult(x=x, value=float(c @ x), pivots=pivots)
