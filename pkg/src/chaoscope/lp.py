"""Dense two-phase tableau simplex with Bland's pivoting rule.

Sized for the small linear programs this package solves (a few hundred
constraints at most). Bland's rule guarantees termination on degenerate
problems and makes the returned vertex reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class LPError(RuntimeError):
    pass


class InfeasibleError(LPError):
    pass


class UnboundedError(LPError):
    pass


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    fun: float
    iterations: int


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]


def _run(T, basis, cost_row, allowed, tol, max_iter):
    """Iterate Bland pivots on tableau ``T`` (last column = rhs) until optimal."""
    n_rows = T.shape[0] - 2  # two trailing cost rows
    it = 0
    while True:
        reduced = T[cost_row, :-1]
        entering = next((j for j in range(len(reduced)) if allowed[j] and reduced[j] < -tol), None)
        if entering is None:
            return it
        column = T[:n_rows, entering]
        best_ratio, leaving = np.inf, None
        for r in range(n_rows):
            if column[r] > tol:
                ratio = T[r, -1] / column[r]
                if (leaving is None or ratio < best_ratio - tol
                        or (abs(ratio - best_ratio) <= tol and basis[r] < basis[leaving])):
                    best_ratio, leaving = ratio, r
        if leaving is None:
            raise UnboundedError("objective is unbounded below")
        _pivot(T, leaving, entering)
        basis[leaving] = entering
        it += 1
        if it > max_iter:
            raise LPError(f"simplex did not terminate in {max_iter} pivots")


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, tol: float = 1e-11,
            max_iter: int = 50_000) -> LPResult:
    """Minimize ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``."""
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    m_ub, m_eq = len(b_ub), len(b_eq)
    m = m_ub + m_eq

    # columns: [x (n) | slacks (m_ub) | artificials (m)] + rhs
    A = np.zeros((m, n + m_ub))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    flip = b < 0
    A[flip] *= -1
    b = np.where(flip, -b, b)

    n_struct = n + m_ub
    needs_art = [r for r in range(m) if r >= m_ub or flip[r]]
    n_art = len(needs_art)
    T = np.zeros((m + 2, n_struct + n_art + 1))
    T[:m, :n_struct] = A
    T[:m, -1] = b
    basis = [0] * m
    for r in range(m_ub):
        if not flip[r]:
            basis[r] = n + r
    for a, r in enumerate(needs_art):
        T[r, n_struct + a] = 1.0
        basis[r] = n_struct + a
    # row m: phase-2 costs, row m+1: phase-1 costs
    T[m, :n] = c
    T[m + 1, n_struct:n_struct + n_art] = 1.0
    for r in range(m):
        for cost_row in (m, m + 1):
            if T[cost_row, basis[r]] != 0.0:
                T[cost_row] -= T[cost_row, basis[r]] * T[r]

    iterations = 0
    if n_art:
        allowed = [True] * (n_struct + n_art)
        iterations += _run(T, basis, m + 1, allowed, tol, max_iter)
        if -T[m + 1, -1] > tol * max(1.0, np.max(np.abs(b), initial=0.0)) * 10:
            raise InfeasibleError("linear program is infeasible")
        # drive zero-level artificials out of the basis
        for r in range(m):
            if basis[r] >= n_struct:
                candidates = [j for j in range(n_struct) if abs(T[r, j]) > tol]
                if candidates:
                    _pivot(T, r, candidates[0])
                    basis[r] = candidates[0]
        T[:, n_struct:n_struct + n_art] = 0.0
        # redundant rows keep a zero artificial basic; they are harmless once frozen
    allowed = [True] * n_struct + [False] * n_art
    iterations += _run(T, basis, m, allowed, tol, max_iter)

    x = np.zeros(n_struct + n_art)
    for r in range(m):
        x[basis[r]] = T[r, -1]
    x = x[:n]
    return LPResult(x=x, fun=float(c @ x), iterations=iterations)
