"""Dense tableau simplex for small linear programs.

Solves ``max c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0`` with
``b_ub >= 0``.  Pivoting follows Bland's rule.  A :class:`SimplexLP`
keeps its last optimal basis, so repeated solves over the same feasible
set with different objectives restart from a feasible vertex and usually
need only a handful of pivots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOL = 1e-9
REFACTOR_EVERY = 2000


class LPError(RuntimeError):
    pass


class InfeasibleError(LPError):
    pass


class UnboundedError(LPError):
    pass


@dataclass
class LPResult:
    value: float
    x: np.ndarray
    pivots: int


def independent_rows(a: np.ndarray, tol: float = 1e-10) -> list[int]:
    """Indices of a maximal linearly independent subset of rows, greedy in order."""
    keep: list[int] = []
    basis = np.zeros((0, a.shape[1]))
    for i, row in enumerate(a):
        r = row - basis.T @ (basis @ row) if len(keep) else row.copy()
        norm = np.linalg.norm(r)
        if norm > tol * max(1.0, np.linalg.norm(row)):
            basis = np.vstack([basis, r / norm])
            keep.append(i)
    return keep


class SimplexLP:
    """Reusable feasible region; call :meth:`maximize` with any objective."""

    def __init__(self, A_ub, b_ub, A_eq=None, b_eq=None, tol: float = TOL):
        A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
        b_ub = np.asarray(b_ub, dtype=float)
        if np.any(b_ub < 0):
            raise ValueError("b_ub must be non-negative")
        self.n = A_ub.shape[1]
        self.tol = tol
        if A_eq is None:
            A_eq, b_eq = np.zeros((0, self.n)), np.zeros(0)
        A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float)).reshape(-1, self.n)
        b_eq = np.asarray(b_eq, dtype=float).reshape(-1)
        keep = independent_rows(np.hstack([A_eq, b_eq[:, None]]))
        A_eq, b_eq = A_eq[keep], b_eq[keep]
        if keep and np.linalg.matrix_rank(A_eq) < len(keep):
            raise InfeasibleError("inconsistent equality constraints")
        neg = b_eq < 0
        A_eq[neg] *= -1
        b_eq[neg] *= -1

        m_ub, m_eq = len(b_ub), len(b_eq)
        self.n_total = self.n + m_ub
        # [x | slacks] for the original rows
        self._A = np.vstack([
            np.hstack([A_ub, np.eye(m_ub)]),
            np.hstack([A_eq, np.zeros((m_eq, m_ub))]),
        ])
        self._b = np.concatenate([b_ub, b_eq])
        self._phase_one(m_ub, m_eq)
        self.pivots_total = 0
        self._since_refactor = 0

    def _phase_one(self, m_ub: int, m_eq: int) -> None:
        m = m_ub + m_eq
        art = np.vstack([np.zeros((m_ub, m_eq)), np.eye(m_eq)])
        self.T = np.hstack([self._A, art])
        self.beta = self._b.copy()
        self.basis = np.concatenate([np.arange(self.n, self.n_total),
                                     np.arange(self.n_total, self.n_total + m_eq)])
        if m_eq:
            c = np.zeros(self.T.shape[1])
            c[self.n_total:] = -1.0
            self._run(c)
            if -float(c[self.basis] @ self.beta) > 1e-7:
                raise InfeasibleError("no feasible point")
            # drive artificials out of the basis
            rows = []
            for i in range(m):
                if self.basis[i] >= self.n_total:
                    cols = np.flatnonzero(np.abs(self.T[i, :self.n_total]) > 1e-9)
                    if cols.size:
                        self._pivot(i, int(cols[0]))
                    else:
                        rows.append(i)
            if rows:
                keep = np.setdiff1d(np.arange(m), rows)
                self.T, self.beta, self.basis = self.T[keep], self.beta[keep], self.basis[keep]
                self._A, self._b = self._A[keep], self._b[keep]
        self.T = np.ascontiguousarray(self.T[:, :self.n_total])

    def _pivot(self, r: int, j: int) -> None:
        T = self.T
        piv = T[r, j]
        T[r] /= piv
        self.beta[r] /= piv
        col = T[:, j].copy()
        col[r] = 0.0
        nz = np.flatnonzero(col)
        if nz.size:
            T[nz] -= col[nz, None] * T[r]
            self.beta[nz] -= col[nz] * self.beta[r]
            np.maximum(self.beta, 0.0, out=self.beta)
        self.basis[r] = j

    def _run(self, c: np.ndarray, max_pivots: int = 100000) -> int:
        tol = self.tol
        pivots = 0
        ratios = np.empty(len(self.beta))
        while True:
            improving = (c - c[self.basis] @ self.T) > tol
            j = int(improving.argmax())
            if not improving[j]:
                return pivots
            colj = self.T[:, j]
            pos = colj > tol
            if not pos.any():
                raise UnboundedError("objective unbounded")
            ratios.fill(np.inf)
            np.divide(self.beta, colj, out=ratios, where=pos)
            ties = np.flatnonzero(ratios <= ratios.min() + tol)
            r = int(ties[np.argmin(self.basis[ties])]) if ties.size > 1 else int(ties[0])
            self._pivot(r, j)
            pivots += 1
            if pivots > max_pivots:
                raise LPError("pivot limit exceeded")

    def _refactor(self) -> None:
        B = self._A[:, self.basis]
        self.T = np.linalg.solve(B, self._A)
        self.beta = np.maximum(np.linalg.solve(B, self._b), 0.0)
        self._since_refactor = 0

    def maximize(self, c) -> LPResult:
        c = np.asarray(c, dtype=float)
        if c.shape != (self.n,):
            raise ValueError(f"objective must have length {self.n}")
        if self._since_refactor > REFACTOR_EVERY:
            self._refactor()
        full = np.concatenate([c, np.zeros(self.n_total - self.n)])
        pivots = self._run(full)
        self.pivots_total += pivots
        self._since_refactor += pivots
        x = np.zeros(self.n_total)
        x[self.basis] = self.beta
        return LPResult(float(full[self.basis] @ self.beta), x[:self.n].copy(), pivots)


def linprog_max(c, A_ub, b_ub, A_eq=None, b_eq=None, tol: float = TOL) -> LPResult:
    """One-shot maximization."""
    return SimplexLP(A_ub, b_ub, A_eq, b_eq, tol).maximize(c)
