"""Small dense simplex solver for the fixed-dimension LPs used in this package.

Two-phase tableau method with Bland's rule, so pivoting is deterministic and
cycling cannot occur. Problem sizes are tiny (a handful of rows, tens of
columns), which is where a dense tableau beats calling out to a general solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-12


@dataclass
class StandardResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    y: np.ndarray | None
    value: float
    basis: list[int]


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    colvals = T[:, col].copy()
    colvals[row] = 0.0
    T -= np.outer(colvals, T[row])


def _run(T: np.ndarray, basis: list[int], ncols: int) -> str:
    """Minimise the objective stored in the last row of T over the first ncols columns."""
    m = T.shape[0] - 1
    scale = max(1.0, float(np.abs(T[:m, :ncols]).max(initial=0.0)))
    tol = PIVOT_TOL * scale
    for _ in range(50 * (ncols + m) + 100):
        obj = T[-1, :ncols]
        candidates = np.flatnonzero(obj < -tol)
        if candidates.size == 0:
            return "optimal"
        col = int(candidates[0])
        column = T[:m, col]
        positive = np.flatnonzero(column > tol)
        if positive.size == 0:
            return "unbounded"
        ratios = T[positive, -1] / column[positive]
        best = ratios.min()
        ties = positive[ratios <= best + tol * max(1.0, abs(best))]
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
    raise RuntimeError("simplex iteration limit reached")


def simplex_standard(cost: np.ndarray, M: np.ndarray, rhs: np.ndarray) -> StandardResult:
    """Solve ``min cost.y  s.t.  M y = rhs, y >= 0``."""
    cost = np.asarray(cost, dtype=float)
    M = np.array(M, dtype=float)
    rhs = np.array(rhs, dtype=float)
    m, n = M.shape
    flip = rhs < 0
    M[flip] *= -1.0
    rhs[flip] *= -1.0

    # phase 1 with one artificial per row
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = M
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = rhs
    T[-1, :n] = -M.sum(axis=0)
    T[-1, -1] = -rhs.sum()
    basis = list(range(n, n + m))
    _run(T, basis, n + m)
    scale = max(1.0, float(np.abs(rhs).max(initial=0.0)))
    if -T[-1, -1] > 1e-9 * scale:
        return StandardResult("infeasible", None, np.inf, basis)

    # drive remaining artificials out of the basis where possible
    keep_rows = []
    for r in range(m):
        if basis[r] >= n:
            nz = np.flatnonzero(np.abs(T[r, :n]) > 1e-9)
            if nz.size:
                _pivot(T, r, int(nz[0]))
                basis[r] = int(nz[0])
                keep_rows.append(r)
        else:
            keep_rows.append(r)
    T = np.vstack([T[keep_rows][:, list(range(n)) + [n + m]], np.zeros((1, n + 1))])
    basis = [basis[r] for r in keep_rows]

    # phase 2
    T[-1, :n] = cost
    T[-1, -1] = 0.0
    for r, bcol in enumerate(basis):
        if T[-1, bcol] != 0.0:
            T[-1] -= T[-1, bcol] * T[r]
    status = _run(T, basis, n)
    if status != "optimal":
        return StandardResult(status, None, -np.inf, basis)
    y = np.zeros(n)
    for r, bcol in enumerate(basis):
        y[bcol] = T[r, -1]
    return StandardResult("optimal", y, float(cost @ y), basis)


def lp_min(c: np.ndarray, A: np.ndarray, b: np.ndarray) -> tuple[str, np.ndarray | None, float]:
    """Solve ``min c.x  s.t.  A x <= b`` with x free, through its standard-form dual.

    The dual ``min b.y  s.t.  A^T y = -c, y >= 0`` has one row per primal
    variable; the primal optimum is recovered from the optimal dual basis by
    solving the active constraints.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    res = simplex_standard(b, A.T, -c)
    if res.status == "unbounded":
        return "infeasible", None, np.inf
    if res.status == "infeasible":
        return "unbounded", None, -np.inf
    B = res.basis
    if len(B) == A.shape[1]:
        x = np.linalg.solve(A[B], b[B])
    else:
        # rank-deficient dual rows: fall back on a least-squares read of the active set
        active = np.flatnonzero(res.y > 0) if res.y is not None else np.array(B)
        x = np.linalg.lstsq(A[active], b[active], rcond=None)[0]
    return "optimal", x, float(c @ x)
