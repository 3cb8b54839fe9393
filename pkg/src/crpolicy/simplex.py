"""Self-contained dense simplex solver for small linear programs.

Solves   min c'x   s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0
by the two-phase tableau method. Pivot columns follow Dantzig's rule until
the objective stalls on degenerate pivots, after which Bland's rule takes
over to rule out cycling. Written for the exact subproblem LPs in this
package (a few hundred rows), not as a general-purpose solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import SolverError

__all__ = ["SimplexResult", "simplex_solve"]

_TOL = 1e-10


@dataclass
class SimplexResult:
    x: np.ndarray          # primal solution over the structural variables
    fun: float             # optimal objective value (min sense)
    dual_ub: np.ndarray    # multipliers for the A_ub rows
    dual_eq: np.ndarray    # multipliers for the A_eq rows
    iterations: int


def _pivot(tab: np.ndarray, row: int, col: int, basis: np.ndarray) -> None:
    tab[row] /= tab[row, col]
    factor = tab[:, col].copy()
    factor[row] = 0.0
    tab -= np.outer(factor, tab[row])
    # The rank-one update leaves roundoff in the pivot column; force it exact.
    tab[:, col] = 0.0
    tab[row, col] = 1.0
    basis[row] = col


def _run(tab: np.ndarray, basis: np.ndarray, ncols: int, max_iter: int) -> int:
    """Drive the tableau to optimality; returns the pivot count."""
    stall = 0
    bland = False
    last_obj = tab[-1, -1]
    for it in range(max_iter):
        costs = tab[-1, :ncols]
        if bland:
            neg = np.flatnonzero(costs < -_TOL)
            if neg.size == 0:
                return it
            col = int(neg[0])
        else:
            col = int(np.argmin(costs))
            if costs[col] >= -_TOL:
                return it
        ratios = np.full(tab.shape[0] - 1, np.inf)
        pos = tab[:-1, col] > _TOL
        if not np.any(pos):
            raise SolverError("linear program is unbounded")
        ratios[pos] = tab[:-1, -1][pos] / tab[:-1, col][pos]
        best = ratios.min()
        candidates = np.flatnonzero(ratios <= best + _TOL)
        # Leaving-variable tie-break on the smallest basis index (Bland-compatible).
        row = int(candidates[np.argmin(basis[candidates])])
        _pivot(tab, row, col, basis)
        obj = tab[-1, -1]
        if obj > last_obj + 1e-12 * (1.0 + abs(last_obj)):
            stall = 0
            last_obj = obj
        else:
            stall += 1
            if stall > 2 * tab.shape[0] + 50:
                bland = True
        if not np.all(np.isfinite(tab[-1])):
            raise SolverError("simplex tableau became non-finite")
    raise SolverError(f"simplex exceeded {max_iter} pivots")


def simplex_solve(
    c: np.ndarray,
    A_ub: Optional[np.ndarray] = None,
    b_ub: Optional[np.ndarray] = None,
    A_eq: Optional[np.ndarray] = None,
    b_eq: Optional[np.ndarray] = None,
    max_iter: int = 50_000,
) -> SimplexResult:
    c = np.asarray(c, dtype=float)
    nvar = c.shape[0]
    A_ub = np.zeros((0, nvar)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.atleast_1d(np.asarray(b_ub, dtype=float))
    A_eq = np.zeros((0, nvar)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.atleast_1d(np.asarray(b_eq, dtype=float))
    n_ub, n_eq = A_ub.shape[0], A_eq.shape[0]
    nrows = n_ub + n_eq

    # Standard form: slacks on the inequality rows, then flip rows to b >= 0.
    A = np.zeros((nrows, nvar + n_ub))
    A[:n_ub, :nvar] = A_ub
    A[:n_ub, nvar:] = np.eye(n_ub)
    A[n_ub:, :nvar] = A_eq
    b = np.concatenate([b_ub, b_eq])
    flip = b < 0
    A[flip] *= -1.0
    b = np.abs(b)
    ncols = nvar + n_ub
    c_std = np.concatenate([c, np.zeros(n_ub)])
    A_std = A.copy()  # pristine copy for the dual solve

    # Phase 1: artificial variables provide the identity starting basis.
    tab = np.zeros((nrows + 1, ncols + nrows + 1))
    tab[:-1, :ncols] = A
    tab[:-1, ncols : ncols + nrows] = np.eye(nrows)
    tab[:-1, -1] = b
    tab[-1, ncols : ncols + nrows] = 1.0
    basis = np.arange(ncols, ncols + nrows)
    tab[-1] -= tab[:-1].sum(axis=0)
    iters = _run(tab, basis, ncols + nrows, max_iter)
    if tab[-1, -1] < -1e-7:
        raise SolverError(f"linear program infeasible (phase-1 residual {-tab[-1, -1]:.3e})")

    # Pivot artificials out of the basis; rows that cannot be pivoted are redundant.
    keep = np.ones(nrows, dtype=bool)
    for i in range(nrows):
        if basis[i] >= ncols:
            pivots = np.flatnonzero(np.abs(tab[i, :ncols]) > 1e-9)
            if pivots.size:
                _pivot(tab, i, int(pivots[0]), basis)
            else:
                keep[i] = False
    row_ids = np.flatnonzero(keep)
    if row_ids.size < nrows:
        tab = tab[np.concatenate([row_ids, [nrows]])]
        basis = basis[keep]

    # Phase 2 on the original objective.
    tab = np.delete(tab, np.s_[ncols : ncols + nrows], axis=1)
    tab[-1, :] = 0.0
    tab[-1, :ncols] = c_std
    for i, j in enumerate(basis):
        if tab[-1, j] != 0.0:
            tab[-1] -= tab[-1, j] * tab[i]
    iters += _run(tab, basis, ncols, max_iter)

    x = np.zeros(ncols)
    x[basis] = tab[:-1, -1]

    # Duals of the standard-form rows from B' y = c_B, then undo the row flips.
    B = A_std[np.ix_(row_ids, basis)]
    try:
        y_kept = np.linalg.solve(B.T, c_std[basis])
    except np.linalg.LinAlgError:
        y_kept, *_ = np.linalg.lstsq(B.T, c_std[basis], rcond=None)
    y = np.zeros(nrows)
    y[row_ids] = y_kept
    y[flip] *= -1.0
    return SimplexResult(
        x=x[:nvar].copy(),
        fun=float(c @ x[:nvar]),
        dual_ub=y[:n_ub].copy(),
        dual_eq=y[n_ub:].copy(),
        iterations=iters,
    )
