"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves ``min c @ x  subject to  A_ub @ x <= b_ub,  x >= 0``.
"""

from __future__ import annotations

import numpy as np

from .errors import InfeasibleError, NoConvergenceError

MAX_PIVOTS = 1_000_000
_EPS = 1e-11


def _pivot(tab, basis, row, col):
    tab[row] /= tab[row, col]
    factors = tab[:, col].copy()
    factors[row] = 0.0
    tab -= np.outer(factors, tab[row])
    basis[row] = col


def _run(tab, basis, n_cols, budget):
    """Minimise the objective held in the last tableau row over the first ``n_cols`` columns."""
    pivots = 0
    m = tab.shape[0] - 1
    while True:
        reduced = tab[-1, :n_cols]
        entering = np.flatnonzero(reduced < -_EPS)
        if entering.size == 0:
            return pivots
        col = int(entering[0])
        column = tab[:m, col]
        positive = column > _EPS
        if not np.any(positive):
            raise InfeasibleError("linear program is unbounded")
        ratios = np.full(m, np.inf)
        ratios[positive] = tab[:m, -1][positive] / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + _EPS * max(1.0, abs(best)))
        # Bland: among tied rows leave via the smallest basic index
        row = int(ties[np.argmin(basis[ties])])
        _pivot(tab, basis, row, col)
        pivots += 1
        if pivots > budget:
            raise NoConvergenceError(f"simplex exceeded {budget} pivots")


def linprog_bland(c, A_ub, b_ub, max_pivots: int = MAX_PIVOTS) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    A = np.asarray(A_ub, dtype=float)
    b = np.asarray(b_ub, dtype=float)
    m, n = A.shape

    # rows with negative right-hand side are negated and need an artificial
    sign = np.where(b < 0, -1.0, 1.0)
    art_rows = np.flatnonzero(sign < 0)
    n_art = art_rows.size
    width = n + m + n_art
    tab = np.zeros((m + 1, width + 1))
    tab[:m, :n] = A * sign[:, None]
    tab[:m, n : n + m] = np.diag(sign)
    tab[:m, -1] = b * sign
    basis = np.arange(n, n + m)
    for k, r in enumerate(art_rows):
        tab[r, n + m + k] = 1.0
        basis[r] = n + m + k

    pivots = 0
    if n_art:
        tab[-1, n + m : width] = 1.0
        for r in art_rows:
            tab[-1] -= tab[r]
        pivots += _run(tab, basis, width, max_pivots)
        if tab[-1, -1] < -1e-9 * max(1.0, np.abs(b).max()):
            raise InfeasibleError("linear program has no feasible point")
        # drive leftover artificials out of the basis
        for r in range(m):
            if basis[r] >= n + m:
                candidates = np.flatnonzero(np.abs(tab[r, : n + m]) > _EPS)
                if candidates.size:
                    _pivot(tab, basis, r, int(candidates[0]))
        tab[:, n + m : width] = 0.0

    tab[-1] = 0.0
    tab[-1, :n] = c
    for r in range(m):
        j = basis[r]
        if j < n and c[j] != 0.0:
            tab[-1] -= c[j] * tab[r]
    _run(tab, basis, n + m, max_pivots - pivots)

    # recompute the basic solution from the original data to shed pivot drift
    full = np.hstack([A, np.eye(m)])
    cols = basis.copy()
    x = np.zeros(n + m)
    if np.all(cols < n + m):
        try:
            x[cols] = np.linalg.solve(full[:, cols], b)
        except np.linalg.LinAlgError:
            x[cols] = tab[:m, -1]
    else:
        keep = cols < n + m
        x[cols[keep]] = tab[:m, -1][keep]
    x = np.clip(x[:n], 0.0, None)
    return x
