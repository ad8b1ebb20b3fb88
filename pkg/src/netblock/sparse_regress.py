"""Nodewise sparse regression within a region.

Each component is regressed on the remaining components of its region,
either with the Lasso (cyclic coordinate descent) or the Dantzig selector
(linear programming). Both work on predictors rescaled to unit variance,
and both use the penalty ``delta * sqrt(var_i * log(q) / n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleError, NoConvergenceError
from .linalg_stats import _check_spread, as_panel
from .simplex import MAX_PIVOTS, linprog_bland

LASSO_DELTA = 2.02
DANTZIG_DELTA = 2.0
COEF_TOL = 1e-7
MAX_SWEEPS = 10_000
METHODS = ("lasso", "dantzig")


def default_delta(method: str) -> float:
    if method == "lasso":
        return LASSO_DELTA
    if method == "dantzig":
        return DANTZIG_DELTA
    raise DomainError(f"unknown method {method!r}; choose from {METHODS}")


def soft_threshold(x, lam):
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


@dataclass
class NodewiseFit:
    component: int
    beta_hat: np.ndarray
    intercept: float
    residuals: np.ndarray
    lam: float
    method: str
    region: str | None = None
    sweeps: int = 0


@dataclass
class _Moments:
    """Centered panel and its ``1/n`` second moments."""

    xc: np.ndarray
    mean: np.ndarray
    cov: np.ndarray
    sd: np.ndarray

    @classmethod
    def of(cls, panel):
        x = as_panel(panel)
        mean = x.mean(axis=0)
        xc = x - mean
        var = _check_spread(xc, x)
        cov = xc.T @ xc / x.shape[0]
        return cls(xc=xc, mean=mean, cov=cov, sd=np.sqrt(var))

    @property
    def n(self):
        return self.xc.shape[0]

    @property
    def q(self):
        return self.xc.shape[1]


def _lambda(var_i, q, n, delta):
    if q < 2:
        raise DomainError("the tuning rule needs at least two components (log q > 0)")
    if delta < 0:
        raise DomainError(f"delta must be non-negative, got {delta}")
    return delta * math.sqrt(var_i * math.log(q) / n)


def tuning_lambda(panel, i: int, delta: float) -> float:
    mom = _Moments.of(panel)
    return _lambda(mom.sd[i] ** 2, mom.q, mom.n, delta)


def coordinate_descent(gram, rhs, lam, fixed_zero=None, tol=COEF_TOL, max_sweeps=MAX_SWEEPS):
    """Minimise ``0.5 a'Ga - r'a + lam |a|_1`` for every column of ``rhs``.

    Columns are solved simultaneously but independently; ``fixed_zero``
    pins chosen coefficients at zero (used to drop the response from its
    own design). Sweeps are cyclic in coordinate order starting from zero.

    Returns
    -------
    coef : ndarray, shape like ``rhs``
    sweeps : int
    """
    gram = np.asarray(gram, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    squeeze = rhs.ndim == 1
    if squeeze:
        rhs = rhs[:, None]
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (rhs.shape[1],))
    d = gram.shape[0]
    diag = np.diag(gram).copy()
    coef = np.zeros_like(rhs)
    free = None if fixed_zero is None else ~np.asarray(fixed_zero, dtype=bool)
    for sweep in range(1, max_sweeps + 1):
        biggest = 0.0
        for j in range(d):
            old = coef[j].copy()
            partial = rhs[j] - gram[j] @ coef + diag[j] * old
            new = soft_threshold(partial, lam) / diag[j]
            if free is not None:
                new = new * free[j]
            coef[j] = new
            step = np.max(np.abs(new - old))
            if step > biggest:
                biggest = step
        if biggest <= tol:
            return (coef[:, 0] if squeeze else coef), sweep
    raise NoConvergenceError(f"coordinate descent did not converge in {max_sweeps} sweeps")


def _others(q, i):
    return np.array([j for j in range(q) if j != i], dtype=int)


def _fit_from_beta(mom, i, beta, lam, method, sweeps=0):
    rest = _others(mom.q, i)
    resid = mom.xc[:, i] - mom.xc[:, rest] @ beta
    intercept = float(mom.mean[i] - mom.mean[rest] @ beta)
    return NodewiseFit(
        component=i, beta_hat=beta, intercept=intercept, residuals=resid,
        lam=lam, method=method, sweeps=sweeps,
    )


def _standardized_problem(mom, i):
    rest = _others(mom.q, i)
    scale = 1.0 / mom.sd[rest]
    sigma = mom.cov[np.ix_(rest, rest)]
    b = mom.cov[rest, i]
    return rest, scale, sigma, b


def lasso_fit(panel, i: int, delta: float = LASSO_DELTA, lam: float | None = None) -> NodewiseFit:
    """Lasso regression of component ``i`` on the rest of its region.

    The penalty defaults to the tuning rule; pass ``lam`` to override it.
    """
    mom = _Moments.of(panel)
    if lam is None:
        lam = _lambda(mom.sd[i] ** 2, mom.q, mom.n, delta)
    if mom.q == 1:
        return _fit_from_beta(mom, i, np.zeros(0), lam, "lasso")
    _, scale, sigma, b = _standardized_problem(mom, i)
    gram = sigma * np.outer(scale, scale)
    alpha, sweeps = coordinate_descent(gram, scale * b, lam)
    return _fit_from_beta(mom, i, scale * alpha, lam, "lasso", sweeps)


def dantzig_solve(matrix, target, lam, max_pivots=MAX_PIVOTS) -> np.ndarray:
    """``argmin |a|_1`` subject to ``|matrix @ a - target|_inf <= lam``."""
    M = np.asarray(matrix, dtype=float)
    c = np.asarray(target, dtype=float)
    k = M.shape[1]
    if lam < 0:
        raise DomainError("lam must be non-negative")
    if np.max(np.abs(c), initial=0.0) <= lam:
        return np.zeros(k)
    # a = u - v with u, v >= 0
    split = np.hstack([M, -M])
    A_ub = np.vstack([split, -split])
    b_ub = np.concatenate([lam + c, lam - c])
    try:
        uv = linprog_bland(np.ones(2 * k), A_ub, b_ub, max_pivots=max_pivots)
    except InfeasibleError as exc:
        raise AssertionError(f"Dantzig program infeasible at lam={lam}: {exc}") from None
    return uv[:k] - uv[k:]


def dantzig_fit(panel, i: int, delta: float = DANTZIG_DELTA, lam: float | None = None) -> NodewiseFit:
    mom = _Moments.of(panel)
    if lam is None:
        lam = _lambda(mom.sd[i] ** 2, mom.q, mom.n, delta)
    if mom.q == 1:
        return _fit_from_beta(mom, i, np.zeros(0), lam, "dantzig")
    _, scale, sigma, b = _standardized_problem(mom, i)
    beta = dantzig_solve(scale[:, None] * sigma, scale * b, lam)
    return _fit_from_beta(mom, i, beta, lam, "dantzig")


def nodewise_residual_panel(panel, method: str = "lasso", delta: float | None = None) -> np.ndarray:
    """Residuals of regressing every component on the others in its region.

    Column ``i`` of the result holds the (centered) residual for component
    ``i``. A one-column region has nothing to regress on, so its residual is
    the centered column itself.
    """
    if delta is None:
        delta = default_delta(method)
    mom = _Moments.of(panel)
    q, n = mom.q, mom.n
    if q == 1:
        return mom.xc.copy()
    lams = np.array([_lambda(v, q, n, delta) for v in mom.sd**2])
    if method == "lasso":
        scale = 1.0 / mom.sd
        gram = mom.cov * np.outer(scale, scale)
        rhs = mom.cov * scale[:, None]
        # column i of rhs is the standardised cross-moment with component i
        alpha, _ = coordinate_descent(gram, rhs, lams, fixed_zero=np.eye(q, dtype=bool))
        coef = alpha * scale[:, None]
    elif method == "dantzig":
        coef = np.zeros((q, q))
        for i in range(q):
            fit = dantzig_fit(panel, i, lam=lams[i])
            coef[_others(q, i), i] = fit.beta_hat
    else:
        raise DomainError(f"unknown method {method!r}; choose from {METHODS}")
    return mom.xc - mom.xc @ coef
