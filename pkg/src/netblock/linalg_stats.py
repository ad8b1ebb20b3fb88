"""Dense numerical kernels used throughout the package.

Panels are plain ``(n, q)`` float arrays: rows are scans, columns are
components. Every covariance here uses the ``1/n`` divisor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    DomainError,
    NoConvergenceError,
    NotPositiveDefiniteError,
    ZeroVarianceError,
)

MIN_SCANS = 4
# a column whose spread is below this fraction of its magnitude is constant
_REL_ZERO = 1e-12


def as_panel(data, name: str = "panel") -> np.ndarray:
    """Coerce ``data`` to a validated 2-D float64 panel."""
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise DomainError(f"{name} must be 2-D, got shape {x.shape}")
    n, q = x.shape
    if n < MIN_SCANS:
        raise DomainError(f"{name} needs at least {MIN_SCANS} scans, got {n}")
    if q < 1:
        raise DomainError(f"{name} has no columns")
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} contains non-finite values")
    return x


def _check_spread(centered: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Return column variances, raising if any column is (numerically) constant."""
    var = np.mean(centered**2, axis=0)
    scale = np.max(np.abs(reference), axis=0)
    bad = (var <= 0) | (np.sqrt(var) <= _REL_ZERO * scale)
    if np.any(bad):
        raise ZeroVarianceError(int(np.flatnonzero(bad)[0]))
    return var


def center(panel) -> np.ndarray:
    x = as_panel(panel)
    xc = x - x.mean(axis=0)
    _check_spread(xc, x)
    return xc


def center_and_detrend(panel) -> np.ndarray:
    """Remove each column's mean and its least-squares linear trend in scan index."""
    x = as_panel(panel)
    n = x.shape[0]
    t = np.arange(n, dtype=float)
    t -= t.mean()
    xc = x - x.mean(axis=0)
    slope = (t @ xc) / (t @ t)
    out = xc - np.outer(t, slope)
    _check_spread(out, x)
    return out


def ar1_whiten(panel, phi=None) -> tuple[np.ndarray, np.ndarray]:
    """Prewhiten each centered column with a fitted AR(1) filter.

    Parameters
    ----------
    panel : array_like, shape (n, q)
        Centered panel.
    phi : float or array_like, optional
        Force the autoregressive coefficient(s) instead of estimating them
        from the lag-1 sample autocorrelation.

    Returns
    -------
    whitened : ndarray, shape (n, q)
        Row 0 is ``x_0 * sqrt(1 - phi**2)``; row ``k >= 1`` is
        ``x_k - phi * x_{k-1}``.
    phi : ndarray, shape (q,)
        Coefficients used, clipped to ``(-0.999, 0.999)``.
    """
    x = as_panel(panel)
    _check_spread(x - x.mean(axis=0), x)
    q = x.shape[1]
    if phi is None:
        num = np.sum(x[1:] * x[:-1], axis=0)
        den = np.sum(x * x, axis=0)
        phi = num / den
    phi = np.clip(np.broadcast_to(np.asarray(phi, dtype=float), (q,)), -0.999, 0.999)
    out = np.empty_like(x)
    out[0] = x[0] * np.sqrt(1.0 - phi**2)
    out[1:] = x[1:] - phi * x[:-1]
    _check_spread(out - out.mean(axis=0), x)
    return out, phi.copy()


def sample_covariance(a, b) -> np.ndarray:
    a = as_panel(a, "a")
    b = as_panel(b, "b")
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatchError(
            f"panels have different scan counts: {a.shape[0]} vs {b.shape[0]}"
        )
    ac = a - a.mean(axis=0)
    bc = b - b.mean(axis=0)
    return ac.T @ bc / a.shape[0]


def standardize_centered(xc: np.ndarray, reference=None) -> np.ndarray:
    """Scale already-centered columns to unit ``1/n`` variance."""
    var = _check_spread(xc, xc if reference is None else reference)
    return xc / np.sqrt(var)


def sample_correlation(a, b=None) -> np.ndarray:
    """Pearson correlations between the columns of ``a`` and ``b``.

    With ``b`` omitted the result is the correlation matrix of ``a`` with
    an exact unit diagonal.
    """
    if b is a:
        b = None
    a = as_panel(a, "a")
    za = standardize_centered(a - a.mean(axis=0), a)
    if b is None:
        r = za.T @ za / a.shape[0]
        r = 0.5 * (r + r.T)
        np.fill_diagonal(r, 1.0)
        return np.clip(r, -1.0, 1.0)
    b = as_panel(b, "b")
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatchError(
            f"panels have different scan counts: {a.shape[0]} vs {b.shape[0]}"
        )
    zb = standardize_centered(b - b.mean(axis=0), b)
    return np.clip(za.T @ zb / a.shape[0], -1.0, 1.0)


def _first_failing_pivot(m: np.ndarray) -> tuple[int, float]:
    d = m.shape[0]
    L = np.zeros_like(m)
    for j in range(d):
        s = m[j, j] - L[j, :j] @ L[j, :j]
        if not s > 0:
            return j, float(s)
        L[j, j] = np.sqrt(s)
        L[j + 1 :, j] = (m[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return d - 1, float("nan")


def cholesky(m) -> np.ndarray:
    """Lower-triangular factor ``L`` with ``L @ L.T == m``.

    Raises
    ------
    NotPositiveDefiniteError
        Carries the index of the first pivot that is not strictly positive.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got {m.shape}")
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        pivot, value = _first_failing_pivot(m)
        raise NotPositiveDefiniteError(pivot, value) from None


def symmetric_eigen(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and matching orthonormal eigenvectors (columns)."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got {m.shape}")
    try:
        values, vectors = np.linalg.eigh(0.5 * (m + m.T))
    except np.linalg.LinAlgError as exc:
        raise NoConvergenceError(str(exc)) from None
    return values[::-1].copy(), vectors[:, ::-1].copy()


@dataclass
class PcaSummary:
    components: np.ndarray
    loadings: np.ndarray
    explained_variance_fractions: np.ndarray
    k_selected: int


def pca_summarize(panel, var_fraction: float = 0.9) -> PcaSummary:
    """Project a centered panel onto its leading principal axes.

    Keeps the smallest number of axes whose cumulative share of the total
    variance reaches ``var_fraction``. Each loading vector is signed so its
    largest-magnitude entry is positive.
    """
    if not 0 < var_fraction <= 1:
        raise DomainError(f"var_fraction must lie in (0, 1], got {var_fraction}")
    x = as_panel(panel)
    xc = x - x.mean(axis=0)
    _check_spread(xc, x)
    cov = xc.T @ xc / x.shape[0]
    values, vectors = symmetric_eigen(cov)
    values = np.clip(values, 0.0, None)
    fractions = values / values.sum()
    cumulative = np.cumsum(fractions)
    k = int(np.searchsorted(cumulative, var_fraction - 1e-10)) + 1
    k = min(k, x.shape[1])
    loadings = vectors[:, :k]
    lead = np.argmax(np.abs(loadings), axis=0)
    signs = np.sign(loadings[lead, np.arange(k)])
    signs[signs == 0] = 1.0
    loadings = loadings * signs
    return PcaSummary(
        components=xc @ loadings,
        loadings=loadings,
        explained_variance_fractions=fractions,
        k_selected=k,
    )


def first_pc_scores(panel) -> np.ndarray:
    """Scores on the leading principal axis (used by the Fisher-z baseline)."""
    x = as_panel(panel)
    xc = x - x.mean(axis=0)
    _check_spread(xc, x)
    if x.shape[1] == 1:
        return xc[:, 0].copy()
    _, vectors = symmetric_eigen(xc.T @ xc / x.shape[0])
    v = vectors[:, 0]
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return xc @ v
