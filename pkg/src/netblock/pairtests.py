"""Pairwise region dependence tests.

``test1`` thresholds the largest squared cross-correlation between the
components of two regions, ``test2`` does the same with nodewise
regression residuals, and ``test3`` is the Fisher-z baseline on the two
leading principal component scores.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DimensionMismatchError, DomainError
from .linalg_stats import as_panel, first_pc_scores, standardize_centered
from .null_dist import (
    gumbel_quantile,
    gumbel_sf,
    normal_quantile,
    normal_two_sided_pvalue,
)
from .sparse_regress import default_delta, nodewise_residual_panel

FISHER_Z_CLAMP = 38.0
METHODS = ("test1", "test2", "test3")


@dataclass(frozen=True)
class TestOutcome:
    pair: tuple[int, int]
    statistic: float
    p_value: float
    threshold: float
    reject: bool
    method: str
    d_st: int
    argmax: tuple[int, int] | None = None

    __test__ = False  # keep pytest from collecting this class

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "statistic": self.statistic,
            "p_value": self.p_value,
            "threshold": self.threshold,
            "reject": self.reject,
            "method": self.method,
            "d_st": self.d_st,
            "argmax": None if self.argmax is None else list(self.argmax),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestOutcome":
        return cls(
            pair=tuple(d["pair"]),
            statistic=float(d["statistic"]),
            p_value=float(d["p_value"]),
            threshold=float(d["threshold"]),
            reject=bool(d["reject"]),
            method=d["method"],
            d_st=int(d["d_st"]),
            argmax=None if d.get("argmax") is None else tuple(d["argmax"]),
        )


def normalize_method(method) -> str:
    m = str(method).lower()
    if m in ("1", "2", "3"):
        m = "test" + m
    if m not in METHODS:
        raise DomainError(f"unknown test {method!r}; choose from {METHODS}")
    return m


def _same_length(a, b):
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatchError(
            f"panels have different scan counts: {a.shape[0]} vs {b.shape[0]}"
        )


def max_corr_statistic(za, zb):
    """Extreme-value statistic from two unit-variance centered panels.

    Returns ``(statistic, (i, j))``; ``(i, j)`` is the first cross pair in
    row-major order attaining the largest squared correlation.
    """
    n = za.shape[0]
    d = za.shape[1] * zb.shape[1]
    if d < 2:
        raise DomainError("the statistic needs q_s * q_t >= 2 (log log d must be finite)")
    r2 = np.square(za.T @ zb / n)
    flat = int(np.argmax(r2))
    i, j = divmod(flat, r2.shape[1])
    peak = min(float(r2[i, j]), 1.0)
    stat = n * peak - 2.0 * math.log(d) + math.log(math.log(d))
    return stat, (i, j)


def _gumbel_outcome(za, zb, alpha, method, pair):
    stat, where = max_corr_statistic(za, zb)
    threshold = gumbel_quantile(alpha)
    return TestOutcome(
        pair=pair, statistic=stat, p_value=gumbel_sf(stat), threshold=threshold,
        reject=stat > threshold, method=method, d_st=za.shape[1] * zb.shape[1],
        argmax=where,
    )


def _standardized(panel):
    x = as_panel(panel)
    return standardize_centered(x - x.mean(axis=0), x)


def _standardized_residuals(panel, solver, delta):
    x = as_panel(panel)
    resid = nodewise_residual_panel(x, method=solver, delta=delta)
    return standardize_centered(resid, x)


def test1(a, b, alpha: float = 0.05, pair=(0, 1)) -> TestOutcome:
    a, b = as_panel(a, "a"), as_panel(b, "b")
    _same_length(a, b)
    if a.shape[1] * b.shape[1] < 2:
        raise DomainError("test1 needs q_s * q_t >= 2")
    return _gumbel_outcome(_standardized(a), _standardized(b), alpha, "test1", tuple(pair))


def test2(a, b, alpha: float = 0.05, method: str = "lasso", delta: float | None = None,
          pair=(0, 1)) -> TestOutcome:
    """Max-correlation test on nodewise regression residuals.

    ``method`` picks the solver (``"lasso"`` or ``"dantzig"``); ``delta``
    defaults to 2.02 for the Lasso and 2 for the Dantzig selector.
    """
    a, b = as_panel(a, "a"), as_panel(b, "b")
    _same_length(a, b)
    if a.shape[1] * b.shape[1] < 2:
        raise DomainError("test2 needs q_s * q_t >= 2")
    if delta is None:
        delta = default_delta(method)
    za = _standardized_residuals(a, method, delta)
    zb = _standardized_residuals(b, method, delta)
    return _gumbel_outcome(za, zb, alpha, "test2", tuple(pair))


def fisher_z(rho: float) -> float:
    """``atanh(rho)``, clamped to +-38 so perfect correlation stays finite."""
    if abs(rho) >= 1.0:
        return math.copysign(FISHER_Z_CLAMP, rho)
    return max(-FISHER_Z_CLAMP, min(FISHER_Z_CLAMP, math.atanh(rho)))


def _fisher_outcome(sa, sb, alpha, pair):
    n = sa.shape[0]
    rho = float(np.dot(sa, sb) / math.sqrt(np.dot(sa, sa) * np.dot(sb, sb)))
    rho = max(-1.0, min(1.0, rho))
    z = fisher_z(rho)
    scaled = math.sqrt(n - 3) * abs(z)
    threshold = normal_quantile(1.0 - alpha / 2.0) / math.sqrt(n - 3)
    return TestOutcome(
        pair=pair, statistic=z, p_value=normal_two_sided_pvalue(scaled),
        threshold=threshold, reject=abs(z) > threshold, method="test3", d_st=1,
    )


def test3(a, b, alpha: float = 0.05, pair=(0, 1)) -> TestOutcome:
    """Fisher-z test between the leading principal component scores.

    ``statistic`` is the signed Fisher z of the score correlation and
    ``threshold`` is ``z_{alpha/2} / sqrt(n - 3)``; the decision is two-sided,
    rejecting when ``|statistic| > threshold``.
    """
    a, b = as_panel(a, "a"), as_panel(b, "b")
    _same_length(a, b)
    return _fisher_outcome(first_pc_scores(a), first_pc_scores(b), alpha, tuple(pair))


def region_pairs(p: int):
    return list(combinations(range(p), 2))


def prepare_regions(panels, method="test1", solver="lasso", delta=None, workers=1):
    """Per-region summaries that every pair involving the region reuses."""
    method = normalize_method(method)
    panels = [as_panel(x, f"region {k}") for k, x in enumerate(panels)]
    if len({x.shape[0] for x in panels}) > 1:
        raise DimensionMismatchError("all regions must share the same number of scans")
    if method == "test1":
        fn = _standardized
    elif method == "test2":
        d = default_delta(solver) if delta is None else delta
        fn = lambda x: _standardized_residuals(x, solver, d)  # noqa: E731
    else:
        fn = first_pc_scores
    if workers > 1 and len(panels) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, panels))
    return [fn(x) for x in panels]


def pairwise_scan(panels, alpha: float = 0.05, method="test1", solver="lasso",
                  delta=None, workers: int = 1, layout=None) -> list[TestOutcome]:
    """Run one test per unordered region pair ``(s, t)``, ``s < t``, in
    lexicographic order, each at its marginal level ``alpha``."""
    method = normalize_method(method)
    if layout is not None and len(layout.widths) != len(panels):
        raise DimensionMismatchError(
            f"layout has {len(layout.widths)} regions but {len(panels)} panels were given"
        )
    if len(panels) < 2:
        raise DomainError("need at least two regions")
    prepared = prepare_regions(panels, method, solver, delta, workers)
    pairs = region_pairs(len(prepared))
    if method == "test3":
        return [_fisher_outcome(prepared[s], prepared[t], alpha, (s, t)) for s, t in pairs]
    return [_gumbel_outcome(prepared[s], prepared[t], alpha, method, (s, t)) for s, t in pairs]


# these names start with "test"; stop pytest from collecting them when imported
for _fn in (test1, test2, test3):
    _fn.__test__ = False
del _fn
