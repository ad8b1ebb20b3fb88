"""Null distributions and rejection thresholds.

The max-correlation statistics share the Gumbel-type limit

    F(x) = exp(-exp(-x / 2) / sqrt(pi)),

whose upper ``alpha`` quantile is ``-log(pi) - 2 log(log(1 / (1 - alpha)))``.
"""

import math
from statistics import NormalDist

from .errors import DomainError

_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)
_LOG_PI = math.log(math.pi)


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def _tail_mass(x):
    # pi^{-1/2} exp(-x/2); overflows to inf for very negative x, which is fine
    try:
        return _INV_SQRT_PI * math.exp(-0.5 * x)
    except OverflowError:
        return math.inf


def gumbel_cdf(x):
    return math.exp(-_tail_mass(x))


def gumbel_sf(x):
    """``1 - gumbel_cdf(x)`` without cancellation in the upper tail."""
    return -math.expm1(-_tail_mass(x))


def gumbel_quantile(alpha):
    """Upper ``alpha`` point of the Gumbel null, so ``gumbel_cdf(q) == 1 - alpha``."""
    _check_alpha(alpha)
    return -_LOG_PI - 2.0 * math.log(-math.log1p(-alpha))


def conservative_alpha(alpha):
    """Level ``1 - exp(-alpha)``; testing at it bounds the size by ``alpha`` for
    arbitrary within-region correlation."""
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    return -math.expm1(-alpha)


def fwer_threshold(p, alpha):
    """Threshold applied to every pair so the family-wise error rate is at most alpha."""
    if int(p) != p or p < 2:
        raise DomainError(f"need at least two regions, got p={p}")
    pairs = p * (p - 1) // 2
    return 2.0 * math.log(pairs) + gumbel_quantile(alpha)


def normal_cdf(z):
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def normal_two_sided_pvalue(z):
    return math.erfc(abs(z) / math.sqrt(2.0))


def normal_quantile(prob):
    if not 0.0 < prob < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {prob}")
    return NormalDist().inv_cdf(prob)
