"""Testing for dependence between groups of variables, region by region."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DataError,
    DimensionMismatchError,
    DomainError,
    EmptyInputError,
    IncompletePairSetError,
    InfeasibleError,
    LayoutMismatchError,
    NetblockError,
    NoConvergenceError,
    NotPositiveDefiniteError,
    ParseError,
    ZeroVarianceError,
)
from .multiplicity import NetworkEstimate, identify_network, network_metrics  # noqa: E402
from .pairtests import TestOutcome, pairwise_scan, test1, test2, test3  # noqa: E402
