"""Simultaneous testing over all region pairs and network-level summaries."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, DomainError, EmptyInputError, IncompletePairSetError
from .null_dist import fwer_threshold
from .pairtests import TestOutcome


@dataclass(eq=False)
class NetworkEstimate:
    p: int
    adjacency: np.ndarray
    outcomes: list[TestOutcome] = field(default_factory=list)
    alpha: float = 0.05
    threshold: float = float("nan")

    def edges(self) -> list[tuple[int, int]]:
        s, t = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(s.tolist(), t.tolist()))

    def __eq__(self, other):
        if not isinstance(other, NetworkEstimate):
            return NotImplemented
        return (
            self.p == other.p
            and np.array_equal(self.adjacency, other.adjacency)
            and self.outcomes == other.outcomes
            and self.alpha == other.alpha
            and (self.threshold == other.threshold
                 or (np.isnan(self.threshold) and np.isnan(other.threshold)))
        )

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "alpha": self.alpha,
            "threshold": self.threshold,
            "edges": [list(e) for e in self.edges()],
            "outcomes": [o.to_dict() for o in self.outcomes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkEstimate":
        p = int(d["p"])
        adj = np.zeros((p, p), dtype=bool)
        for s, t in d["edges"]:
            adj[s, t] = adj[t, s] = True
        return cls(
            p=p, adjacency=adj,
            outcomes=[TestOutcome.from_dict(o) for o in d["outcomes"]],
            alpha=float(d["alpha"]), threshold=float(d["threshold"]),
        )


def identify_network(outcomes, p: int, alpha: float = 0.05) -> NetworkEstimate:
    """Declare an edge for every pair whose statistic clears the FWER threshold
    ``2 log(p(p-1)/2) + q_alpha``."""
    threshold = fwer_threshold(p, alpha)
    expected = {(s, t) for s in range(p) for t in range(s + 1, p)}
    seen = set()
    adj = np.zeros((p, p), dtype=bool)
    for o in outcomes:
        if o.method == "test3":
            raise DomainError("the FWER rule applies to the max-correlation tests only")
        key = tuple(o.pair)
        if key not in expected:
            raise IncompletePairSetError(f"pair {key} is not a valid s < t pair for p={p}")
        if key in seen:
            raise IncompletePairSetError(f"pair {key} appears more than once")
        seen.add(key)
        if o.statistic > threshold:
            s, t = key
            adj[s, t] = adj[t, s] = True
    missing = expected - seen
    if missing:
        raise IncompletePairSetError(f"{len(missing)} pairs missing, e.g. {min(missing)}")
    ordered = sorted(outcomes, key=lambda o: tuple(o.pair))
    return NetworkEstimate(p=p, adjacency=adj, outcomes=ordered, alpha=alpha, threshold=threshold)


def _as_adjacency(a) -> np.ndarray:
    if isinstance(a, NetworkEstimate):
        a = a.adjacency
    return np.asarray(a, dtype=bool)


def network_counts(estimate, truth) -> tuple[bool, bool, int, int]:
    """``(exact match, any false edge, false edges, edges)`` for one replicate."""
    est = np.triu(_as_adjacency(estimate), 1)
    tru = np.triu(_as_adjacency(truth), 1)
    if est.shape != tru.shape:
        raise DimensionMismatchError(f"estimate is {est.shape}, truth is {tru.shape}")
    false_edges = int(np.sum(est & ~tru))
    return bool(np.array_equal(est, tru)), false_edges > 0, false_edges, int(est.sum())


def summarize_counts(counts) -> tuple[float, float, float]:
    counts = list(counts)
    if not counts:
        raise EmptyInputError("no replicates to score")
    exact = sum(c[0] for c in counts)
    any_false = sum(c[1] for c in counts)
    false_edges = sum(c[2] for c in counts)
    edges = sum(c[3] for c in counts)
    r = len(counts)
    return exact / r, any_false / r, (false_edges / edges if edges else 0.0)


def network_metrics(estimates, truth) -> tuple[float, float, float]:
    """Exact-recovery rate, family-wise error rate and false discovery rate.

    ``truth`` is either one adjacency shared by every replicate or a
    sequence of adjacencies aligned with ``estimates``. The false discovery
    rate pools false edges over all replicates and is 0 when nothing was
    declared.
    """
    estimates = list(estimates)
    if not estimates:
        raise EmptyInputError("no estimates given")
    if isinstance(truth, NetworkEstimate) or np.ndim(_as_adjacency(truth[0])) < 2:
        truths = [truth] * len(estimates)
    else:
        truths = list(truth)
        if len(truths) != len(estimates):
            raise DimensionMismatchError("need one truth per estimate")
    ps = {_as_adjacency(e).shape for e in estimates}
    if len(ps) > 1:
        raise DimensionMismatchError("estimates disagree on the number of regions")
    return summarize_counts(network_counts(e, t) for e, t in zip(estimates, truths))


def group_consensus_network(subject_networks, quorum: float = 0.85) -> np.ndarray:
    """Keep an edge when it appears in at least ``quorum`` of the subject networks."""
    nets = [_as_adjacency(x) for x in subject_networks]
    if not nets:
        raise EmptyInputError("no subject networks given")
    if not 0 < quorum <= 1:
        raise DomainError(f"quorum must lie in (0, 1], got {quorum}")
    if len({x.shape for x in nets}) > 1:
        raise DimensionMismatchError("subject networks disagree on the number of regions")
    counts = np.sum(nets, axis=0)
    # count >= quorum * N, with slack for the float product
    out = counts >= quorum * len(nets) - 1e-9
    np.fill_diagonal(out, False)
    return out
