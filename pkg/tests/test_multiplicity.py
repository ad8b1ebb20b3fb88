import math

import numpy as np
import pytest

from netblock.errors import DimensionMismatchError, DomainError, EmptyInputError, IncompletePairSetError
from netblock.multiplicity import (
    NetworkEstimate,
    group_consensus_network,
    identify_network,
    network_metrics,
)
from netblock.null_dist import fwer_threshold, gumbel_quantile
from netblock.pairtests import TestOutcome, region_pairs


def fake_outcomes(p, stats=None, default=0.0, method="test1"):
    stats = stats or {}
    return [
        TestOutcome(pair=pr, statistic=stats.get(pr, default), p_value=0.5, threshold=0.0,
                    reject=False, method=method, d_st=4)
        for pr in region_pairs(p)
    ]


def adj_from(p, edges):
    a = np.zeros((p, p), dtype=bool)
    for s, t in edges:
        a[s, t] = a[t, s] = True
    return a


class TestIdentify:
    def test_single_edge_at_p90(self):
        est = identify_network(fake_outcomes(90, {(3, 41): 22.0}), 90, 0.05)
        assert est.threshold == pytest.approx(21.3862583312398481, abs=1e-12)
        assert est.edges() == [(3, 41)]

    def test_minus_infinity_gives_empty(self):
        est = identify_network(fake_outcomes(6, default=-math.inf), 6, 0.05)
        assert not est.adjacency.any()

    def test_p2_reduces_to_marginal(self):
        assert fwer_threshold(2, 0.05) == pytest.approx(gumbel_quantile(0.05), abs=1e-15)

    def test_invariants(self, rng):
        p = 7
        stats = {pr: float(rng.normal(20, 3)) for pr in region_pairs(p)}
        est = identify_network(fake_outcomes(p, stats), p)
        assert np.array_equal(est.adjacency, est.adjacency.T)
        assert not np.diag(est.adjacency).any()
        for o in est.outcomes:
            s, t = o.pair
            assert est.adjacency[s, t] == (o.statistic > est.threshold)

    def test_missing_duplicate_invalid(self):
        outs = fake_outcomes(4)
        with pytest.raises(IncompletePairSetError):
            identify_network(outs[:-1], 4)
        with pytest.raises(IncompletePairSetError):
            identify_network(outs + outs[:1], 4)
        bad = outs[:-1] + [TestOutcome((3, 2), 0.0, 0.5, 0.0, False, "test1", 4)]
        with pytest.raises(IncompletePairSetError):
            identify_network(bad, 4)

    def test_fisher_outcomes_rejected(self):
        with pytest.raises(DomainError):
            identify_network(fake_outcomes(3, method="test3"), 3)

    def test_more_regions_never_add_edges(self, rng):
        p = 12
        stats = {pr: float(rng.normal(18, 3)) for pr in region_pairs(p)}
        small = identify_network(fake_outcomes(p, stats), p).adjacency
        stats_big = dict(stats)
        stats_big.update({pr: 0.0 for pr in region_pairs(p + 8) if pr not in stats})
        big = identify_network(fake_outcomes(p + 8, stats_big), p + 8).adjacency
        assert not np.any(big[:p, :p] & ~small)

    def test_round_trip(self, rng):
        est = identify_network(fake_outcomes(4, {(0, 2): 50.0}), 4)
        assert NetworkEstimate.from_dict(est.to_dict()) == est


class TestMetrics:
    def test_perfect(self):
        truth = adj_from(4, [(0, 1), (2, 3)])
        assert network_metrics([truth] * 5, truth) == (1.0, 0.0, 0.0)

    def test_empty_truth_all_wrong(self):
        truth = adj_from(3, [])
        ests = [adj_from(3, [(0, 1)]), adj_from(3, [(1, 2), (0, 2)])]
        assert network_metrics(ests, truth) == (0.0, 1.0, 1.0)

    def test_hand_computed(self):
        truth = adj_from(3, [(0, 1)])
        ests = [adj_from(3, [(0, 1)]), adj_from(3, [(0, 1), (1, 2)]), adj_from(3, [])]
        # exact: replicate 1 only; false edge: replicate 2 only; 1 false of 3 declared
        nettpr, fwer, fdr = network_metrics(ests, truth)
        assert (nettpr, fwer, fdr) == pytest.approx((1 / 3, 1 / 3, 1 / 3))

    def test_no_discoveries_fdr_zero(self):
        truth = adj_from(3, [(0, 2)])
        assert network_metrics([adj_from(3, [])] * 2, truth) == (0.0, 0.0, 0.0)

    def test_per_replicate_truth(self):
        truths = [adj_from(3, [(0, 1)]), adj_from(3, [(1, 2)])]
        ests = [adj_from(3, [(0, 1)]), adj_from(3, [(0, 1)])]
        assert network_metrics(ests, truths) == (0.5, 0.5, 0.5)

    def test_errors(self):
        with pytest.raises(EmptyInputError):
            network_metrics([], adj_from(3, []))
        with pytest.raises(DimensionMismatchError):
            network_metrics([adj_from(4, [])], adj_from(3, []))


class TestConsensus:
    def test_single_subject(self):
        a = adj_from(5, [(0, 4), (1, 2)])
        assert np.array_equal(group_consensus_network([a]), a)

    def test_boundary_inclusive(self):
        nets = [adj_from(3, [(0, 1)])] * 17 + [adj_from(3, [])] * 3
        out = group_consensus_network(nets, 0.85)
        assert out[0, 1] and out[1, 0]
        nets = [adj_from(3, [(0, 1)])] * 16 + [adj_from(3, [])] * 4
        assert not group_consensus_network(nets, 0.85).any()

    def test_counting_oracle(self, rng):
        nets = []
        for _ in range(10):
            a = np.triu(rng.random((6, 6)) < 0.6, 1)
            nets.append(a | a.T)
        for quorum in (0.1, 0.5, 0.7, 1.0):
            out = group_consensus_network(nets, quorum)
            for s in range(6):
                for t in range(6):
                    count = sum(int(n[s, t]) for n in nets)
                    assert out[s, t] == (s != t and count >= quorum * 10 - 1e-9)

    def test_errors(self):
        with pytest.raises(EmptyInputError):
            group_consensus_network([])
        with pytest.raises(DomainError):
            group_consensus_network([adj_from(3, [])], 0.0)
