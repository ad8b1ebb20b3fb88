import math

import numpy as np
import pytest

from netblock.bench import (
    ExperimentResult,
    ExperimentSpec,
    binomial_se,
    resolve_workers,
    run_experiment,
    run_network,
    run_power,
    run_size,
)
from netblock.errors import DomainError
from netblock.simgen import SignalLaw


def small(kind, **kw):
    base = dict(kind=kind, n=60, dims=(8, 8), replicates=20, methods=("test1", "test2", "test3"))
    base.update(kw)
    return ExperimentSpec(**base)


def test_binomial_se_formula():
    assert binomial_se(0.05, 1000) == math.sqrt(0.05 * 0.95 / 1000)
    assert binomial_se(0.0, 10) == 0.0


def test_alpha_near_one_always_rejects():
    res = run_size(small("size", alpha=1 - 1e-12, methods=("test1", "test2")))
    assert res.rates == {"test1": 1.0, "test2": 1.0}


def test_single_replicate():
    res = run_size(small("size", replicates=1))
    for m in res.spec.methods:
        assert res.rates[m] in (0.0, 1.0)
        assert res.se[m] == 0.0


def test_zero_signal_power_equals_size():
    null_law = SignalLaw(bernoulli_rate=0.0, mean_scale=0.0)
    power = run_power(small("power", signal=null_law, replicates=30, seed=3))
    size = run_size(small("size", replicates=30, seed=3))
    assert power.rates == size.rates


def test_power_at_least_size():
    spec = dict(n=150, dims=(20, 20), replicates=60, seed=5, methods=("test1", "test2"))
    size = run_size(ExperimentSpec(kind="size", **spec))
    power = run_power(ExperimentSpec(kind="power", **spec))
    for m in ("test1", "test2"):
        assert power.rates[m] >= size.rates[m]


def test_worker_count_does_not_change_results():
    spec = small("power", model_id=4, replicates=12, seed=9)
    one = run_power(spec, workers=1)
    two = run_power(spec, workers=2)
    assert one.rates == two.rates and one.repairs == two.repairs


def test_network_strong_signal_two_regions():
    # a few cross entries near 0.5 at large n: separable without a PD repair
    law = SignalLaw(expected_count=4.0, mean_scale=11.0, noise_variance=1e-6, n=2000)
    spec = ExperimentSpec.network_grid(2, 8, n=2000, replicates=10, edge_prob=1.0,
                                       signal=law, methods=("test1",))
    res = run_network(spec)
    assert res.repairs == 0
    assert res.network["test1"]["nettpr"] == 1.0


def test_empty_truth_identity():
    spec = ExperimentSpec.network_grid(5, 6, n=80, replicates=25, edge_prob=0.0,
                                       methods=("test1", "test2"), alpha=0.5)
    res = run_network(spec)
    for m in spec.methods:
        net = res.network[m]
        assert net["nettpr"] == pytest.approx(1 - net["fwer"])


def test_spec_validation():
    with pytest.raises(DomainError):
        ExperimentSpec(kind="bogus")
    with pytest.raises(DomainError):
        ExperimentSpec(kind="network", methods=("test3",))
    with pytest.raises(DomainError):
        ExperimentSpec(kind="size", alpha=1.0)
    with pytest.raises(DomainError):
        ExperimentSpec(kind="size", dims=(5,))
    with pytest.raises(DomainError):
        run_power(ExperimentSpec(kind="size"))


def test_default_replicates():
    assert ExperimentSpec(kind="size").replicates == 1000


def test_resolve_workers(monkeypatch):
    monkeypatch.setenv("NETBLOCK_THREADS", "3")
    assert resolve_workers(None) == 3
    assert resolve_workers(0) == 1


def test_result_round_trip():
    res = run_experiment(small("size", replicates=3, signal=SignalLaw(bernoulli_rate=0.1)))
    back = ExperimentResult.from_dict(res.to_dict())
    assert back.spec == res.spec and back.rates == res.rates
