"""Monte Carlo drivers for empirical size, power and network recovery.

Every replicate is a pure function of ``(spec, replicate index)`` and
returns small counts, so results are identical for any worker count.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError
from .multiplicity import identify_network, network_counts, summarize_counts
from .pairtests import normalize_method, pairwise_scan, test1, test2, test3
from .simgen import (
    ErdosRenyiSpec,
    SignalLaw,
    assemble_joint_cov,
    erdos_renyi,
    make_region_cov,
    make_rng,
    sample_mvn,
    split_panels,
)

KINDS = ("size", "power", "network")
DEFAULT_REPLICATES = 1000


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    model_id: int = 1
    n: int = 150
    dims: tuple[int, ...] = (50, 50)
    replicates: int = DEFAULT_REPLICATES
    alpha: float = 0.05
    methods: tuple[str, ...] = ("test1",)
    seed: int = 0
    edge_prob: float = 0.01
    solver: str = "lasso"
    delta: float | None = None
    signal: SignalLaw | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.replicates < 1:
            raise DomainError("replicates must be at least 1")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if len(self.dims) < 2:
            raise DomainError("need at least two regions")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        methods = tuple(normalize_method(m) for m in self.methods)
        if self.kind == "network" and "test3" in methods:
            raise DomainError("network experiments support test1 and test2 only")
        object.__setattr__(self, "methods", methods)

    @classmethod
    def network_grid(cls, p: int, q: int, **kw) -> "ExperimentSpec":
        return cls(kind="network", dims=(q,) * p, **kw)

    def signal_law(self) -> SignalLaw:
        if self.signal is not None:
            return self.signal
        if self.kind == "network":
            return SignalLaw.network(self.n)
        return SignalLaw.two_region_power(self.dims[0], self.dims[1], self.n)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dims"] = list(self.dims)
        d["methods"] = list(self.methods)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        d["dims"] = tuple(d["dims"])
        d["methods"] = tuple(d["methods"])
        if d.get("signal") is not None:
            d["signal"] = SignalLaw(**d["signal"])
        return cls(**d)


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rates: dict[str, float] = field(default_factory=dict)
    se: dict[str, float] = field(default_factory=dict)
    network: dict[str, dict[str, float]] | None = None
    repairs: int = 0
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "rates": dict(self.rates),
            "se": dict(self.se),
            "network": None if self.network is None else {k: dict(v) for k, v in self.network.items()},
            "repairs": self.repairs,
            "seconds": self.seconds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentResult":
        return cls(
            spec=ExperimentSpec.from_dict(d["spec"]),
            rates=dict(d["rates"]),
            se=dict(d["se"]),
            network=d.get("network"),
            repairs=int(d.get("repairs", 0)),
            seconds=float(d.get("seconds", 0.0)),
        )


def binomial_se(rate: float, replicates: int) -> float:
    return math.sqrt(rate * (1.0 - rate) / replicates)


def _draw_data(spec: ExperimentSpec, r: int, edges):
    cov_rng = make_rng(spec.seed, r, "covariance")
    covs = [make_region_cov(spec.model_id, d, cov_rng) for d in spec.dims]
    joint = assemble_joint_cov(covs, edges, spec.signal_law(), cov_rng)
    x = sample_mvn(joint.matrix, spec.n, make_rng(spec.seed, r, "sample"))
    return split_panels(x, joint.offsets), joint.repaired


def _two_region_replicate(spec: ExperimentSpec, r: int):
    p = len(spec.dims)
    edges = None
    if spec.kind == "power":
        edges = ~np.eye(p, dtype=bool)
    panels, repaired = _draw_data(spec, r, edges)
    a, b = panels[0], panels[1]
    rejects = {}
    for m in spec.methods:
        if m == "test1":
            out = test1(a, b, spec.alpha)
        elif m == "test2":
            out = test2(a, b, spec.alpha, method=spec.solver, delta=spec.delta)
        else:
            out = test3(a, b, spec.alpha)
        rejects[m] = out.reject
    return rejects, repaired


def _network_replicate(spec: ExperimentSpec, r: int):
    p = len(spec.dims)
    truth = erdos_renyi(ErdosRenyiSpec(p, spec.edge_prob), make_rng(spec.seed, r, "graph"))
    panels, repaired = _draw_data(spec, r, truth)
    counts = {}
    for m in spec.methods:
        outcomes = pairwise_scan(panels, spec.alpha, m, solver=spec.solver, delta=spec.delta)
        est = identify_network(outcomes, p, spec.alpha)
        counts[m] = network_counts(est.adjacency, truth)
    return counts, repaired


def _run_chunk(spec: ExperimentSpec, reps):
    fn = _network_replicate if spec.kind == "network" else _two_region_replicate
    return [fn(spec, r) for r in reps]


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("NETBLOCK_THREADS", "1") or 1)
    return max(1, int(workers))


def _collect(spec: ExperimentSpec, workers: int | None):
    workers = resolve_workers(workers)
    reps = list(range(spec.replicates))
    if workers == 1:
        return _run_chunk(spec, reps)
    chunks = [reps[k::workers] for k in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, [spec] * workers, chunks))
    ordered = [None] * spec.replicates
    for chunk, part in zip(chunks, parts):
        for r, res in zip(chunk, part):
            ordered[r] = res
    return ordered


def _run_rates(spec: ExperimentSpec, workers) -> ExperimentResult:
    start = time.perf_counter()
    results = _collect(spec, workers)
    rates, se = {}, {}
    for m in spec.methods:
        hits = sum(rej[m] for rej, _ in results)
        rates[m] = hits / spec.replicates
        se[m] = binomial_se(rates[m], spec.replicates)
    return ExperimentResult(
        spec=spec, rates=rates, se=se, repairs=sum(rep for _, rep in results),
        seconds=time.perf_counter() - start,
    )


def run_size(spec: ExperimentSpec, workers: int | None = None) -> ExperimentResult:
    """Rejection frequency with independent regions (no cross-covariance)."""
    if spec.kind != "size":
        raise DomainError("run_size needs an experiment of kind 'size'")
    return _run_rates(spec, workers)


def run_power(spec: ExperimentSpec, workers: int | None = None) -> ExperimentResult:
    """Rejection frequency when a sparse cross-covariance block is planted
    between the regions (redrawn every replicate)."""
    if spec.kind != "power":
        raise DomainError("run_power needs an experiment of kind 'power'")
    return _run_rates(spec, workers)


def run_network(spec: ExperimentSpec, workers: int | None = None) -> ExperimentResult:
    if spec.kind != "network":
        raise DomainError("run_network needs an experiment of kind 'network'")
    start = time.perf_counter()
    results = _collect(spec, workers)
    network, rates, se = {}, {}, {}
    for m in spec.methods:
        nettpr, fwer, fdr = summarize_counts(c[m] for c, _ in results)
        network[m] = {"nettpr": nettpr, "fwer": fwer, "fdr": fdr}
        rates[m] = nettpr
        se[m] = binomial_se(nettpr, spec.replicates)
    return ExperimentResult(
        spec=spec, rates=rates, se=se, network=network,
        repairs=sum(rep for _, rep in results), seconds=time.perf_counter() - start,
    )


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> ExperimentResult:
    return {"size": run_size, "power": run_power, "network": run_network}[spec.kind](spec, workers)
