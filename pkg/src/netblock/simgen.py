"""Covariance models, cross-region signals and Gaussian sampling for simulations.

All randomness flows through :func:`make_rng`, which derives an
independent Philox stream from ``(seed, *tags)``. Replicate ``r`` of an
experiment therefore draws the same numbers no matter which worker runs it.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NotPositiveDefiniteError
from .linalg_stats import cholesky

MODEL_IDS = (1, 2, 3, 4, 5)
BLOCK = 10
REPAIR_FLOOR = 1e-8
REPAIR_MARGIN = 0.01
SHIFT_MARGIN = 0.05


def _tag(t) -> int:
    if isinstance(t, (int, np.integer)):
        if t < 0:
            raise DomainError("stream tags must be non-negative")
        return int(t)
    return zlib.crc32(str(t).encode())


def make_rng(seed: int, *tags) -> np.random.Generator:
    """Counter-based generator for the stream named by ``(seed, *tags)``."""
    ss = np.random.SeedSequence([_tag(seed), *(_tag(t) for t in tags)])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SignalLaw:
    """Law of the cross-region covariance entries.

    Each entry is nonzero with probability ``bernoulli_rate`` (or
    ``expected_count / (q_s * q_t)`` when ``expected_count`` is set), and a
    nonzero entry is drawn from
    ``N(mean_scale * sqrt(log(q_s q_t) / n), noise_variance)``.
    """

    bernoulli_rate: float | None = None
    mean_scale: float = 4.0
    noise_variance: float = 0.5
    n: int = 150
    expected_count: float | None = None

    def __post_init__(self):
        if self.bernoulli_rate is None and self.expected_count is None:
            raise DomainError("give either bernoulli_rate or expected_count")
        if self.bernoulli_rate is not None and not 0 <= self.bernoulli_rate <= 1:
            raise DomainError(f"bernoulli_rate must lie in [0, 1], got {self.bernoulli_rate}")
        if not self.noise_variance > 0:
            raise DomainError("noise_variance must be positive")
        if self.n < 1:
            raise DomainError("n must be positive")

    def rate(self, q_s: int, q_t: int) -> float:
        if self.expected_count is not None:
            return min(1.0, self.expected_count / (q_s * q_t))
        return self.bernoulli_rate

    @classmethod
    def two_region_power(cls, q1: int, q2: int, n: int) -> "SignalLaw":
        return cls(bernoulli_rate=5.0 / (q1 * q2), mean_scale=4.0, noise_variance=0.5, n=n)

    @classmethod
    def network(cls, n: int) -> "SignalLaw":
        return cls(expected_count=10.0, mean_scale=4.0, noise_variance=1.0, n=n)


@dataclass(frozen=True)
class CovarianceModelSpec:
    model_id: int
    dims: tuple[int, ...]
    seed: int = 0
    signal: SignalLaw | None = None

    def __post_init__(self):
        if self.model_id not in MODEL_IDS:
            raise DomainError(f"model_id must be one of {MODEL_IDS}, got {self.model_id}")
        if not self.dims or min(self.dims) < 1:
            raise DomainError("every region needs at least one component")


@dataclass(frozen=True)
class ErdosRenyiSpec:
    p: int
    edge_prob: float
    seed: int = 0

    def __post_init__(self):
        if self.p < 2:
            raise DomainError("need at least two regions")
        if not 0 <= self.edge_prob <= 1:
            raise DomainError(f"edge_prob must lie in [0, 1], got {self.edge_prob}")


def make_lambda(d: int, rng) -> np.ndarray:
    return np.diag(rng.uniform(0.5, 2.5, size=d))


def make_A(d: int, rng) -> np.ndarray:
    """Unit diagonal with 0.5 * Bernoulli(0.5) entries inside consecutive
    10-blocks; a trailing block shorter than 10 is filled the same way.

    Draws ``k(k-1)/2`` uniforms per block, consumed over the block's upper
    triangle in row-major order.
    """
    a = np.eye(d)
    for start in range(0, d, BLOCK):
        k = min(BLOCK, d - start)
        if k < 2:
            continue
        iu, ju = np.triu_indices(k, 1)
        vals = 0.5 * (rng.random(iu.size) < 0.5)
        a[start + iu, start + ju] = vals
        a[start + ju, start + iu] = vals
    return a


def make_B(d: int) -> np.ndarray:
    """Tridiagonal: 1 on the diagonal and 0.5 on the first off-diagonals."""
    b = np.eye(d)
    idx = np.arange(d - 1)
    b[idx, idx + 1] = 0.5
    b[idx + 1, idx] = 0.5
    return b


def _shifted(m, scale_diag):
    m = 0.5 * (m + m.T)
    shift = abs(np.linalg.eigvalsh(m)[0]) + SHIFT_MARGIN
    core = (m + shift * np.eye(m.shape[0])) / (1.0 + shift)
    root = np.sqrt(scale_diag)
    return core * np.outer(root, root)


def make_region_cov(model_id: int, d: int, rng) -> np.ndarray:
    """Within-region covariance for simulation models 1-5.

    1: diagonal ``Lambda``; 2/4: shifted ``A`` / ``B``; 3/5: shifted inverses
    of ``A`` / ``B``. The shift is ``|lambda_min(M)| + 0.05`` and the result
    is rescaled by ``Lambda^{1/2}`` on both sides. ``Lambda`` is drawn before
    ``A``.
    """
    if model_id not in MODEL_IDS:
        raise DomainError(f"model_id must be one of {MODEL_IDS}, got {model_id}")
    lam = np.diag(make_lambda(d, rng))
    if model_id == 1:
        out = np.diag(lam)
    else:
        if model_id in (2, 3):
            m = make_A(d, rng)
            if model_id == 3:
                # redraw the rare A that is numerically singular
                while np.linalg.cond(m) > 1e10:
                    m = make_A(d, rng)
                m = np.linalg.inv(m)
        else:
            m = make_B(d)
            if model_id == 5:
                m = np.linalg.inv(m)
        out = _shifted(m, lam)
    if np.linalg.eigvalsh(out)[0] <= 0:
        raise NotPositiveDefiniteError(0)
    return out


def make_cross_block(q_s: int, q_t: int, law: SignalLaw, rng) -> np.ndarray:
    """Sparse random cross-covariance block of shape ``(q_s, q_t)``."""
    rate = law.rate(q_s, q_t)
    mean = law.mean_scale * math.sqrt(math.log(q_s * q_t) / law.n)
    mask = rng.random((q_s, q_t)) < rate
    vals = rng.normal(mean, math.sqrt(law.noise_variance), size=(q_s, q_t))
    return np.where(mask, vals, 0.0)


@dataclass
class JointCovariance:
    matrix: np.ndarray
    offsets: tuple[int, ...]
    min_eig_before: float
    repaired: bool
    ridge: float = 0.0


def assemble_joint_cov(region_covs, edges=None, law: SignalLaw | None = None, rng=None) -> JointCovariance:
    """Block covariance with region blocks on the diagonal and random cross
    blocks wherever ``edges`` is true.

    If the smallest eigenvalue is at most 1e-8 a ridge of
    ``|lambda_min| + 0.01`` is added to the diagonal and recorded.
    """
    dims = [c.shape[0] for c in region_covs]
    offsets = tuple(np.concatenate([[0], np.cumsum(dims)]).tolist())
    total = offsets[-1]
    sigma = np.zeros((total, total))
    for k, c in enumerate(region_covs):
        sl = slice(offsets[k], offsets[k + 1])
        sigma[sl, sl] = c
    if edges is not None:
        edges = np.asarray(edges, dtype=bool)
        if not np.array_equal(edges, edges.T):
            raise DomainError("edge matrix must be symmetric")
        p = len(dims)
        for s in range(p):
            for t in range(s + 1, p):
                if edges[s, t]:
                    if law is None or rng is None:
                        raise DomainError("edges need a signal law and a generator")
                    block = make_cross_block(dims[s], dims[t], law, rng)
                    sigma[offsets[s]:offsets[s + 1], offsets[t]:offsets[t + 1]] = block
                    sigma[offsets[t]:offsets[t + 1], offsets[s]:offsets[s + 1]] = block.T
    lo = float(np.linalg.eigvalsh(sigma)[0])
    if lo <= REPAIR_FLOOR:
        ridge = abs(lo) + REPAIR_MARGIN
        sigma = sigma + ridge * np.eye(total)
        return JointCovariance(sigma, offsets, lo, True, ridge)
    return JointCovariance(sigma, offsets, lo, False, 0.0)


def sample_mvn(cov, n: int, rng) -> np.ndarray:
    """``n`` rows drawn i.i.d. from ``N(0, cov)``."""
    L = cholesky(cov)
    z = rng.standard_normal((n, L.shape[0]))
    return z @ L.T


def erdos_renyi(spec: ErdosRenyiSpec, rng=None) -> np.ndarray:
    if rng is None:
        rng = make_rng(spec.seed, "erdos-renyi")
    iu, ju = np.triu_indices(spec.p, 1)
    hit = rng.random(iu.size) < spec.edge_prob
    adj = np.zeros((spec.p, spec.p), dtype=bool)
    adj[iu[hit], ju[hit]] = True
    adj[ju[hit], iu[hit]] = True
    return adj


def split_panels(x: np.ndarray, offsets) -> list[np.ndarray]:
    return [x[:, offsets[k]:offsets[k + 1]] for k in range(len(offsets) - 1)]
