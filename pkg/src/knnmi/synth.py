"""Seeded samplers with closed-form ground-truth entropies and MI values.

All randomness flows through Philox counter-based generators keyed by
(master_seed, *subkeys), so per-trial substreams are reproducible and
independent of execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .specfn import digamma, log_gamma


def make_rng(master_seed: int, *subkeys) -> np.random.Generator:
    """Philox generator for the substream (master_seed, *subkeys).

    Non-integer subkeys (e.g. labels) are hashed into the key material
    deterministically.
    """
    key = [int(master_seed) & 0xFFFFFFFFFFFFFFFF]
    for sub in subkeys:
        if isinstance(sub, (int, np.integer)):
            key.append(int(sub) & 0xFFFFFFFFFFFFFFFF)
        else:
            acc = 2166136261
            for ch in str(sub).encode():
                acc = ((acc ^ ch) * 16777619) & 0xFFFFFFFF
            key.append(acc)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(tuple(key))))


@dataclass(frozen=True)
class UniformCube:
    """i.i.d. Uniform[0, 1] in d dimensions; differential entropy 0."""

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")


@dataclass(frozen=True)
class MultivariateNormal:
    mean: tuple[float, ...]
    cov: tuple[tuple[float, ...], ...]
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match mean size {mean.size}")
        if not np.allclose(cov, cov.T):
            raise ValueError("covariance must be symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance must be positive definite") from exc
        object.__setattr__(self, "mean", tuple(float(v) for v in mean))
        object.__setattr__(self, "cov", tuple(tuple(float(v) for v in row) for row in cov))
        object.__setattr__(self, "_chol", chol)

    @property
    def d(self) -> int:
        return len(self.mean)


@dataclass(frozen=True)
class BetaIID:
    """d independent Beta(alpha, beta) coordinates."""

    alpha: float
    beta: float
    d: int

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("beta parameters must be positive")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")


Distribution = UniformCube | MultivariateNormal | BetaIID


def distribution_from_config(cfg: dict) -> Distribution:
    kind = cfg["kind"]
    if kind == "uniform_cube":
        return UniformCube(d=int(cfg["d"]))
    if kind == "mvn":
        mean = cfg.get("mean")
        cov = cfg["cov"]
        if mean is None:
            mean = [0.0] * len(cov)
        return MultivariateNormal(mean=tuple(mean), cov=tuple(tuple(r) for r in cov))
    if kind == "beta_iid":
        return BetaIID(alpha=float(cfg["alpha"]), beta=float(cfg["beta"]), d=int(cfg["d"]))
    raise ValueError(f"unknown distribution kind {kind!r}")


def distribution_to_config(dist: Distribution) -> dict:
    if isinstance(dist, UniformCube):
        return {"kind": "uniform_cube", "d": dist.d}
    if isinstance(dist, MultivariateNormal):
        return {"kind": "mvn", "mean": list(dist.mean), "cov": [list(r) for r in dist.cov]}
    if isinstance(dist, BetaIID):
        return {"kind": "beta_iid", "alpha": dist.alpha, "beta": dist.beta, "d": dist.d}
    raise TypeError(f"not a distribution: {dist!r}")


def sample(dist: Distribution, n: int, seed, group_dims: Sequence[int] | None = None) -> Dataset:
    """Draw n rows; ``seed`` is an integer master seed or a Generator."""
    if n < 2:
        raise ValueError("need n >= 2")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(int(seed))
    if isinstance(dist, UniformCube):
        values = rng.random((n, dist.d))
    elif isinstance(dist, MultivariateNormal):
        z = rng.standard_normal((n, dist.d))
        values = np.asarray(dist.mean) + z @ dist._chol.T
    elif isinstance(dist, BetaIID):
        values = rng.beta(dist.alpha, dist.beta, size=(n, dist.d))
    else:
        raise TypeError(f"not a distribution: {dist!r}")
    dims = tuple(group_dims) if group_dims is not None else (values.shape[1],)
    return Dataset(values, dims)


def beta_entropy(alpha: float, beta: float) -> float:
    """Differential entropy of Beta(alpha, beta) in nats."""
    a, b = float(alpha), float(beta)
    log_b = log_gamma(a) + log_gamma(b) - log_gamma(a + b)
    return (log_b - (a - 1.0) * (digamma(a) - digamma(a + b))
            - (b - 1.0) * (digamma(b) - digamma(a + b)))


def true_entropy(dist: Distribution) -> float:
    """Closed-form differential entropy of the joint distribution, in nats."""
    if isinstance(dist, UniformCube):
        return 0.0
    if isinstance(dist, MultivariateNormal):
        cov = np.asarray(dist.cov)
        sign, logdet = np.linalg.slogdet(cov)
        return 0.5 * (dist.d * math.log(2.0 * math.pi * math.e) + logdet)
    if isinstance(dist, BetaIID):
        return dist.d * beta_entropy(dist.alpha, dist.beta)
    raise TypeError(f"not a distribution: {dist!r}")


def true_mi(dist: Distribution, group_dims: Sequence[int]) -> float:
    """Closed-form (multivariate) mutual information across the groups.

    Gaussians: sum of group entropies minus the joint, which reduces to
    (1/2)(sum_l log det Sigma_ll - log det Sigma).  Product distributions
    (uniform cube, i.i.d. Beta) have zero MI under any grouping.
    """
    dims = [int(g) for g in group_dims]
    if isinstance(dist, (UniformCube, BetaIID)):
        if sum(dims) != dist.d:
            raise ValueError("group dims do not sum to the distribution dimension")
        return 0.0
    if isinstance(dist, MultivariateNormal):
        cov = np.asarray(dist.cov)
        if sum(dims) != dist.d:
            raise ValueError("group dims do not sum to the distribution dimension")
        total = 0.0
        start = 0
        for g in dims:
            block = cov[start:start + g, start:start + g]
            total += 0.5 * np.linalg.slogdet(block)[1]
            start += g
        return float(total - 0.5 * np.linalg.slogdet(cov)[1])
    raise TypeError(f"no closed-form MI for {dist!r}")
