"""Exact k-NN radii and marginal in-radius counts in the l2 and l_inf norms.

The production index is a kd-tree (scipy's cKDTree, exact backtracking in
both norms); an O(N^2 d) brute-force path is kept permanently as the test
oracle and as the fallback for d > 20.  Count queries are inclusive of the
boundary (distance <= r); estimators that need Kraskov's strict-< counts
pass ``boundary="strict"``, implemented by shrinking each radius one ulp.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .dataset import Dataset, DuplicateSampleError, duplicate_row_groups

BRUTE_FORCE_DIM = 21  # kd-tree degrades past ~20 dims; brute force from here


class Norm(enum.Enum):
    """Distance norm: only l2 and l_inf are constructible."""

    L2 = 2.0
    LINF = math.inf

    @classmethod
    def coerce(cls, value) -> "Norm":
        if isinstance(value, Norm):
            return value
        if value in (2, 2.0, "2", "l2", "L2"):
            return cls.L2
        if value in (math.inf, "inf", "linf", "LINF", "max", "chebyshev"):
            return cls.LINF
        raise ValueError(f"norm must be 2 or inf, got {value!r}")

    @property
    def p(self) -> float:
        return self.value

    @property
    def label(self) -> str:
        return "l2" if self is Norm.L2 else "linf"


INCLUSIVE = "inclusive"  # count distance <= r (the definitional form)
STRICT = "strict"        # count distance <  r (Kraskov's original software)


def _shrink(radii: np.ndarray, boundary: str) -> np.ndarray:
    if boundary == INCLUSIVE:
        return radii
    if boundary == STRICT:
        return np.nextafter(radii, 0.0)
    raise ValueError(f"boundary must be 'inclusive' or 'strict', got {boundary!r}")


def pairwise_distances(a: np.ndarray, b: np.ndarray, norm: Norm) -> np.ndarray:
    """All |a_i - b_j| distances, accumulated column-by-column.

    Sequential left-to-right accumulation matches the kd-tree's internal
    distance evaluation bit for bit on the supported dimension range.
    """
    n, m, d = a.shape[0], b.shape[0], a.shape[1]
    if norm is Norm.LINF:
        out = np.zeros((n, m))
        for c in range(d):
            np.maximum(out, np.abs(a[:, c, None] - b[None, :, c]), out=out)
        return out
    acc = np.zeros((n, m))
    for c in range(d):
        diff = a[:, c, None] - b[None, :, c]
        acc += diff * diff
    return np.sqrt(acc)


@dataclass(frozen=True)
class NeighborStats:
    """Per-sample joint k-NN radius and per-group marginal in-radius counts."""

    rho: np.ndarray          # (N,) joint k-NN distances
    counts: np.ndarray       # (L, N) marginal counts, j != i, inclusive boundary
    k: int
    norm: Norm


class NeighborIndex:
    """Immutable exact spatial index over the rows of a point array."""

    def __init__(self, points: np.ndarray, norm: Norm):
        points = np.ascontiguousarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] < 2:
            raise ValueError("index requires an (N>=2) x d array")
        self.points = points
        self.norm = norm
        self._brute = points.shape[1] >= BRUTE_FORCE_DIM
        self._tree = None if self._brute else cKDTree(points)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def kth_distances(self, k: int) -> np.ndarray:
        """k-NN distance of every row to the other rows."""
        if not 1 <= k <= self.n - 1:
            raise ValueError(f"k must be in [1, N-1] = [1, {self.n - 1}], got {k}")
        if self._brute:
            dist = pairwise_distances(self.points, self.points, self.norm)
            np.fill_diagonal(dist, np.inf)
            return np.sort(dist, axis=1)[:, k - 1]
        # self is returned at distance zero, hence k+1 neighbors
        return self._tree.query(self.points, k=k + 1, p=self.norm.p)[0][:, -1]

    def kth_distance_single(self, i: int, k: int) -> float:
        """k-NN distance of one row."""
        if not 0 <= i < self.n:
            raise ValueError(f"sample id {i} out of range")
        if not 1 <= k <= self.n - 1:
            raise ValueError(f"k must be in [1, N-1] = [1, {self.n - 1}], got {k}")
        if self._brute:
            dist = pairwise_distances(self.points[i: i + 1], self.points, self.norm)[0]
            dist[i] = np.inf
            return float(np.partition(dist, k - 1)[k - 1])
        dist = self._tree.query(self.points[i: i + 1], k=k + 1, p=self.norm.p)[0]
        return float(dist[0, -1])

    def count_within(self, radii: np.ndarray, boundary: str = INCLUSIVE) -> np.ndarray:
        """Number of rows j != i with distance(i, j) <= (or <) radii[i]."""
        radii = _shrink(np.asarray(radii, dtype=np.float64), boundary)
        if self._brute:
            dist = pairwise_distances(self.points, self.points, self.norm)
            np.fill_diagonal(dist, np.inf)
            return (dist <= radii[:, None]).sum(axis=1).astype(np.int64)
        hits = self._tree.query_ball_point(self.points, radii, p=self.norm.p, return_length=True)
        return np.asarray(hits, dtype=np.int64) - 1  # drop self (distance 0)


def build_index(ds: Dataset, norm) -> NeighborIndex:
    """Exact joint-space index over the Dataset rows."""
    return NeighborIndex(ds.values, Norm.coerce(norm))


def kth_nn_distance(index: NeighborIndex, i: int, k: int) -> float:
    """Distance from row i to its k-th nearest other row.

    Distance ties are broken by sample index for neighbor identity, but the
    radius is the tied distance itself, so estimates never depend on the
    tie-break.
    """
    return index.kth_distance_single(i, k)


def count_within(ds: Dataset, group: int, i: int, r: float, norm) -> int:
    """Count of j != i whose group-projection lies within r of sample i's.

    The boundary is inclusive (distance <= r), matching the definitional
    indicator.
    """
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    norm = Norm.coerce(norm)
    proj = ds.group_values(group)
    dist = pairwise_distances(proj[i: i + 1], proj, norm)[0]
    dist[i] = np.inf
    return int((dist <= r).sum())


def raise_on_zero_radius(rho: np.ndarray, values: np.ndarray, space: str) -> None:
    if rho.min() > 0.0:
        return
    groups = duplicate_row_groups(values)
    raise DuplicateSampleError(space, groups or [[int(np.argmin(rho))]])


def marginal_counts(ds: Dataset, rho: np.ndarray, norm: Norm,
                    boundary: str = INCLUSIVE) -> np.ndarray:
    """(L, N) matrix of per-group counts at the shared radii ``rho``."""
    counts = np.empty((ds.n_groups, ds.n), dtype=np.int64)
    for g in range(ds.n_groups):
        counts[g] = NeighborIndex(ds.group_values(g), norm).count_within(rho, boundary)
    return counts


def neighbor_stats(ds: Dataset, k: int, norm) -> NeighborStats:
    """Joint k-NN radii plus inclusive marginal counts for every sample.

    Raises DuplicateSampleError if any joint radius is zero.
    """
    norm = Norm.coerce(norm)
    index = build_index(ds, norm)
    rho = index.kth_distances(k)
    raise_on_zero_radius(rho, ds.values, "joint")
    return NeighborStats(rho=rho, counts=marginal_counts(ds, rho, norm), k=k, norm=norm)


def brute_force_stats(ds: Dataset, k: int, norm) -> NeighborStats:
    """O(N^2 d) oracle with the same contract as neighbor_stats."""
    norm = Norm.coerce(norm)
    if not 1 <= k <= ds.n - 1:
        raise ValueError(f"k must be in [1, N-1] = [1, {ds.n - 1}], got {k}")
    dist = pairwise_distances(ds.values, ds.values, norm)
    np.fill_diagonal(dist, np.inf)
    rho = np.sort(dist, axis=1)[:, k - 1]
    raise_on_zero_radius(rho, ds.values, "joint")
    counts = np.empty((ds.n_groups, ds.n), dtype=np.int64)
    for g in range(ds.n_groups):
        proj = ds.group_values(g)
        mdist = pairwise_distances(proj, proj, norm)
        np.fill_diagonal(mdist, np.inf)
        counts[g] = (mdist <= rho[:, None]).sum(axis=1)
    return NeighborStats(rho=rho, counts=counts, k=k, norm=norm)
