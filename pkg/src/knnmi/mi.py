"""Pairwise mutual information estimators and their local-term diagnostics.

Three families:

* 3KL: sum/difference of three independent fixed-k entropy estimates.
* KSG: one shared joint-space l_inf radius per sample; marginal counts enter
  through psi(n+1) and the log-radius terms cancel exactly.
* BI-KSG: the l2 analogue with log(n) in place of psi(n+1) and an explicit
  ball-volume correction.

Marginal-count boundary convention: the definitional indicator is inclusive
(distance <= rho), but the reference implementation this family descends
from counts strictly inside the radius, and the published bias tables are
only reproduced by the strict convention.  KSG-family estimators therefore
default to ``boundary="strict"``; pass ``boundary="inclusive"`` for the
literal definition.  The two differ only on exact-tie events, which have
probability zero in l2 but happen almost surely in l_inf (the k-th neighbor
sits on one marginal's boundary).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .entropy import local_entropy_terms, truncation_threshold
from .knn import INCLUSIVE, STRICT, NeighborIndex, Norm, raise_on_zero_radius
from .report import EstimateReport
from .specfn import digamma, digamma_int, log_ball_volume

KSG_FLAVOR = "ksg"      # l_inf metric, psi(count + 1)
BIKSG_FLAVOR = "biksg"  # l2 metric, log(count)


@dataclass(frozen=True)
class MiMethod:
    """Estimator selector used by the CLI and the experiment runner."""

    kind: str  # "3kl" | "ksg" | "biksg"
    truncate: bool = False
    delta: float = 0.5
    norm: Norm | None = None  # only 3kl accepts a choice

    def __post_init__(self):
        if self.kind not in ("3kl", "ksg", "biksg"):
            raise ValueError(f"unknown method kind {self.kind!r}")
        norm = self.norm
        if norm is not None:
            norm = Norm.coerce(norm)
        if self.kind == "ksg":
            if norm is Norm.L2:
                raise ValueError("ksg uses the l_inf norm; --norm l2 is invalid")
            norm = Norm.LINF
        elif self.kind == "biksg":
            if norm is Norm.LINF:
                raise ValueError("biksg uses the l2 norm; --norm linf is invalid")
            norm = Norm.L2
        else:
            norm = norm or Norm.LINF
        object.__setattr__(self, "norm", norm)
        if self.truncate and not self.delta > 0:
            raise ValueError("truncation requires delta > 0")


@dataclass
class LocalMiTerms:
    """Per-sample decomposition: iota = xi_x + xi_y - xi_z.

    b_* are local biases against caller-supplied true entropies and are None
    when no ground truth is given.
    """

    iota: np.ndarray
    xi_x: np.ndarray
    xi_y: np.ndarray
    xi_z: np.ndarray
    b_x: np.ndarray | None = None
    b_y: np.ndarray | None = None
    b_z: np.ndarray | None = None


@dataclass
class SharedRadiusStats:
    """Joint radii plus subset counts reused by estimators and diagnostics."""

    rho: np.ndarray
    subset_counts: dict[frozenset, np.ndarray]


def _require_two_groups(ds: Dataset, what: str) -> None:
    if ds.n_groups != 2:
        raise ValueError(f"{what} requires a two-group dataset, got {ds.n_groups} groups")


def shared_radius_terms(ds: Dataset, terms: Sequence[tuple[frozenset, Fraction]],
                        k: int, flavor: str, boundary: str = STRICT,
                        psi_offset: int = 1) -> tuple[float, np.ndarray, SharedRadiusStats]:
    """Constant and per-sample parts of a balanced shared-radius combination.

    Each term (S, a_S) contributes a_S times a local entropy estimate of the
    column subset S at the joint k-NN radius: the full set uses -psi(k), a
    proper subset uses -psi(n_S + psi_offset) (ksg flavor) or -log(n_S)
    (biksg flavor).  Balance makes every log-radius contribution cancel
    exactly, so radii never enter; log N survives with coefficient
    sum_S a_S and the l2 flavor keeps its ball-volume constant.  The
    estimate is const + mean(acc); truncated variants zero whole local
    terms, i.e. const * kept_fraction + mean(masked acc).
    """
    if flavor not in (KSG_FLAVOR, BIKSG_FLAVOR):
        raise ValueError(f"unknown flavor {flavor!r}")
    norm = Norm.LINF if flavor == KSG_FLAVOR else Norm.L2
    if flavor == BIKSG_FLAVOR:
        boundary = INCLUSIVE  # strict counts could hit log(0) on tied data
    full = frozenset(range(ds.n_groups))
    # log-radius cancellation: sum_S a_S * dim(S) must vanish identically
    rho_coeff = sum((a * ds.subset_dim(S) for S, a in terms), start=Fraction(0))
    if rho_coeff != 0:
        raise ValueError(f"log-radius terms do not cancel (coefficient {rho_coeff})")

    index = NeighborIndex(ds.values, norm)
    rho = index.kth_distances(k)
    raise_on_zero_radius(rho, ds.values, "joint")

    const = float(sum((a for _, a in terms), start=Fraction(0))) * math.log(ds.n)
    acc = np.zeros(ds.n)
    stats = SharedRadiusStats(rho=rho, subset_counts={})
    for S, a in sorted(terms, key=lambda t: sorted(t[0])):
        const += float(a) * log_ball_volume(ds.subset_dim(S), norm.p)
        if S == full:
            const += float(a) * (-digamma(k))
            continue
        counts = NeighborIndex(ds.subset_columns(S), norm).count_within(rho, boundary)
        stats.subset_counts[S] = counts
        if flavor == KSG_FLAVOR:
            if psi_offset == 0 and counts.min() == 0:
                raise ValueError(
                    "a strict boundary count of 0 makes psi(0) undefined with "
                    "psi_offset=0; use psi_offset=1 or boundary='inclusive'")
            acc += float(a) * (-digamma_int(counts + psi_offset))
        else:
            acc += float(a) * (-np.log(counts))
    return const, acc, stats


def shared_radius_estimate(ds: Dataset, terms: Sequence[tuple[frozenset, Fraction]],
                           k: int, flavor: str, boundary: str = STRICT,
                           psi_offset: int = 1) -> tuple[float, SharedRadiusStats]:
    const, acc, stats = shared_radius_terms(ds, terms, k, flavor,
                                            boundary=boundary, psi_offset=psi_offset)
    return const + float(np.mean(acc)), stats


def _standard_terms(n_groups: int) -> list[tuple[frozenset, Fraction]]:
    terms = [(frozenset([g]), Fraction(1)) for g in range(n_groups)]
    terms.append((frozenset(range(n_groups)), Fraction(-1)))
    return terms


def mi_ksg(ds: Dataset, k: int, boundary: str = STRICT) -> EstimateReport:
    """psi(k) + log N - mean[psi(n_x + 1) + psi(n_y + 1)], l_inf radii."""
    _require_two_groups(ds, "mi_ksg")
    estimate, stats = shared_radius_estimate(ds, _standard_terms(2), k,
                                             KSG_FLAVOR, boundary=boundary)
    report = EstimateReport(estimate=estimate, method="ksg", k=k, norm=Norm.LINF.label,
                            n=ds.n, group_dims=ds.group_dims)
    report.local = _local_terms_from_stats(ds, k, KSG_FLAVOR, stats)
    return report


def mi_biksg(ds: Dataset, k: int) -> EstimateReport:
    """psi(k) + log N + log(c_x c_y / c_xy) - mean[log n_x + log n_y], l2 radii."""
    _require_two_groups(ds, "mi_biksg")
    report_warnings = []
    dx, dy = ds.group_dims
    k_floor = max(dx / dy, dy / dx)
    if k <= k_floor:
        msg = (f"biksg consistency requires k > max(dx/dy, dy/dx) = {k_floor:g}; "
               f"k={k} is still usable but not covered by the theory")
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        report_warnings.append(msg)
    estimate, stats = shared_radius_estimate(ds, _standard_terms(2), k, BIKSG_FLAVOR)
    report = EstimateReport(estimate=estimate, method="biksg", k=k, norm=Norm.L2.label,
                            n=ds.n, group_dims=ds.group_dims, warnings=report_warnings)
    report.local = _local_terms_from_stats(ds, k, BIKSG_FLAVOR, stats)
    return report


def mi_3kl(ds: Dataset, k: int, norm=Norm.LINF) -> EstimateReport:
    """H_hat(X) + H_hat(Y) - H_hat(X, Y), three independent k-NN searches."""
    _require_two_groups(ds, "mi_3kl")
    norm = Norm.coerce(norm)
    xi_x = local_entropy_terms(ds.group_values(0), k, norm, space=ds.group_names[0])
    xi_y = local_entropy_terms(ds.group_values(1), k, norm, space=ds.group_names[1])
    xi_z = local_entropy_terms(ds.values, k, norm, space="joint")
    estimate = float(np.mean(xi_x)) + float(np.mean(xi_y)) - float(np.mean(xi_z))
    report = EstimateReport(estimate=estimate, method="3kl", k=k, norm=norm.label,
                            n=ds.n, group_dims=ds.group_dims)
    report.local = LocalMiTerms(iota=xi_x + xi_y - xi_z, xi_x=xi_x, xi_y=xi_y, xi_z=xi_z)
    return report


def _local_terms_from_stats(ds: Dataset, k: int, flavor: str,
                            stats: SharedRadiusStats) -> LocalMiTerms:
    norm = Norm.LINF if flavor == KSG_FLAVOR else Norm.L2
    dx, dy = ds.group_dims
    n = ds.n
    log_rho = np.log(stats.rho)
    nx = stats.subset_counts[frozenset([0])]
    ny = stats.subset_counts[frozenset([1])]
    c_x, c_y = log_ball_volume(dx, norm.p), log_ball_volume(dy, norm.p)
    c_z = log_ball_volume(dx + dy, norm.p) if norm is Norm.L2 else c_x + c_y
    xi_z = -digamma(k) + math.log(n) + c_z + (dx + dy) * log_rho
    if flavor == KSG_FLAVOR:
        xi_x = -digamma_int(nx + 1) + math.log(n) + c_x + dx * log_rho
        xi_y = -digamma_int(ny + 1) + math.log(n) + c_y + dy * log_rho
    else:
        xi_x = -np.log(nx) + math.log(n) + c_x + dx * log_rho
        xi_y = -np.log(ny) + math.log(n) + c_y + dy * log_rho
    return LocalMiTerms(iota=xi_x + xi_y - xi_z, xi_x=xi_x, xi_y=xi_y, xi_z=xi_z)


def decompose_local(ds: Dataset, k: int, method="ksg",
                    true_h: tuple[float, float, float] | None = None,
                    boundary: str = STRICT) -> LocalMiTerms:
    """Per-sample entropy decomposition for any of the three families.

    ``method`` is a MiMethod or one of "ksg" (l_inf, psi form), "biksg"
    (l2, log form), "3kl" (independent radii).  When ``true_h`` supplies
    (H(X), H(Y), H(X, Y)), the local biases b_* = xi_* - H_* are populated.
    """
    kind = method.kind if isinstance(method, MiMethod) else str(method)
    _require_two_groups(ds, "decompose_local")
    if kind == "3kl":
        norm = method.norm if isinstance(method, MiMethod) else Norm.LINF
        terms = mi_3kl(ds, k, norm=norm).local
    elif kind in ("ksg", "biksg"):
        flavor = KSG_FLAVOR if kind == "ksg" else BIKSG_FLAVOR
        _, stats = shared_radius_estimate(ds, _standard_terms(2), k, flavor,
                                          boundary=boundary)
        terms = _local_terms_from_stats(ds, k, flavor, stats)
    else:
        raise ValueError(f"unknown method kind {kind!r}")
    if true_h is not None:
        h_x, h_y, h_z = (float(v) for v in true_h)
        terms.b_x = terms.xi_x - h_x
        terms.b_y = terms.xi_y - h_y
        terms.b_z = terms.xi_z - h_z
    return terms


def mi_truncated(ds: Dataset, method: MiMethod, k: int,
                 a_n_override: float | None = None,
                 boundary: str = STRICT) -> EstimateReport:
    """Truncated estimator: samples whose joint radius exceeds a_N contribute 0.

    a_N = ((log N)^(1+delta)/N)^(1/(dx+dy)).  For kind "3kl" the three
    entropy terms are truncated independently, each with the threshold of
    its own space's dimension.
    """
    if not method.truncate:
        raise ValueError("mi_truncated requires a method with truncate on")
    _require_two_groups(ds, "mi_truncated")
    n, d = ds.n, ds.d
    if method.kind == "3kl":
        def tkl(values, space):
            rho = NeighborIndex(values, method.norm).kth_distances(k)
            raise_on_zero_radius(rho, values, space)
            dd = values.shape[1]
            a_n = (truncation_threshold(n, dd, method.delta)
                   if a_n_override is None else float(a_n_override))
            xi = (-digamma(k) + math.log(n) + log_ball_volume(dd, method.norm.p)
                  + dd * np.log(rho))
            return float(np.mean(np.where(rho > a_n, 0.0, xi)))

        estimate = (tkl(ds.group_values(0), ds.group_names[0])
                    + tkl(ds.group_values(1), ds.group_names[1])
                    - tkl(ds.values, "joint"))
        return EstimateReport(estimate=estimate, method="t3kl", k=k, norm=method.norm.label,
                              n=n, group_dims=ds.group_dims)

    flavor = KSG_FLAVOR if method.kind == "ksg" else BIKSG_FLAVOR
    norm = Norm.LINF if flavor == KSG_FLAVOR else Norm.L2
    const, acc, stats = shared_radius_terms(ds, _standard_terms(2), k, flavor,
                                            boundary=boundary)
    a_n = truncation_threshold(n, d, method.delta) if a_n_override is None else float(a_n_override)
    kept = stats.rho <= a_n
    # each local term is const + acc_i; truncated samples contribute zero
    estimate = const * float(np.mean(kept)) + float(np.mean(np.where(kept, acc, 0.0)))
    return EstimateReport(estimate=estimate, method="t" + method.kind, k=k,
                          norm=norm.label, n=n, group_dims=ds.group_dims)


def estimate_mi(ds: Dataset, method: MiMethod, k: int,
                boundary: str = STRICT) -> EstimateReport:
    """Dispatch a MiMethod to the matching estimator."""
    if method.truncate:
        return mi_truncated(ds, method, k, boundary=boundary)
    if method.kind == "3kl":
        return mi_3kl(ds, k, norm=method.norm)
    if method.kind == "ksg":
        return mi_ksg(ds, k, boundary=boundary)
    return mi_biksg(ds, k)
