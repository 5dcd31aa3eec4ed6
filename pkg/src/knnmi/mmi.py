"""Multivariate mutual information estimators over L >= 2 variable groups.

The standard MMI sum_l H(X_l) - H(X_1..X_L) generalizes the pairwise
estimators directly; the general form accepts any balanced set function
a_S over variable subsets (sum_{S containing l} a_S = 0 for every l),
which guarantees the shared-radius log-rho terms cancel exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .dataset import Dataset, duplicate_row_groups, DuplicateSampleError
from .entropy import local_entropy_terms
from .knn import STRICT, Norm
from .mi import BIKSG_FLAVOR, KSG_FLAVOR, _standard_terms, shared_radius_estimate
from .report import EstimateReport


class BalanceError(ValueError):
    """Raised when a set function violates the balance condition."""


@dataclass(frozen=True)
class BalancedSetFunction:
    """Rational coefficients a_S over subsets of group ids.

    Coefficients are exact rationals so the balance check is exact.
    """

    terms: tuple[tuple[frozenset, Fraction], ...]

    def __post_init__(self):
        seen = set()
        norm_terms = []
        for subset, coeff in self.terms:
            subset = frozenset(int(g) for g in subset)
            if not subset:
                raise BalanceError("empty subsets are not allowed")
            if subset in seen:
                raise BalanceError(f"duplicate subset {sorted(subset)}")
            seen.add(subset)
            norm_terms.append((subset, Fraction(coeff)))
        object.__setattr__(self, "terms", tuple(norm_terms))

    def groups(self) -> set[int]:
        out: set[int] = set()
        for subset, _ in self.terms:
            out |= subset
        return out

    def validate_balance(self, n_groups: int) -> None:
        """Raise unless sum_{S containing l} a_S = 0 for every group l."""
        bad = []
        for g in range(n_groups):
            total = sum((a for S, a in self.terms if g in S), start=Fraction(0))
            if total != 0:
                bad.append((g, total))
        if bad:
            detail = ", ".join(f"group {g}: sum {t}" for g, t in bad)
            raise BalanceError(f"set function is not balanced ({detail})")
        if any(max(S) >= n_groups for S, _ in self.terms):
            raise BalanceError("set function references a group id beyond the dataset")

    @classmethod
    def standard(cls, n_groups: int) -> "BalancedSetFunction":
        """+1 on every singleton, -1 on the full set: the usual MMI."""
        return cls(tuple(_standard_terms(n_groups)))

    @classmethod
    def from_config(cls, entries: Sequence[dict]) -> "BalancedSetFunction":
        """Parse [{"groups": [ids], "coeff": "p/q"}, ...]."""
        terms = []
        for entry in entries:
            coeff = entry["coeff"]
            coeff = Fraction(coeff) if isinstance(coeff, str) else Fraction(coeff)
            terms.append((frozenset(entry["groups"]), coeff))
        return cls(tuple(terms))


def mmi_l_plus_1_kl(ds: Dataset, k: int, norm=Norm.LINF) -> EstimateReport:
    """sum_l H_hat(X_l) - H_hat(joint), each term its own k-NN search."""
    norm = Norm.coerce(norm)
    estimate = 0.0
    for g in range(ds.n_groups):
        xi = local_entropy_terms(ds.group_values(g), k, norm, space=ds.group_names[g])
        estimate += float(np.mean(xi))
    xi_joint = local_entropy_terms(ds.values, k, norm, space="joint")
    estimate -= float(np.mean(xi_joint))
    return EstimateReport(estimate=estimate, method=f"{ds.n_groups + 1}kl", k=k,
                          norm=norm.label, n=ds.n, group_dims=ds.group_dims)


def mmi_general(ds: Dataset, f: BalancedSetFunction, k: int, flavor: str = KSG_FLAVOR,
                boundary: str = STRICT, psi_offset: int = 1) -> EstimateReport:
    """Shared-radius estimator for an arbitrary balanced set function.

    Per sample, the joint k-NN radius is found once; each subset S with
    a_S != 0 contributes a_S times a local entropy estimate of the
    S-projection at that radius (the full set via -psi(k), the KL joint
    term).  Balance is validated first and makes the radius cancel, so the
    estimate reduces to count/digamma terms plus (sum_S a_S) log N and, in
    the l2 flavor, a ball-volume constant.
    """
    f.validate_balance(ds.n_groups)
    for S, a in f.terms:
        if a == 0:
            continue
        cols = ds.subset_columns(S)
        dups = duplicate_row_groups(cols)
        if dups:
            name = "joint" if len(S) == ds.n_groups else \
                "+".join(ds.group_names[g] for g in sorted(S))
            raise DuplicateSampleError(name, dups)
    estimate, _ = shared_radius_estimate(ds, f.terms, k, flavor,
                                         boundary=boundary, psi_offset=psi_offset)
    return EstimateReport(estimate=estimate, method=f"mmi_{flavor}_general", k=k,
                          norm=(Norm.LINF if flavor == KSG_FLAVOR else Norm.L2).label,
                          n=ds.n, group_dims=ds.group_dims)


def mmi_ksg(ds: Dataset, k: int, boundary: str = STRICT, psi_offset: int = 1) -> EstimateReport:
    """Shared l_inf radius MMI: psi(k) + (L-1) log N - mean sum_l psi(n_l + offset).

    ``psi_offset=1`` (default) makes L=2 reduce exactly to the pairwise
    estimator; ``psi_offset=0`` matches the generalized display as printed.
    """
    estimate, _ = shared_radius_estimate(ds, _standard_terms(ds.n_groups), k,
                                         KSG_FLAVOR, boundary=boundary,
                                         psi_offset=psi_offset)
    return EstimateReport(estimate=estimate, method="mmi_ksg", k=k, norm=Norm.LINF.label,
                          n=ds.n, group_dims=ds.group_dims)


def mmi_biksg(ds: Dataset, k: int) -> EstimateReport:
    """l2 analogue with log counts and the product-of-volumes constant."""
    estimate, _ = shared_radius_estimate(ds, _standard_terms(ds.n_groups), k, BIKSG_FLAVOR)
    return EstimateReport(estimate=estimate, method="mmi_biksg", k=k, norm=Norm.L2.label,
                          n=ds.n, group_dims=ds.group_dims)
