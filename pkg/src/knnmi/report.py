"""Estimate report shared by the entropy and mutual-information estimators."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class EstimateReport:
    """Point estimate plus per-sample diagnostics.

    ``local`` holds the method's local-term object (LocalEntropyTerms or
    LocalMiTerms) when the estimator exposes one.
    """

    estimate: float
    method: str
    k: int
    norm: str
    n: int
    group_dims: tuple[int, ...]
    local: Any = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "method": self.method,
            "k": self.k,
            "norm": self.norm,
            "n": self.n,
            "dims": list(self.group_dims),
            "warnings": list(self.warnings),
        }
