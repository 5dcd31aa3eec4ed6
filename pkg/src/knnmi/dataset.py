"""Sample ingestion, validation, column grouping, and degenerate-input policy."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class IngestionError(ValueError):
    """Raised when an input file or array cannot form a valid Dataset."""


class DuplicateSampleError(ValueError):
    """Raised when identical rows make a k-NN radius zero.

    ``space`` names the projection in which the duplicates occur ("joint",
    "x", "y", "x3", ...); ``groups`` lists the offending row-index groups.
    """

    def __init__(self, space: str, groups: Sequence[Sequence[int]]):
        self.space = space
        self.groups = [list(g) for g in groups]
        shown = ", ".join(str(g) for g in self.groups[:5])
        more = "" if len(self.groups) <= 5 else f" (+{len(self.groups) - 5} more)"
        super().__init__(f"duplicate samples in {space} space at row indices {shown}{more}")


@dataclass(frozen=True)
class DegeneracyPolicy:
    """What to do about duplicate joint rows: refuse, or jitter everything."""

    mode: str = "error"  # "error" | "jitter"
    jitter_scale: float = 0.0

    def __post_init__(self):
        if self.mode not in ("error", "jitter"):
            raise ValueError(f"mode must be 'error' or 'jitter', got {self.mode!r}")
        if self.mode == "jitter" and not self.jitter_scale > 0.0:
            raise ValueError("jitter mode requires jitter_scale > 0")
        if self.mode == "error" and self.jitter_scale != 0.0:
            raise ValueError("jitter_scale must be 0 under error mode")


@dataclass(frozen=True)
class Dataset:
    """An immutable N x d sample matrix with an ordered column grouping.

    ``group_dims`` partitions the columns left to right: for plain mutual
    information use two groups (X then Y); entropy uses a single group.
    """

    values: np.ndarray
    group_dims: tuple[int, ...]
    group_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise IngestionError(f"values must be 2-D, got shape {values.shape}")
        if values.shape[0] < 2:
            raise IngestionError(f"need at least 2 samples, got {values.shape[0]}")
        if not np.isfinite(values).all():
            bad = np.argwhere(~np.isfinite(values))[0]
            raise IngestionError(f"non-finite value at row {bad[0]}, column {bad[1]}")
        dims = tuple(int(g) for g in self.group_dims)
        if not dims or any(g < 1 for g in dims):
            raise IngestionError(f"group dims must be positive, got {self.group_dims!r}")
        if sum(dims) != values.shape[1]:
            raise IngestionError(
                f"group dims {dims} sum to {sum(dims)} but data has {values.shape[1]} columns"
            )
        names = self.group_names or default_group_names(len(dims))
        if len(names) != len(dims):
            raise IngestionError("group_names length must match group_dims")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "group_dims", dims)
        object.__setattr__(self, "group_names", tuple(names))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def n_groups(self) -> int:
        return len(self.group_dims)

    def group_slice(self, g: int) -> slice:
        start = sum(self.group_dims[:g])
        return slice(start, start + self.group_dims[g])

    def group_values(self, g: int) -> np.ndarray:
        return self.values[:, self.group_slice(g)]

    def subset_columns(self, groups: Sequence[int]) -> np.ndarray:
        """Columns of the union of the given groups, in ascending group order."""
        cols: list[int] = []
        for g in sorted(set(int(g) for g in groups)):
            s = self.group_slice(g)
            cols.extend(range(s.start, s.stop))
        return self.values[:, cols]

    def subset_dim(self, groups: Sequence[int]) -> int:
        return sum(self.group_dims[g] for g in set(int(g) for g in groups))

    def with_values(self, values: np.ndarray) -> "Dataset":
        return Dataset(values, self.group_dims, self.group_names)

    def as_single_group(self) -> "Dataset":
        return Dataset(self.values, (self.d,), ("joint",))


def default_group_names(n_groups: int) -> tuple[str, ...]:
    if n_groups == 1:
        return ("x",)
    if n_groups == 2:
        return ("x", "y")
    return tuple(f"x{i + 1}" for i in range(n_groups))


def duplicate_row_groups(values: np.ndarray) -> list[list[int]]:
    """Index groups of exactly identical rows (groups of size >= 2)."""
    values = np.asarray(values)
    order = np.lexsort(values.T[::-1])
    rows = values[order]
    same = np.all(rows[1:] == rows[:-1], axis=1)
    groups: list[list[int]] = []
    run = [int(order[0])]
    for j, eq in enumerate(same):
        if eq:
            run.append(int(order[j + 1]))
        else:
            if len(run) > 1:
                groups.append(sorted(run))
            run = [int(order[j + 1])]
    if len(run) > 1:
        groups.append(sorted(run))
    groups.sort()
    return groups


def check_duplicates(ds: Dataset, policy: DegeneracyPolicy | None = None, seed: int = 0) -> Dataset:
    """Enforce the duplicate-row policy on the joint space.

    Under error mode the Dataset is returned unchanged iff no two rows are
    identical.  Under jitter mode every entry is perturbed by i.i.d. uniform
    noise in [-jitter_scale, jitter_scale] drawn from a seeded generator.
    """
    policy = policy or DegeneracyPolicy()
    if policy.mode == "error":
        groups = duplicate_row_groups(ds.values)
        if groups:
            raise DuplicateSampleError("joint", groups)
        return ds
    from .synth import make_rng  # local import: synth depends on dataset

    rng = make_rng(seed, "jitter")
    noise = rng.uniform(-policy.jitter_scale, policy.jitter_scale, size=ds.values.shape)
    jittered = ds.with_values(ds.values + noise)
    groups = duplicate_row_groups(jittered.values)
    if groups:
        raise DuplicateSampleError("joint (after jitter)", groups)
    return jittered


def load_csv(path, group_dims: Sequence[int], has_header: bool = False) -> Dataset:
    """Read a numeric CSV into a Dataset with the given column grouping.

    Comma-separated UTF-8, one sample per row, optional single header line
    (skipped); every row must have exactly sum(group_dims) finite fields.
    """
    dims = [int(g) for g in group_dims]
    want = sum(dims)
    rows: list[list[float]] = []
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        for lineno, rec in enumerate(reader, start=1):
            if has_header and lineno == 1:
                continue
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if len(rec) != want:
                raise IngestionError(
                    f"{path}: line {lineno} has {len(rec)} fields, expected {want}"
                )
            try:
                vals = [float(f) for f in rec]
            except ValueError as exc:
                raise IngestionError(f"{path}: line {lineno}: {exc}") from exc
            if not all(math.isfinite(v) for v in vals):
                raise IngestionError(f"{path}: line {lineno} contains a non-finite value")
            rows.append(vals)
    if len(rows) < 2:
        raise IngestionError(f"{path}: need at least 2 data rows, got {len(rows)}")
    return Dataset(np.array(rows, dtype=np.float64), tuple(dims))
