"""Trial runner and summary statistics: bias tables, MSE slopes, correlation boosting.

A trial draws one dataset from the spec's distribution using the substream
(master_seed, global_trial_index) and evaluates every requested method on
that same draw, so methods are always compared on paired data.  Aggregation
runs in a fixed order, making results byte-identical across thread counts.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dataset import Dataset
from .entropy import EntropyConfig, kl_entropy
from .knn import Norm, STRICT
from .mi import MiMethod, decompose_local, estimate_mi
from .mmi import mmi_biksg, mmi_ksg, mmi_l_plus_1_kl
from .synth import (Distribution, distribution_from_config, distribution_to_config,
                    make_rng, sample, true_entropy, true_mi)

ENTROPY_METHODS = ("kl",)
MI_METHODS = ("3kl", "ksg", "biksg")


def pearson(a, b) -> float:
    """Sample Pearson correlation of two equal-length series."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("pearson needs two equal-length 1-D series of length >= 2")
    ac, bc = a - a.mean(), b - b.mean()
    denom = math.sqrt(float(ac @ ac) * float(bc @ bc))
    if denom == 0.0:
        raise ValueError("pearson undefined: a series has zero variance")
    return float(ac @ bc) / denom


def fit_loglog_slope(sample_sizes: Sequence[int], mses: Sequence[float]) -> dict:
    """OLS of ln(MSE) on ln(N): slope, intercept, R^2."""
    x = np.log(np.asarray(sample_sizes, dtype=float))
    y_in = np.asarray(mses, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 sample sizes for a slope fit")
    if np.any(y_in <= 0.0):
        raise ValueError("degenerate regression: MSE of 0 has no log")
    y = np.log(y_in)
    design = np.vstack([x, np.ones_like(x)]).T
    coef, residual, *_ = np.linalg.lstsq(design, y, rcond=None)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(residual[0]) if residual.size else float(np.sum((design @ coef - y) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return {"slope": float(coef[0]), "intercept": float(coef[1]), "r2": r2}


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str  # "bias_table" | "mse_slope" | "correlation_boost"
    distribution: Distribution
    group_dims: tuple[int, ...]
    methods: tuple[str, ...]
    k: int
    sample_sizes: tuple[int, ...]
    trials: int
    master_seed: int | None = None
    norm: str = "linf"          # used by kl / 3kl
    delta: float = 0.5
    boundary: str = STRICT
    true_value: float | str | None = None  # override; "self" = self-referential mode

    def __post_init__(self):
        if self.kind not in ("bias_table", "mse_slope", "correlation_boost"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        sizes = tuple(int(n) for n in self.sample_sizes)
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError("sample_sizes must be strictly increasing")
        object.__setattr__(self, "sample_sizes", sizes)
        object.__setattr__(self, "group_dims", tuple(int(g) for g in self.group_dims))
        object.__setattr__(self, "methods", tuple(self.methods))
        for m in self.methods:
            self._resolve_method(m)  # validates name against group count

    @classmethod
    def from_config(cls, cfg: dict) -> "ExperimentSpec":
        return cls(
            kind=cfg["kind"],
            distribution=distribution_from_config(cfg["distribution"]),
            group_dims=tuple(cfg["group_dims"]),
            methods=tuple(cfg["methods"]),
            k=int(cfg["k"]),
            sample_sizes=tuple(cfg["sample_sizes"]),
            trials=int(cfg["trials"]),
            master_seed=cfg.get("master_seed"),
            norm=cfg.get("norm", "linf"),
            delta=float(cfg.get("delta", 0.5)),
            boundary=cfg.get("boundary", STRICT),
            true_value=cfg.get("true_value"),
        )

    def to_config(self) -> dict:
        return {
            "kind": self.kind,
            "distribution": distribution_to_config(self.distribution),
            "group_dims": list(self.group_dims),
            "methods": list(self.methods),
            "k": self.k,
            "sample_sizes": list(self.sample_sizes),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "norm": self.norm,
            "delta": self.delta,
            "boundary": self.boundary,
            "true_value": self.true_value,
        }

    def _resolve_method(self, name: str) -> Callable[[Dataset], float]:
        k, norm, boundary = self.k, Norm.coerce(self.norm), self.boundary
        n_groups = len(self.group_dims)
        if name in MI_METHODS and n_groups < 2:
            raise ValueError(f"method {name!r} needs at least two groups")
        if name == "kl":
            cfg = EntropyConfig(k=k, norm=norm)
            return lambda ds: kl_entropy(ds.as_single_group(), cfg).estimate
        if name == "3kl":
            if n_groups == 2:
                return lambda ds: estimate_mi(ds, MiMethod("3kl", norm=norm), k).estimate
            return lambda ds: mmi_l_plus_1_kl(ds, k, norm=norm).estimate
        if name == "ksg":
            if n_groups == 2:
                return lambda ds: estimate_mi(ds, MiMethod("ksg"), k, boundary=boundary).estimate
            return lambda ds: mmi_ksg(ds, k, boundary=boundary).estimate
        if name == "biksg":
            if n_groups == 2:
                return lambda ds: estimate_mi(ds, MiMethod("biksg"), k).estimate
            return lambda ds: mmi_biksg(ds, k).estimate
        raise ValueError(f"unknown method {name!r} (expected one of kl, 3kl, ksg, biksg)")

    def true_quantity(self) -> float:
        if isinstance(self.true_value, (int, float)):
            return float(self.true_value)
        if self.methods == ("kl",):
            return true_entropy(self.distribution)
        return true_mi(self.distribution, self.group_dims)


@dataclass
class CellStats:
    """Aggregates for one (N, method) cell."""

    n: int
    method: str
    trials: int
    mean_estimate: float
    bias: float
    variance: float
    mse: float
    stderr: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "method": self.method,
            "trials": self.trials,
            "mean_estimate": self.mean_estimate,
            "bias": self.bias,
            "variance": self.variance,
            "mse": self.mse,
            "stderr": self.stderr,
        }


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    protocol: str
    cells: list[CellStats] = field(default_factory=list)
    pearson_rows: list[dict] = field(default_factory=list)
    slopes: list[dict] = field(default_factory=list)
    scatter: list[dict] = field(default_factory=list)

    def cell(self, n: int, method: str) -> CellStats:
        for c in self.cells:
            if c.n == n and c.method == method:
                return c
        raise KeyError(f"no cell for N={n}, method={method}")

    def to_doc(self) -> dict:
        doc = {
            "schema_version": 1,
            "experiment": self.spec.to_config(),
            "protocol": self.protocol,
            "results": [c.to_dict() for c in self.cells],
        }
        if self.pearson_rows:
            doc["pearson"] = self.pearson_rows
        if self.slopes:
            doc["slopes"] = self.slopes
        return doc

    def to_csv_rows(self) -> list[str]:
        """Tidy CSV: one row per N x method x statistic."""
        lines = ["n,method,statistic,value"]
        for c in self.cells:
            for stat in ("mean_estimate", "bias", "variance", "mse", "stderr"):
                lines.append(f"{c.n},{c.method},{stat},{format(getattr(c, stat), '.17g')}")
        for row in self.pearson_rows:
            lines.append(f"{row['n']},{row['method']},pearson_bz_bx,{format(row['pearson'], '.17g')}")
        for row in self.slopes:
            for stat in ("slope", "intercept", "r2"):
                lines.append(f",{row['method']},{stat},{format(row[stat], '.17g')}")
        return lines

    def scatter_csv_rows(self) -> list[str]:
        lines = ["n,method,trial,b_joint,b_x"]
        for row in self.scatter:
            lines.append(f"{row['n']},{row['method']},{row['trial']},"
                         f"{format(row['b_joint'], '.17g')},{format(row['b_x'], '.17g')}")
        return lines


def _require_seed(spec: ExperimentSpec) -> int:
    if spec.master_seed is None:
        raise ValueError("experiment requires a master seed (no silent nondeterminism)")
    return int(spec.master_seed)


def _run_trials(spec: ExperimentSpec, threads: int, work: Callable[[int, int, int], object]) -> dict:
    """Evaluate work(n, trial, global_index) over the N x trial grid.

    Results are keyed by (n, trial); the global trial index seeds the
    substream, enumerated N-major so every cell draw is distinct.
    """
    jobs = []
    for n_idx, n in enumerate(spec.sample_sizes):
        for t in range(spec.trials):
            jobs.append((n, t, n_idx * spec.trials + t))
    results: dict[tuple[int, int], object] = {}
    if threads <= 1:
        for n, t, g in jobs:
            results[(n, t)] = work(n, t, g)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for (n, t, _), value in zip(jobs, pool.map(lambda j: work(*j), jobs)):
                results[(n, t)] = value
    return results


def _summarize(spec: ExperimentSpec, estimates: dict, truth: float) -> list[CellStats]:
    cells = []
    for n in spec.sample_sizes:
        for m_idx, method in enumerate(spec.methods):
            values = np.array([estimates[(n, t)][m_idx] for t in range(spec.trials)])
            if spec.true_value == "self":
                truth_nm = float(values.mean())
            else:
                truth_nm = truth
            mean = float(values.mean())
            bias = mean - truth_nm
            variance = float(values.var())  # population variance: mse == bias^2 + var
            cells.append(CellStats(
                n=n, method=method, trials=spec.trials, mean_estimate=mean,
                bias=bias, variance=variance, mse=bias * bias + variance,
                stderr=math.sqrt(variance / spec.trials),
            ))
    return cells


def run_bias_table(spec: ExperimentSpec, threads: int = 1) -> ExperimentResult:
    """Per-(N, method) bias/variance/MSE against the closed-form truth.

    An estimator failure aborts the run with the trial's full context.
    """
    seed = _require_seed(spec)
    fns = [spec._resolve_method(m) for m in spec.methods]

    def work(n, trial, g):
        ds = sample(spec.distribution, n, make_rng(seed, g), group_dims=spec.group_dims)
        out = []
        for method, fn in zip(spec.methods, fns):
            try:
                out.append(fn(ds))
            except Exception as exc:
                raise RuntimeError(
                    f"trial failed: N={n} method={method} trial={trial} "
                    f"master_seed={seed} substream={g}: {exc}") from exc
        return out

    estimates = _run_trials(spec, threads, work)
    truth = spec.true_quantity()
    protocol = (f"bias_table seed={seed} trials={spec.trials} k={spec.k} "
                f"boundary={spec.boundary} substream=(seed, n_major_trial_index)")
    return ExperimentResult(spec=spec, protocol=protocol,
                            cells=_summarize(spec, estimates, truth))


def run_mse_slope(spec: ExperimentSpec, threads: int = 1) -> ExperimentResult:
    """Bias table plus an OLS fit of ln(MSE) on ln(N) per method."""
    result = run_bias_table(spec, threads=threads)
    for method in spec.methods:
        mses = [result.cell(n, method).mse for n in spec.sample_sizes]
        fit = fit_loglog_slope(spec.sample_sizes, mses)
        fit["method"] = method
        result.slopes.append(fit)
    result.protocol = result.protocol.replace("bias_table", "mse_slope")
    return result


def run_correlation_boost(spec: ExperimentSpec, threads: int = 1,
                          scatter_limit: int = 200) -> ExperimentResult:
    """Pearson correlation of pooled local biases b(joint) vs b(X) per cell.

    Requires a distribution with closed-form marginal and joint entropies;
    local biases are pooled over all trials of a cell before correlating.
    Also emits scatter rows (first ``scatter_limit`` pairs per cell) for
    external plotting.
    """
    seed = _require_seed(spec)
    if len(spec.group_dims) != 2:
        raise ValueError("correlation boosting is defined for two groups")
    for m in spec.methods:
        if m not in MI_METHODS:
            raise ValueError(f"correlation boosting needs MI methods, got {m!r}")
    dist = spec.distribution
    dx, dy = spec.group_dims
    from .synth import MultivariateNormal, UniformCube

    if isinstance(dist, MultivariateNormal):
        h_z = true_entropy(dist)
        cov = np.asarray(dist.cov)
        h_x = 0.5 * np.linalg.slogdet(cov[:dx, :dx])[1] + 0.5 * dx * math.log(2 * math.pi * math.e)
        h_y = (0.5 * np.linalg.slogdet(cov[dx:, dx:])[1]
               + 0.5 * dy * math.log(2 * math.pi * math.e))
        true_h = (float(h_x), float(h_y), float(h_z))
    elif isinstance(dist, UniformCube):
        true_h = (0.0, 0.0, 0.0)
    else:
        raise ValueError("correlation boosting needs closed-form marginal entropies")

    def work(n, trial, g):
        ds = sample(dist, n, make_rng(seed, g), group_dims=spec.group_dims)
        out = {}
        for method in spec.methods:
            terms = decompose_local(ds, spec.k, method=method, true_h=true_h,
                                    boundary=spec.boundary)
            out[method] = (terms.b_z, terms.b_x)
        return out

    per_trial = _run_trials(spec, threads, work)
    result = ExperimentResult(
        spec=spec,
        protocol=(f"correlation_boost seed={seed} trials={spec.trials} k={spec.k} "
                  f"boundary={spec.boundary} pooling=all_trials"),
    )
    for n in spec.sample_sizes:
        for method in spec.methods:
            b_z = np.concatenate([per_trial[(n, t)][method][0] for t in range(spec.trials)])
            b_x = np.concatenate([per_trial[(n, t)][method][1] for t in range(spec.trials)])
            result.pearson_rows.append(
                {"n": n, "method": method, "pearson": pearson(b_z, b_x)})
            for j in range(min(scatter_limit, b_z.size)):
                result.scatter.append({"n": n, "method": method, "trial": j // n,
                                       "b_joint": float(b_z[j]), "b_x": float(b_x[j])})
    return result


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> ExperimentResult:
    if spec.kind == "bias_table":
        return run_bias_table(spec, threads=threads)
    if spec.kind == "mse_slope":
        return run_mse_slope(spec, threads=threads)
    return run_correlation_boost(spec, threads=threads)
