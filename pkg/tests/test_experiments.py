import math

import numpy as np
import pytest

from knnmi.experiments import (ExperimentSpec, fit_loglog_slope, pearson, run_bias_table,
                               run_correlation_boost, run_experiment, run_mse_slope)
from knnmi.jsonio import dumps
from knnmi.synth import MultivariateNormal, UniformCube

CORR9 = MultivariateNormal(mean=(0.0, 0.0), cov=((1.0, 0.9), (0.9, 1.0)))


def small_spec(**overrides):
    base = dict(kind="bias_table", distribution=CORR9, group_dims=(1, 1),
                methods=("3kl", "ksg", "biksg"), k=2, sample_sizes=(64, 128),
                trials=8, master_seed=5)
    base.update(overrides)
    return ExperimentSpec(**base)


def test_pearson_exact_cases():
    assert pearson([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == pytest.approx(1.0, abs=1e-15)
    assert pearson([1.0, 2.0, 3.0], [-1.0, -2.0, -3.0]) == pytest.approx(-1.0, abs=1e-15)


def test_pearson_hand_value():
    a, b = [1.0, 2.0, 3.0], [2.0, 4.0, 6.1]
    # direct formula oracle
    am, bm = np.mean(a), np.mean(b)
    num = sum((x - am) * (y - bm) for x, y in zip(a, b))
    den = math.sqrt(sum((x - am) ** 2 for x in a) * sum((y - bm) ** 2 for y in b))
    assert pearson(a, b) == pytest.approx(num / den, abs=1e-15)
    assert pearson(a, b) == pytest.approx(0.99989, abs=5e-5)


def test_pearson_errors():
    with pytest.raises(ValueError):
        pearson([1.0], [2.0])
    with pytest.raises(ValueError):
        pearson([1.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError, match="zero variance"):
        pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


def test_slope_fit_recovers_injected_power_law():
    ns = [128, 256, 512, 1024, 2048, 4096]
    fit = fit_loglog_slope(ns, [3.7 / n for n in ns])
    assert fit["slope"] == pytest.approx(-1.0, abs=1e-6)
    assert fit["r2"] >= 0.999999
    fit2 = fit_loglog_slope(ns, [2.0 / n ** 0.4 for n in ns])
    assert fit2["slope"] == pytest.approx(-0.4, abs=1e-6)


def test_slope_fit_degenerate_inputs():
    with pytest.raises(ValueError, match="degenerate"):
        fit_loglog_slope([10, 20, 40], [0.1, 0.0, 0.01])
    with pytest.raises(ValueError):
        fit_loglog_slope([10, 20], [0.1, 0.05])


def test_spec_validation():
    with pytest.raises(ValueError):
        small_spec(sample_sizes=(128, 64))
    with pytest.raises(ValueError):
        small_spec(trials=0)
    with pytest.raises(ValueError):
        small_spec(methods=("ksg", "mystery"))
    with pytest.raises(ValueError):
        small_spec(kind="anova")


def test_missing_seed_rejected():
    spec = small_spec(master_seed=None)
    with pytest.raises(ValueError, match="seed"):
        run_bias_table(spec)


def test_mi_methods_need_two_groups():
    with pytest.raises(ValueError, match="two groups"):
        small_spec(distribution=UniformCube(2), group_dims=(2,), methods=("ksg",))


def test_failed_trial_reports_context():
    # k = 64 exceeds N - 1 = 63 in the first cell
    spec = small_spec(k=64, sample_sizes=(64, 128), trials=2)
    with pytest.raises(RuntimeError, match=r"N=64 method=3kl trial=0 master_seed=5"):
        run_bias_table(spec)


def test_bias_table_stats_identity():
    result = run_bias_table(small_spec())
    assert len(result.cells) == 6
    truth = -0.5 * math.log(1 - 0.81)
    for cell in result.cells:
        assert cell.mse == pytest.approx(cell.bias ** 2 + cell.variance, rel=1e-9)
        assert cell.stderr == pytest.approx(math.sqrt(cell.variance / cell.trials), rel=1e-12)
        assert cell.bias == pytest.approx(cell.mean_estimate - truth, abs=1e-12)


def test_self_referential_truth_gives_zero_bias():
    result = run_bias_table(small_spec(true_value="self"))
    for cell in result.cells:
        assert cell.bias == 0.0
        assert cell.mse == cell.variance


def test_numeric_truth_override():
    result = run_bias_table(small_spec(true_value=0.25, sample_sizes=(64,), trials=4))
    cell = result.cells[0]
    assert cell.bias == pytest.approx(cell.mean_estimate - 0.25, abs=1e-12)


def test_determinism_across_runs_and_threads():
    doc1 = dumps(run_bias_table(small_spec()).to_doc())
    doc2 = dumps(run_bias_table(small_spec()).to_doc())
    doc4 = dumps(run_bias_table(small_spec(), threads=4).to_doc())
    assert doc1 == doc2 == doc4


def test_mse_slope_runner():
    spec = small_spec(kind="mse_slope", distribution=UniformCube(1), group_dims=(1,),
                      methods=("kl",), k=4, sample_sizes=(64, 128, 256, 512), trials=30)
    result = run_mse_slope(spec)
    (fit,) = result.slopes
    assert fit["method"] == "kl"
    assert fit["slope"] < -0.5
    assert 0.0 <= fit["r2"] <= 1.0


def test_mse_monotone_sanity():
    spec = small_spec(distribution=UniformCube(1), group_dims=(1,), methods=("kl",),
                      k=4, sample_sizes=(128, 1024), trials=100)
    result = run_bias_table(spec)
    assert result.cell(1024, "kl").mse < result.cell(128, "kl").mse


def test_correlation_boost_runner():
    spec = small_spec(kind="correlation_boost", distribution=UniformCube(2),
                      methods=("ksg", "3kl"), k=4, sample_sizes=(256,), trials=6)
    result = run_correlation_boost(spec)
    rows = {r["method"]: r["pearson"] for r in result.pearson_rows}
    assert set(rows) == {"ksg", "3kl"}
    assert all(-1.0 <= v <= 1.0 for v in rows.values())
    assert result.scatter and {"n", "method", "b_joint", "b_x"} <= set(result.scatter[0])
    csv_rows = result.scatter_csv_rows()
    assert csv_rows[0].startswith("n,method,trial")


def test_correlation_boost_requires_mi_methods():
    with pytest.raises(ValueError):
        run_correlation_boost(small_spec(kind="correlation_boost", methods=("kl",),
                                         distribution=UniformCube(2)))


def test_run_experiment_dispatch():
    doc = run_experiment(small_spec(sample_sizes=(64,), trials=3)).to_doc()
    assert doc["schema_version"] == 1
    assert doc["experiment"]["kind"] == "bias_table"
    assert {"bias", "mse", "stderr"} <= set(doc["results"][0])


def test_csv_rows_tidy_shape():
    result = run_bias_table(small_spec(sample_sizes=(64,), trials=3))
    rows = result.to_csv_rows()
    assert rows[0] == "n,method,statistic,value"
    assert len(rows) == 1 + 3 * 5  # three methods, five statistics


def test_spec_config_round_trip():
    spec = small_spec()
    again = ExperimentSpec.from_config(spec.to_config())
    assert again.to_config() == spec.to_config()


def test_jsonio_float_formatting():
    text = dumps({"x": 0.1, "n": 3, "flag": True, "name": "a", "arr": [1.5, 2.0]})
    assert '"x": 0.10000000000000001' in text
    assert '"n": 3' in text
    assert "2.0" in text  # floats keep a decimal point
    with pytest.raises(ValueError):
        dumps({"bad": math.inf})
