import math

import numpy as np
import pytest

from knnmi.dataset import Dataset, DuplicateSampleError
from knnmi.experiments import pearson
from knnmi.knn import INCLUSIVE, STRICT
from knnmi.mi import (MiMethod, decompose_local, estimate_mi, mi_3kl, mi_biksg, mi_ksg,
                      mi_truncated)
from knnmi.synth import MultivariateNormal, UniformCube, make_rng, sample

EULER_GAMMA = 0.5772156649015329

TRIANGLE = Dataset(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]]), (1, 1))
CORR_GAUSS = MultivariateNormal(mean=(0.0, 0.0), cov=((1.0, 0.9), (0.9, 1.0)))


def gauss_ds(seed, n=400, dist=CORR_GAUSS):
    return sample(dist, n, make_rng(seed), group_dims=(1, 1))


def test_mi_ksg_hand_example_inclusive():
    # counts (2,2,2)/(1,1,2): psi-sum telescopes to gamma + ln 3 - 8/3
    est = mi_ksg(TRIANGLE, 1, boundary=INCLUSIVE).estimate
    assert est == pytest.approx(EULER_GAMMA + math.log(3) - 8.0 / 3.0, abs=1e-10)
    assert est == pytest.approx(-0.99084, abs=5e-6)


def test_mi_ksg_hand_example_strict():
    # strict counts (1,0,2)/(1,1,0): psi-sum telescopes to gamma + ln 3 - 3/2
    est = mi_ksg(TRIANGLE, 1, boundary=STRICT).estimate
    assert est == pytest.approx(EULER_GAMMA + math.log(3) - 1.5, abs=1e-10)


def test_ksg_invariance_translation_scaling():
    ds = gauss_ds(60)
    base = mi_ksg(ds, 4).estimate
    assert mi_ksg(ds.with_values(ds.values + [13.0, -4.0]), 4).estimate == base
    assert mi_ksg(ds.with_values(ds.values * 2.0), 4).estimate == base
    assert mi_ksg(ds.with_values(ds.values * 0.25), 4).estimate == base


def test_biksg_invariance_translation_scaling():
    ds = gauss_ds(61)
    base = mi_biksg(ds, 4).estimate
    assert mi_biksg(ds.with_values(ds.values + [0.3, 11.0]), 4).estimate == base
    assert mi_biksg(ds.with_values(ds.values * 8.0), 4).estimate == base


def test_3kl_scaling_cancellation():
    ds = gauss_ds(62)
    base = mi_3kl(ds, 4).estimate
    for a in (0.5, 2.0, 10.0):
        scaled = mi_3kl(ds.with_values(ds.values * a), 4).estimate
        assert scaled == pytest.approx(base, abs=1e-9)


def test_sample_permutation_invariance():
    ds = gauss_ds(63)
    perm = make_rng(7).permutation(ds.n)
    shuffled = ds.with_values(ds.values[perm])
    assert mi_ksg(shuffled, 3).estimate == pytest.approx(mi_ksg(ds, 3).estimate, abs=1e-10)
    assert mi_biksg(shuffled, 3).estimate == pytest.approx(mi_biksg(ds, 3).estimate, abs=1e-10)
    assert mi_3kl(shuffled, 3).estimate == pytest.approx(mi_3kl(ds, 3).estimate, abs=1e-10)


def test_biksg_volume_constant():
    # d_x = d_y = 1: log(c_{1,2}^2 / c_{2,2}) = log(4 / pi) = 0.241564...
    from knnmi.specfn import log_ball_volume
    const = 2 * log_ball_volume(1, 2) - log_ball_volume(2, 2)
    assert const == pytest.approx(math.log(4 / math.pi), abs=1e-12)
    assert const == pytest.approx(0.24156, abs=1e-5)


@pytest.mark.parametrize("method", ["ksg", "biksg", "3kl"])
def test_decomposition_identity(method):
    ds = gauss_ds(64)
    terms = decompose_local(ds, 4, method=method)
    np.testing.assert_allclose(terms.iota, terms.xi_x + terms.xi_y - terms.xi_z,
                               rtol=0, atol=1e-10)


def test_decompose_mean_iota_matches_estimates():
    ds = gauss_ds(65)
    t_ksg = decompose_local(ds, 4, method="ksg")
    assert float(np.mean(t_ksg.iota)) == pytest.approx(mi_ksg(ds, 4).estimate, abs=1e-10)
    t_bik = decompose_local(ds, 4, method="biksg")
    assert float(np.mean(t_bik.iota)) == pytest.approx(mi_biksg(ds, 4).estimate, abs=1e-10)
    t_3kl = decompose_local(ds, 4, method="3kl")
    assert float(np.mean(t_3kl.iota)) == pytest.approx(mi_3kl(ds, 4).estimate, abs=1e-10)


def test_decompose_biases_need_truth():
    ds = gauss_ds(66, n=100)
    terms = decompose_local(ds, 2, method="ksg")
    assert terms.b_x is None
    withb = decompose_local(ds, 2, method="ksg", true_h=(0.1, 0.2, 0.3))
    np.testing.assert_allclose(withb.b_x, withb.xi_x - 0.1)
    np.testing.assert_allclose(withb.b_z, withb.xi_z - 0.3)


def test_report_exposes_local_terms():
    ds = gauss_ds(67, n=120)
    report = mi_ksg(ds, 4)
    assert report.local is not None
    assert float(np.mean(report.local.iota)) == pytest.approx(report.estimate, abs=1e-10)


def test_independent_uniforms_near_zero():
    # true MI = 0; 100-trial means for all three estimators within +/- 0.05
    sums = {"3kl": 0.0, "ksg": 0.0, "biksg": 0.0}
    trials = 100
    for t in range(trials):
        ds = sample(UniformCube(2), 4096, make_rng(68, t), group_dims=(1, 1))
        sums["3kl"] += mi_3kl(ds, 4).estimate
        sums["ksg"] += mi_ksg(ds, 4).estimate
        sums["biksg"] += mi_biksg(ds, 4).estimate
    for name, total in sums.items():
        assert abs(total / trials) <= 0.05, name


def test_truncated_equals_untruncated_at_infinite_threshold():
    ds = gauss_ds(69)
    for kind, plain in (("ksg", mi_ksg(ds, 4).estimate),
                        ("biksg", mi_biksg(ds, 4).estimate),
                        ("3kl", mi_3kl(ds, 4).estimate)):
        method = MiMethod(kind, truncate=True, delta=0.5)
        forced = mi_truncated(ds, method, 4, a_n_override=math.inf).estimate
        assert forced == plain, kind


def test_truncated_zero_below_min_radius():
    ds = gauss_ds(70, n=80)
    method = MiMethod("ksg", truncate=True)
    assert mi_truncated(ds, method, 2, a_n_override=1e-300).estimate == 0.0


def test_truncation_rarely_binds_at_large_n():
    for t in range(5):
        ds = gauss_ds(71 + t, n=3200)
        plain = mi_ksg(ds, 1).estimate
        trunc = mi_truncated(ds, MiMethod("ksg", truncate=True, delta=0.5), 1).estimate
        assert abs(trunc - plain) <= 0.02


def test_mi_truncated_requires_flag():
    ds = gauss_ds(72, n=60)
    with pytest.raises(ValueError):
        mi_truncated(ds, MiMethod("ksg"), 4)


def test_biksg_low_k_warns():
    ds = gauss_ds(73, n=100)
    with pytest.warns(RuntimeWarning, match="consistency"):
        report = mi_biksg(ds, 1)
    assert report.warnings
    import warnings as _w
    with _w.catch_warnings():
        _w.simplefilter("error")
        assert not mi_biksg(ds, 2).warnings


def test_method_norm_validation():
    with pytest.raises(ValueError):
        MiMethod("ksg", norm="l2")
    with pytest.raises(ValueError):
        MiMethod("biksg", norm="linf")
    assert MiMethod("3kl").norm.label == "linf"
    assert MiMethod("3kl", norm="l2").norm.label == "l2"


def test_3kl_duplicate_error_names_space():
    # duplicate x-projections, distinct joint rows
    values = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 2.0], [2.0, 3.0]])
    ds = Dataset(values, (1, 1))
    with pytest.raises(DuplicateSampleError, match="x"):
        mi_3kl(ds, 1)
    assert np.isfinite(mi_ksg(ds, 1).estimate)  # counts-based path is fine


def test_estimate_mi_dispatch():
    ds = gauss_ds(74, n=150)
    assert estimate_mi(ds, MiMethod("ksg"), 4).estimate == mi_ksg(ds, 4).estimate
    assert estimate_mi(ds, MiMethod("biksg"), 2).estimate == mi_biksg(ds, 2).estimate
    assert estimate_mi(ds, MiMethod("3kl"), 4).estimate == mi_3kl(ds, 4).estimate
    t = estimate_mi(ds, MiMethod("ksg", truncate=True), 4)
    assert t.method == "tksg"


def test_correlation_boosting_ksg_above_3kl():
    # pooled local-bias correlation: the shared-radius estimator correlates
    # its joint and marginal errors far more than independent searches do
    trials, n = 10, 1024
    pools = {"ksg": ([], []), "3kl": ([], [])}
    for t in range(trials):
        ds = sample(UniformCube(2), n, make_rng(75, t), group_dims=(1, 1))
        for method in ("ksg", "3kl"):
            terms = decompose_local(ds, 4, method=method, true_h=(0.0, 0.0, 0.0))
            pools[method][0].append(terms.b_z)
            pools[method][1].append(terms.b_x)
    corr = {m: pearson(np.concatenate(z), np.concatenate(x))
            for m, (z, x) in pools.items()}
    assert corr["ksg"] > corr["3kl"]
    assert corr["ksg"] - corr["3kl"] >= 0.15
