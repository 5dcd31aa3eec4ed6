import math

import numpy as np
import pytest

from knnmi.dataset import Dataset, DuplicateSampleError
from knnmi.entropy import (EntropyConfig, kl_entropy, truncated_kl_entropy, truncation_threshold)
from knnmi.synth import UniformCube, make_rng, sample

EULER_GAMMA = 0.5772156649015329

LINE = Dataset(np.array([[0.0], [0.1], [0.3], [0.7]]), (1,))


def test_kl_entropy_hand_example():
    # rho = (0.1, 0.1, 0.2, 0.4); H_hat = mean(ln(8 rho)) + gamma for k=1, d=1
    expected = np.mean(np.log(8 * np.array([0.1, 0.1, 0.2, 0.4]))) + EULER_GAMMA
    for norm in ("l2", "linf"):
        report = kl_entropy(LINE, EntropyConfig(k=1, norm=norm))
        assert report.estimate == pytest.approx(expected, abs=1e-12)
        assert report.estimate == pytest.approx(0.87393, abs=5e-6)


def test_kl_entropy_scale_law():
    rng = make_rng(40)
    ds = Dataset(rng.standard_normal((200, 3)), (3,))
    cfg = EntropyConfig(k=4, norm="l2")
    base = kl_entropy(ds, cfg).estimate
    for a in (0.5, 2.0, 10.0):
        scaled = kl_entropy(ds.with_values(ds.values * a), cfg).estimate
        assert scaled - base == pytest.approx(3 * math.log(a), abs=1e-9)


def test_kl_entropy_translation_and_permutation_invariance():
    rng = make_rng(41)
    ds = Dataset(rng.standard_normal((150, 2)), (2,))
    cfg = EntropyConfig(k=3)
    base = kl_entropy(ds, cfg).estimate
    shifted = kl_entropy(ds.with_values(ds.values + [7.0, -2.0]), cfg).estimate
    assert shifted == pytest.approx(base, abs=1e-10)
    perm = make_rng(42).permutation(ds.n)
    permuted = kl_entropy(ds.with_values(ds.values[perm]), cfg).estimate
    assert permuted == pytest.approx(base, abs=1e-10)


def test_kl_entropy_rejects_truncate_flag():
    with pytest.raises(ValueError):
        kl_entropy(LINE, EntropyConfig(k=1, truncate=True))
    with pytest.raises(ValueError):
        truncated_kl_entropy(LINE, EntropyConfig(k=1, truncate=False))


def test_kl_entropy_duplicate_error():
    dup = Dataset(np.array([[1.0], [1.0], [2.0]]), (1,))
    with pytest.raises(DuplicateSampleError):
        kl_entropy(dup, EntropyConfig(k=1))


def test_truncation_threshold_values():
    # N = e^2, d = 1, delta = 1: a_N = (log N)^2 / N = 4 / e^2
    assert truncation_threshold(math.e ** 2, 1, 1.0) == pytest.approx(4 / math.e ** 2, rel=1e-12)
    assert truncation_threshold(math.e ** 2, 1, 1.0) == pytest.approx(0.5413, abs=1e-4)
    prev = math.inf
    for n in (100, 1000, 10000, 100000, 1000000):
        a_n = truncation_threshold(n, 1, 0.5)
        assert a_n < prev
        prev = a_n
    a1 = truncation_threshold(500, 1, 0.5)
    assert truncation_threshold(500, 2, 0.5) == pytest.approx(math.sqrt(a1), rel=1e-12)


def test_truncated_equals_plain_when_threshold_infinite():
    rng = make_rng(44)
    ds = Dataset(rng.standard_normal((120, 2)), (2,))
    cfg_t = EntropyConfig(k=4, truncate=True)
    plain = kl_entropy(ds, EntropyConfig(k=4)).estimate
    forced = truncated_kl_entropy(ds, cfg_t, a_n_override=math.inf).estimate
    assert forced == plain


def test_truncated_zero_when_threshold_below_min_radius():
    rng = make_rng(45)
    ds = Dataset(rng.standard_normal((50, 2)), (2,))
    report = truncated_kl_entropy(ds, EntropyConfig(k=2, truncate=True), a_n_override=1e-300)
    assert report.estimate == 0.0
    assert report.local.truncated_flags.all()


def test_truncated_flags_consistent_with_xi():
    rng = make_rng(46)
    ds = Dataset(rng.standard_normal((300, 1)), (1,))
    report = truncated_kl_entropy(ds, EntropyConfig(k=1, truncate=True, delta=0.5))
    flags, xi = report.local.truncated_flags, report.local.xi
    assert np.all(xi[flags] == 0.0)
    assert report.estimate == pytest.approx(float(np.mean(xi)), abs=1e-15)


def test_uniform_entropy_close_to_zero():
    ds = sample(UniformCube(1), 5000, make_rng(47))
    est = kl_entropy(ds, EntropyConfig(k=4)).estimate
    assert abs(est) <= 0.05
    t_est = truncated_kl_entropy(ds, EntropyConfig(k=4, truncate=True, delta=0.5)).estimate
    assert abs(t_est) <= 0.05


@pytest.mark.slow
def test_uniform_bias_shrinks_with_n():
    # absolute bias at N=4096 below absolute bias at N=256, 100 trials, d in {1, 2}
    for d in (1, 2):
        means = {}
        for n in (256, 4096):
            vals = [kl_entropy(sample(UniformCube(d), n, make_rng(48, d, n, t)),
                               EntropyConfig(k=4)).estimate for t in range(100)]
            means[n] = float(np.mean(vals))
        assert abs(means[4096]) < abs(means[256])
