import math

import numpy as np
import pytest
from scipy.stats import norm, t as tdist

from seqcorrect.distributions import (
    RngStream,
    normal_cdf,
    normal_quantile,
    sample_bivariate,
    t_cdf,
    t_quantile,
)
from seqcorrect.model import TrueParams


def test_normal_cdf_center_and_symmetry():
    assert normal_cdf(0.0) == 0.5
    for x in (0.3, 1.0, 2.5, 4.0):
        assert normal_cdf(-x) == pytest.approx(1.0 - normal_cdf(x), abs=1e-15)


def test_normal_cdf_frozen_value():
    assert normal_cdf(1.959964) == pytest.approx(0.9750000009035577, abs=1e-12)


def test_normal_cdf_against_reference_grid():
    xs = np.linspace(-8.0, 8.0, 161)
    for x in xs:
        assert normal_cdf(float(x)) == pytest.approx(norm.cdf(x), abs=1e-13)


def test_normal_quantile_frozen_values():
    assert normal_quantile(0.5) == 0.0
    assert normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-10)
    assert normal_quantile(0.95) == pytest.approx(1.6448536269514722, abs=1e-10)


def test_normal_quantile_round_trip_and_monotone():
    ps = np.linspace(0.001, 0.999, 199)
    prev = -math.inf
    for p in ps:
        x = normal_quantile(float(p))
        assert normal_cdf(x) == pytest.approx(p, abs=1e-10)
        assert x > prev
        prev = x


def test_normal_quantile_rejects_bad_p():
    for p in (0.0, 1.0, -0.5, 2.0):
        with pytest.raises(ValueError):
            normal_quantile(p)


def test_t_cdf_center_and_frozen_value():
    for df in (1.0, 2.0, 14.0, 16.78):
        assert t_cdf(0.0, df) == 0.5
    assert t_cdf(2.144787, 14.0) == pytest.approx(0.9750000145219244, abs=1e-9)


def test_t_cdf_against_reference_grid():
    for df in (1.0, 2.5, 5.0, 14.0, 16.78, 100.0, 1000.0):
        for x in (-6.0, -2.1, -0.5, 0.3, 1.0, 2.144787, 4.5):
            assert t_cdf(x, df) == pytest.approx(tdist.cdf(x, df), abs=1e-10)


def test_t_cdf_normal_limit():
    for x in (-2.0, -0.5, 0.7, 1.96):
        assert t_cdf(x, 1e8) == pytest.approx(normal_cdf(x), abs=1e-6)


def test_t_cdf_rejects_bad_df():
    with pytest.raises(ValueError):
        t_cdf(1.0, 0.0)
    with pytest.raises(ValueError):
        t_cdf(1.0, -3.0)


def test_t_quantile_frozen_values():
    assert t_quantile(0.5, 7.0) == 0.0
    assert t_quantile(0.975, 14.0) == pytest.approx(2.1447866879169273, abs=1e-8)
    assert t_quantile(0.975, 1e8) == pytest.approx(1.959964, abs=1e-4)


def test_t_quantile_round_trips():
    ps = [0.01, 0.05, 0.1, 0.25, 0.4, 0.6, 0.75, 0.9, 0.95, 0.99]
    for df in (1.0, 2.0, 5.0, 14.0, 16.78, 100.0):
        for p in ps:
            x = t_quantile(p, df)
            assert t_cdf(x, df) == pytest.approx(p, abs=1e-7)


def test_t_quantile_monotone_in_p():
    for df in (3.0, 19.0):
        qs = [t_quantile(p, df) for p in np.linspace(0.02, 0.98, 49)]
        assert all(a < b for a, b in zip(qs, qs[1:]))


def test_t_quantile_rejects_bad_args():
    with pytest.raises(ValueError):
        t_quantile(0.0, 5.0)
    with pytest.raises(ValueError):
        t_quantile(0.5, -1.0)


def test_stream_determinism_bit_exact():
    a = RngStream(12345, 17).normal_pairs(64)
    b = RngStream(12345, 17).normal_pairs(64)
    assert np.array_equal(a, b)


def test_stream_block_size_does_not_change_sequence():
    chunky = RngStream(9, 2)
    scalar = RngStream(9, 2)
    stacked = chunky.normal_pairs(8).ravel()
    singles = np.concatenate([scalar.normal_pairs(1).ravel() for _ in range(8)])
    assert np.array_equal(stacked, singles)


def test_distinct_stream_ids_differ():
    a = RngStream(5, 0).normal_pairs(4)
    b = RngStream(5, 1).normal_pairs(4)
    assert not np.array_equal(a, b)


def test_stream_rejects_negative_ids():
    with pytest.raises(ValueError):
        RngStream(-1, 0)
    with pytest.raises(ValueError):
        RngStream(0, -2)


def test_sample_bivariate_degenerate_correlation():
    params = TrueParams(0.5, -1.0, 2.0, 0.4, 1.0)
    rng = RngStream(3, 0)
    for _ in range(20):
        x1, x2 = sample_bivariate(rng, params)
        z1 = (x1 - params.theta1) / params.sigma1
        z2 = (x2 - params.theta2) / params.sigma2
        assert z1 == pytest.approx(z2, abs=1e-12)


@pytest.mark.parametrize("gamma", [0.0, 0.8])
def test_sample_bivariate_correlation(gamma):
    params = TrueParams(0.0, 0.0, 1.0, 1.0, gamma)
    rng = RngStream(42, 9)
    draws = np.array([sample_bivariate(rng, params) for _ in range(100_000)])
    got = np.corrcoef(draws[:, 0], draws[:, 1])[0, 1]
    assert got == pytest.approx(gamma, abs=0.01)


def test_sample_bivariate_moments():
    params = TrueParams(0.3, -0.7, 1.5, 0.5, 0.4)
    rng = RngStream(8, 1)
    draws = np.array([sample_bivariate(rng, params) for _ in range(100_000)])
    n = len(draws)
    # 4 standard errors for each moment estimate
    assert draws[:, 0].mean() == pytest.approx(0.3, abs=4 * 1.5 / math.sqrt(n))
    assert draws[:, 1].mean() == pytest.approx(-0.7, abs=4 * 0.5 / math.sqrt(n))
    assert draws[:, 0].var(ddof=1) == pytest.approx(2.25, abs=4 * 2.25 * math.sqrt(2 / n))
    assert draws[:, 1].var(ddof=1) == pytest.approx(0.25, abs=4 * 0.25 * math.sqrt(2 / n))
