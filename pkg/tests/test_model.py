import math

import numpy as np
import pytest

from seqcorrect.model import (
    SufficientStats,
    TrueParams,
    accumulate,
    estimates,
    log_density,
)

LOG_2PI = 1.8378770664093453


def from_points(points):
    stats = SufficientStats.empty()
    for x1, x2 in points:
        stats = accumulate(stats, x1, x2)
    return stats


def test_accumulate_single_point():
    stats = accumulate(SufficientStats.empty(), 1.0, 2.0)
    assert stats == SufficientStats(1, 1.0, 2.0, 1.0, 4.0, 2.0)


def test_accumulate_zero_point():
    stats = accumulate(SufficientStats.empty(), 0.0, 0.0)
    assert stats == SufficientStats(1, 0.0, 0.0, 0.0, 0.0, 0.0)


def test_accumulate_twice():
    stats = from_points([(0.0, 0.0), (2.0, 2.0)])
    assert stats == SufficientStats(2, 2.0, 2.0, 4.0, 4.0, 4.0)


def test_estimates_perfectly_correlated_pair():
    est = estimates(from_points([(0.0, 0.0), (2.0, 2.0)]))
    assert est.theta1_hat == 1.0
    assert est.theta2_hat == 1.0
    assert est.sigma1_sq_hat == pytest.approx(2.0)
    assert est.sigma2_sq_hat == pytest.approx(2.0)
    assert est.gamma_hat == pytest.approx(1.0)


def test_estimates_anti_correlated_pair():
    est = estimates(from_points([(0.0, 1.0), (2.0, -1.0)]))
    assert est.theta1_hat == 1.0
    assert est.theta2_hat == 0.0
    assert est.gamma_hat == pytest.approx(-1.0)


def test_estimates_degenerate_second_component():
    est = estimates(from_points([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]))
    assert est.sigma2_sq_hat == 0.0
    assert est.gamma_hat == 0.0


def test_estimates_require_two_points():
    with pytest.raises(ValueError):
        estimates(from_points([(1.0, 1.0)]))
    with pytest.raises(ValueError):
        estimates(SufficientStats.empty())


def test_estimates_order_invariant():
    rng = np.random.default_rng(7)
    points = [(float(a), float(b)) for a, b in rng.normal(size=(40, 2))]
    forward = estimates(from_points(points))
    backward = estimates(from_points(points[::-1]))
    assert forward.theta1_hat == pytest.approx(backward.theta1_hat, abs=1e-12)
    assert forward.sigma1_sq_hat == pytest.approx(backward.sigma1_sq_hat, abs=1e-12)
    assert forward.gamma_hat == pytest.approx(backward.gamma_hat, abs=1e-12)


def test_gamma_hat_bounded():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(2, 40))
        pts = rng.normal(size=(n, 2)) * rng.uniform(0.1, 3.0)
        est = estimates(from_points([(float(a), float(b)) for a, b in pts]))
        assert abs(est.gamma_hat) <= 1.0 + 1e-12


def test_streaming_matches_two_pass():
    rng = np.random.default_rng(3)
    for n in (10, 1000, 10_000):
        data = rng.uniform(-10.0, 10.0, size=(n, 2))
        est = estimates(from_points([(float(a), float(b)) for a, b in data]))
        v1 = np.var(data[:, 0], ddof=1)
        v2 = np.var(data[:, 1], ddof=1)
        assert est.sigma1_sq_hat == pytest.approx(v1, rel=1e-9)
        assert est.sigma2_sq_hat == pytest.approx(v2, rel=1e-9)
        gam = np.corrcoef(data[:, 0], data[:, 1])[0, 1]
        assert est.gamma_hat == pytest.approx(gam, rel=1e-9)


def test_log_density_standard_origin():
    params = TrueParams(0.0, 0.0, 1.0, 1.0, 0.0)
    stats = from_points([(0.0, 0.0)])
    assert log_density(params, stats) == pytest.approx(-LOG_2PI, abs=1e-12)


def test_log_density_correlated_origin():
    params = TrueParams(0.0, 0.0, 1.0, 1.0, 0.5)
    stats = from_points([(0.0, 0.0)])
    assert log_density(params, stats) == pytest.approx(-1.694036030183455, abs=1e-12)


def test_log_density_additive_over_observations():
    params = TrueParams(0.2, -0.1, 1.5, 0.7, 0.3)
    one = from_points([(0.4, 0.2)])
    two = from_points([(0.4, 0.2), (0.4, 0.2)])
    assert log_density(params, two) == pytest.approx(2 * log_density(params, one), rel=1e-12)


def test_log_density_maximized_at_mle():
    rng = np.random.default_rng(5)
    pts = [(float(a), float(b)) for a, b in rng.normal(size=(25, 2))]
    stats = from_points(pts)
    est = estimates(stats)
    base = TrueParams(est.theta1_hat, est.theta2_hat, 1.0, 1.0, 0.3)
    best = log_density(base, stats)
    for d1 in (-1e-3, 0.0, 1e-3):
        for d2 in (-1e-3, 0.0, 1e-3):
            shifted = TrueParams(
                est.theta1_hat + d1, est.theta2_hat + d2, 1.0, 1.0, 0.3
            )
            assert log_density(shifted, stats) <= best + 1e-12


def test_log_density_rejects_degenerate_correlation():
    stats = from_points([(0.0, 0.0)])
    with pytest.raises(ValueError):
        log_density(TrueParams(0.0, 0.0, 1.0, 1.0, 1.0), stats)
    with pytest.raises(ValueError):
        log_density(TrueParams(0.0, 0.0, 1.0, 1.0, 0.2), SufficientStats.empty())


def test_true_params_validation():
    with pytest.raises(ValueError):
        TrueParams(0.0, 0.0, -1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        TrueParams(0.0, 0.0, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        TrueParams(0.0, 0.0, 1.0, 1.0, 1.5)
