"""Bivariate normal data model: streaming sufficient statistics, parameter
estimates, and the joint log-density.

All values are immutable; every operation is a pure function of its inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "TrueParams",
    "SufficientStats",
    "Estimates",
    "accumulate",
    "estimates",
    "log_density",
]


@dataclass(frozen=True)
class TrueParams:
    """True parameters of the bivariate normal process.

    ``theta1`` is the monitored (primary) mean, ``theta2`` the secondary
    mean that is the inference target.  ``gamma`` is the correlation of the
    two components.  ``gamma = +/-1`` is accepted so the degenerate sampler
    can be exercised, but density evaluation requires ``|gamma| < 1``.
    """

    theta1: float
    theta2: float
    sigma1: float
    sigma2: float
    gamma: float

    def __post_init__(self) -> None:
        if not self.sigma1 > 0:
            raise ValueError(f"sigma1 must be > 0, got {self.sigma1}")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be > 0, got {self.sigma2}")
        if not -1.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [-1, 1], got {self.gamma}")


@dataclass(frozen=True)
class SufficientStats:
    """Running sums for both components.

    Stores raw (uncentered) sums; centered quantities are formed on demand.
    """

    n: int
    s1: float  # sum of x1
    s2: float  # sum of x2
    s11: float  # sum of x1^2
    s22: float  # sum of x2^2
    s12: float  # sum of x1*x2

    @classmethod
    def empty(cls) -> "SufficientStats":
        return cls(0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def centered(self, theta1: float, theta2: float) -> tuple[float, float, float]:
        """Sums of squares and cross-products about the given means.

        Returns (sum (x1-theta1)^2, sum (x2-theta2)^2,
        sum (x1-theta1)(x2-theta2)).
        """
        a1 = self.s11 - 2.0 * theta1 * self.s1 + self.n * theta1 * theta1
        a2 = self.s22 - 2.0 * theta2 * self.s2 + self.n * theta2 * theta2
        cx = (
            self.s12
            - theta1 * self.s2
            - theta2 * self.s1
            + self.n * theta1 * theta2
        )
        return a1, a2, cx


@dataclass(frozen=True)
class Estimates:
    """Parameter estimates computed from ``SufficientStats`` at n >= 2."""

    theta1_hat: float
    theta2_hat: float
    sigma1_sq_hat: float
    sigma2_sq_hat: float
    gamma_hat: float
    n: int


def accumulate(stats: SufficientStats, x1: float, x2: float) -> SufficientStats:
    """Add one bivariate observation to the running sums."""
    return SufficientStats(
        stats.n + 1,
        stats.s1 + x1,
        stats.s2 + x2,
        stats.s11 + x1 * x1,
        stats.s22 + x2 * x2,
        stats.s12 + x1 * x2,
    )


def estimates(stats: SufficientStats) -> Estimates:
    """Means, variances (divisor n-1) and sample correlation.

    The correlation is defined as 0 when either centered sum of squares is
    zero, which keeps downstream correction terms finite for degenerate
    samples.  Rounding can push the centered sums a hair negative or the
    correlation a hair outside [-1, 1]; both are clamped.
    """
    n = stats.n
    if n < 2:
        raise ValueError(f"estimates require n >= 2, got n={n}")
    theta1_hat = stats.s1 / n
    theta2_hat = stats.s2 / n
    css1 = max(stats.s11 - stats.s1 * stats.s1 / n, 0.0)
    css2 = max(stats.s22 - stats.s2 * stats.s2 / n, 0.0)
    csx = stats.s12 - stats.s1 * stats.s2 / n
    if css1 > 0.0 and css2 > 0.0:
        gamma_hat = csx / math.sqrt(css1 * css2)
        gamma_hat = max(-1.0, min(1.0, gamma_hat))
    else:
        gamma_hat = 0.0
    return Estimates(
        theta1_hat=theta1_hat,
        theta2_hat=theta2_hat,
        sigma1_sq_hat=css1 / (n - 1),
        sigma2_sq_hat=css2 / (n - 1),
        gamma_hat=gamma_hat,
        n=n,
    )


_LOG_2PI = 1.8378770664093453


def log_density(params: TrueParams, stats: SufficientStats) -> float:
    """Joint log-density of the n observations summarised by ``stats``.

    The quadratic form of the bivariate normal likelihood expands exactly in
    the six sufficient statistics, so no per-observation data are needed.
    Requires ``|gamma| < 1`` and at least one observation.
    """
    n = stats.n
    if n < 1:
        raise ValueError("log_density requires at least one observation")
    g = params.gamma
    if not -1.0 < g < 1.0:
        raise ValueError(f"log_density requires |gamma| < 1, got {g}")
    v1 = params.sigma1 * params.sigma1
    v2 = params.sigma2 * params.sigma2
    one_minus_g2 = 1.0 - g * g
    a1, a2, cx = stats.centered(params.theta1, params.theta2)
    quad = v2 * a1 + v1 * a2 - 2.0 * g * params.sigma1 * params.sigma2 * cx
    return (
        -n * _LOG_2PI
        - 0.5 * n * math.log(v1 * v2 * one_minus_g2)
        - quad / (2.0 * v1 * v2 * one_minus_g2)
    )
