"""Distribution numerics and seeded sampling.

Self-contained standard normal and Student-t CDFs/quantiles (the t family
supports real-valued degrees of freedom, needed for effective-sample-size
degrees of freedom), plus reproducible substream-based bivariate normal
sampling.

Accuracy targets: normal_cdf <= 1e-12 absolute, normal_quantile <= 1e-10,
t_cdf <= 1e-10, t_quantile <= 1e-8.
"""
from __future__ import annotations

import math

import numpy as np

from .model import TrueParams

__all__ = [
    "normal_cdf",
    "normal_quantile",
    "t_cdf",
    "t_quantile",
    "RngStream",
    "sample_bivariate",
    "bivariate_from_normals",
]

_SQRT2 = math.sqrt(2.0)
_EPS = 2.220446049250313e-16  # 2**-52


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / _SQRT2)


# Acklam's rational approximation for the inverse normal CDF; the Halley
# refinement below brings it to full double precision.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF, monotone in p on (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"normal_quantile requires 0 < p < 1, got {p}")
    p_low, p_high = 0.02425, 1 - 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    elif p <= p_high:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    # One Halley step against the exact CDF.
    e = normal_cdf(x) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    return x


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the regularized incomplete beta (Lentz)."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 400):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 10.0 * _EPS:
            break
    return h


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("incomplete beta requires a, b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # Use the expansion that converges fastest, switching at the mean.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(x: float, df: float) -> float:
    """Student-t CDF with real-valued df, via the incomplete beta."""
    if not df > 0:
        raise ValueError(f"t_cdf requires df > 0, got {df}")
    if x == 0.0:
        return 0.5
    if math.isinf(x):
        return 0.0 if x < 0 else 1.0
    xb = df / (df + x * x)
    tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, xb)
    return 1.0 - tail if x > 0 else tail


def t_quantile(p: float, df: float) -> float:
    """Inverse Student-t CDF by bracketed bisection with secant polish."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"t_quantile requires 0 < p < 1, got {p}")
    if not df > 0:
        raise ValueError(f"t_quantile requires df > 0, got {df}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_quantile(1.0 - p, df)
    lo, hi = 0.0, max(2.0, normal_quantile(p) * 2.0)
    while t_cdf(hi, df) < p:
        lo = hi
        hi *= 2.0
        if hi > 1e300:
            raise ArithmeticError("t_quantile bracket expansion failed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


class RngStream:
    """Seeded, replicate-addressable random number stream.

    The pair (seed, stream_id) fully determines the sequence; distinct
    stream ids give statistically independent substreams regardless of the
    order in which they are consumed.  Each instance owns its generator and
    must not be shared between concurrent consumers.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([self.seed, self.stream_id]))
        )

    def normal_pairs(self, count: int) -> np.ndarray:
        """Next ``count`` pairs of independent standard normals, shape (count, 2)."""
        return self._gen.standard_normal((count, 2))

    def normal_pair(self) -> tuple[float, float]:
        z = self._gen.standard_normal(2)
        return float(z[0]), float(z[1])


def bivariate_from_normals(params: TrueParams, z1: float, z2: float) -> tuple[float, float]:
    """Map two independent standard normals to one bivariate observation."""
    g = params.gamma
    x1 = params.theta1 + params.sigma1 * z1
    x2 = params.theta2 + params.sigma2 * (g * z1 + math.sqrt(1.0 - g * g) * z2)
    return x1, x2


def sample_bivariate(rng: RngStream, params: TrueParams) -> tuple[float, float]:
    """Draw one observation from the bivariate normal model."""
    z1, z2 = rng.normal_pair()
    return bivariate_from_normals(params, z1, z2)
