"""Stopping designs: truncated SPRT, repeated significance test, triangular
test with overshoot-corrected boundaries, and a degenerate fixed-sample
design used as a calibration control.

A design stops the first time ``n * q(theta1_hat_n) >= a`` for its shape
function q, subject to an initial size m0 and a truncation size m_max.  The
triangular test looks only at multiples of its group size and carries the
overshoot constant inside its boundaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

from .distributions import RngStream, bivariate_from_normals
from .model import SufficientStats, TrueParams, accumulate

__all__ = [
    "DesignKind",
    "Verdict",
    "DesignSpec",
    "StopDecision",
    "TrialResult",
    "q_value",
    "rho",
    "rho10",
    "should_stop",
    "run_trial",
    "run_trial_on_data",
]

# Observations are drawn from the stream in blocks of this many pairs; the
# value only affects how many unused draws are discarded, never the result.
_BLOCK = 64


class DesignKind(Enum):
    SPRT = "sprt"
    RST = "rst"
    TRIANGULAR = "triangular"
    FIXED = "fixed"


class Verdict(Enum):
    REJECT_H0 = "reject_h0"
    ACCEPT_H0 = "accept_h0"
    TRUNCATED_AT_MAX = "truncated_at_max"
    NOT_APPLICABLE = "not_applicable"


@dataclass(frozen=True)
class DesignSpec:
    """A fully derived stopping design.

    Build instances through the factory classmethods, which validate the
    parameters and derive m0 and m_max.  For the triangular design,
    ``monitor_sigma1`` is the constant used to standardize the partial sum
    in the boundary statistic; ``None`` means the running estimate with
    divisor n-1 is recomputed at each look.
    """

    kind: DesignKind
    a: float
    m0: int
    m_max: int
    eps: float | None = None
    eps0: float | None = None
    b: float | None = None
    group: int | None = None
    overshoot: float = 0.583
    monitor_sigma1: float | None = None

    @classmethod
    def sprt(cls, a: float, eps: float, eps0: float) -> "DesignSpec":
        """Truncated SPRT: q(y) = |y|, equivalent to stopping on |S_n| >= a."""
        m0, m_max = cls._sizes(a, eps, eps0)
        return cls(kind=DesignKind.SPRT, a=a, m0=m0, m_max=m_max, eps=eps, eps0=eps0)

    @classmethod
    def rst(cls, a: float, eps: float, eps0: float) -> "DesignSpec":
        """Repeated significance test: q(y) = y^2, i.e. |S_n| >= sqrt(n a)."""
        m0, m_max = cls._sizes(a, eps, eps0)
        return cls(kind=DesignKind.RST, a=a, m0=m0, m_max=m_max, eps=eps, eps0=eps0)

    @classmethod
    def triangular(
        cls,
        a: float,
        b: float,
        group: int = 2,
        overshoot: float = 0.583,
        monitor_sigma1: float | None = None,
    ) -> "DesignSpec":
        """One-sided triangular test with group looks and overshoot correction."""
        if not a >= 1:
            raise ValueError(f"boundary parameter a must be >= 1, got {a}")
        if not b > 0:
            raise ValueError(f"slope b must be > 0, got {b}")
        if not (isinstance(group, int) and group >= 2):
            raise ValueError(f"group size must be an integer >= 2, got {group}")
        if monitor_sigma1 is not None and not monitor_sigma1 > 0:
            raise ValueError("monitor_sigma1 must be > 0 when given")
        # The upper and lower boundaries meet near n = (a - overshoot)/b, so
        # the first group look at or past that point closes the design.
        m_max = group * math.ceil(((a - overshoot) / b) / group)
        return cls(
            kind=DesignKind.TRIANGULAR,
            a=a,
            m0=group,
            m_max=m_max,
            b=b,
            group=group,
            overshoot=overshoot,
            monitor_sigma1=monitor_sigma1,
        )

    @classmethod
    def fixed_sample(cls, n: int) -> "DesignSpec":
        """Degenerate design that always stops at exactly n observations.

        The stopping boundary is never crossed and the shape function is
        identically zero, so all sequential correction terms vanish.
        """
        if not (isinstance(n, int) and n >= 2):
            raise ValueError(f"fixed sample size must be an integer >= 2, got {n}")
        return cls(kind=DesignKind.FIXED, a=float(n), m0=n, m_max=n)

    @staticmethod
    def _sizes(a: float, eps: float, eps0: float) -> tuple[int, int]:
        if not a >= 1:
            raise ValueError(f"boundary parameter a must be >= 1, got {a}")
        if not 0 < eps < eps0:
            raise ValueError(
                f"need 0 < eps < eps0 (truncation below initial-size parameter), "
                f"got eps={eps}, eps0={eps0}"
            )
        # Nudge before flooring: squaring a square root can land an exact
        # ratio like 10/5 an ulp below its integer value.
        m0 = math.floor(a / (eps0 * eps0) + 1e-9)
        m_max = math.floor(a / (eps * eps) + 1e-9)
        if m0 < 2:
            raise ValueError(
                f"initial size m0 = floor(a/eps0^2) = {m0} must be >= 2 "
                f"(variance estimates need two observations)"
            )
        if m_max <= m0:
            raise ValueError(f"truncation size m_max={m_max} must exceed m0={m0}")
        return m0, m_max


@dataclass(frozen=True)
class StopDecision:
    stopped: bool
    n: int
    verdict: Verdict


@dataclass(frozen=True)
class TrialResult:
    n: int
    stats: SufficientStats
    verdict: Verdict


def q_value(design: DesignSpec, y: float) -> float:
    """The design's boundary shape function q evaluated at y."""
    kind = design.kind
    if kind is DesignKind.SPRT:
        return abs(y)
    if kind is DesignKind.RST:
        return y * y
    if kind is DesignKind.TRIANGULAR:
        b = design.b
        return max(y - b, 3.0 * b - y)
    return 0.0  # FIXED: boundary never crossed


def rho(design: DesignSpec, theta1: float, sigma1: float | None = None) -> float:
    """Limit of sqrt(a/N) at the given primary mean; always positive.

    ``sigma1`` is used only by the triangular design, whose shape function
    acts on theta1/sigma1.
    """
    kind = design.kind
    if kind is DesignKind.SPRT:
        return max(min(design.eps0, math.sqrt(abs(theta1))), design.eps)
    if kind is DesignKind.RST:
        return max(min(design.eps0, abs(theta1)), design.eps)
    if kind is DesignKind.TRIANGULAR:
        if sigma1 is None or not sigma1 > 0:
            raise ValueError("triangular rho requires sigma1 > 0")
        return math.sqrt(q_value(design, theta1 / sigma1))
    return 1.0  # FIXED: a/N = 1 by construction (a = n)


def rho10(design: DesignSpec, theta1: float, sigma1: float | None = None) -> float:
    """Derivative of ``rho`` with respect to theta1.

    Exactly zero on the clamp plateaus of the SPRT and RST designs.  At the
    non-differentiable points the one-sided conventions are used: plateaus
    win at their boundaries, and the triangular kink at y = 2b takes the
    ascending branch.  The return value can be an infinite sentinel for
    degenerate inputs; the correction caps absorb it downstream.
    """
    kind = design.kind
    at = abs(theta1)
    if kind is DesignKind.SPRT:
        if design.eps ** 2 < at < design.eps0 ** 2:
            return math.copysign(1.0, theta1) / (2.0 * math.sqrt(at))
        return 0.0
    if kind is DesignKind.RST:
        if design.eps < at < design.eps0:
            return math.copysign(1.0, theta1)
        return 0.0
    if kind is DesignKind.TRIANGULAR:
        if sigma1 is None or not sigma1 > 0:
            raise ValueError("triangular rho10 requires sigma1 > 0")
        y = theta1 / sigma1
        qprime = 1.0 if y >= 2.0 * design.b else -1.0
        return qprime / (2.0 * sigma1 * math.sqrt(q_value(design, y)))
    return 0.0  # FIXED: rho is constant


def _running_sigma1(stats: SufficientStats) -> float:
    css = max(stats.s11 - stats.s1 * stats.s1 / stats.n, 0.0)
    return math.sqrt(css / (stats.n - 1))


def _triangular_decision(design: DesignSpec, n: int, s1: float, sigma: float) -> StopDecision:
    if sigma > 0:
        t = s1 / sigma
    else:
        t = math.copysign(math.inf, s1) if s1 != 0.0 else 0.0
    a, b, osc = design.a, design.b, design.overshoot
    if n == design.m_max:
        # Forced final look; the boundaries have met, decide by the midline.
        verdict = Verdict.REJECT_H0 if t >= 2.0 * b * n else Verdict.ACCEPT_H0
        return StopDecision(True, n, verdict)
    if t >= a + b * n - osc:
        return StopDecision(True, n, Verdict.REJECT_H0)
    if t <= -a + 3.0 * b * n + osc:
        return StopDecision(True, n, Verdict.ACCEPT_H0)
    return StopDecision(False, n, Verdict.NOT_APPLICABLE)


def should_stop(design: DesignSpec, n: int, stats: SufficientStats) -> StopDecision:
    """Evaluate the stopping rule at look n.

    ``stats`` must contain exactly the first n observations.
    """
    if n != stats.n:
        raise ValueError(f"look index n={n} does not match stats.n={stats.n}")
    if n < 1:
        raise ValueError("should_stop requires n >= 1")
    kind = design.kind
    if kind is DesignKind.FIXED:
        if n >= design.m_max:
            return StopDecision(True, n, Verdict.TRUNCATED_AT_MAX)
        return StopDecision(False, n, Verdict.NOT_APPLICABLE)
    if kind is DesignKind.TRIANGULAR:
        if n % design.group != 0:
            return StopDecision(False, n, Verdict.NOT_APPLICABLE)
        if design.monitor_sigma1 is not None:
            sigma = design.monitor_sigma1
        else:
            if n < 2:
                raise ValueError("running sigma1 estimate undefined for n < 2")
            sigma = _running_sigma1(stats)
        return _triangular_decision(design, n, stats.s1, sigma)
    # SPRT / RST monitor continuously from m0 on.
    if n < design.m0:
        return StopDecision(False, n, Verdict.NOT_APPLICABLE)
    crossed = n * q_value(design, stats.s1 / n) >= design.a
    if crossed:
        return StopDecision(True, n, Verdict.REJECT_H0)
    if n >= design.m_max:
        return StopDecision(True, n, Verdict.TRUNCATED_AT_MAX)
    return StopDecision(False, n, Verdict.NOT_APPLICABLE)


def run_trial_on_data(
    design: DesignSpec, observations: Iterable[tuple[float, float]]
) -> TrialResult:
    """Run the stopping rule over explicit observations.

    Raises if the data are exhausted before the design stops; supplying at
    least m_max observations guarantees completion.
    """
    stats = SufficientStats.empty()
    for x1, x2 in observations:
        stats = accumulate(stats, x1, x2)
        decision = should_stop(design, stats.n, stats)
        if decision.stopped:
            return TrialResult(stats.n, stats, decision.verdict)
    raise ValueError(
        f"data exhausted after {stats.n} observations without stopping "
        f"(m_max={design.m_max})"
    )


def _generated(params: TrueParams, rng: RngStream) -> Iterator[tuple[float, float]]:
    while True:
        block = rng.normal_pairs(_BLOCK)
        for z1, z2 in block.tolist():
            yield bivariate_from_normals(params, z1, z2)


def run_trial(design: DesignSpec, params: TrueParams, rng: RngStream) -> TrialResult:
    """Sample one trial: draw observations until the design stops.

    The returned N is the first qualifying look and the sufficient
    statistics contain exactly N observations.  The hot loop keeps the six
    sums in locals and evaluates the same boundary arithmetic as
    ``should_stop``; the equivalence is pinned by replay tests.
    """
    kind = design.kind
    a, m0, m_max = design.a, design.m0, design.m_max
    group = design.group
    mon_sigma = design.monitor_sigma1
    th1, th2 = params.theta1, params.theta2
    sd1, sd2 = params.sigma1, params.sigma2
    g = params.gamma
    croot = math.sqrt(1.0 - g * g)
    n = 0
    s1 = s2 = s11 = s22 = s12 = 0.0
    while True:
        block = rng.normal_pairs(_BLOCK)
        for z1, z2 in block.tolist():
            x1 = th1 + sd1 * z1
            x2 = th2 + sd2 * (g * z1 + croot * z2)
            n += 1
            s1 += x1
            s2 += x2
            s11 += x1 * x1
            s22 += x2 * x2
            s12 += x1 * x2
            verdict = None
            if kind is DesignKind.TRIANGULAR:
                if n % group == 0:
                    if mon_sigma is not None:
                        sigma = mon_sigma
                    else:
                        sigma = math.sqrt(max(s11 - s1 * s1 / n, 0.0) / (n - 1))
                    decision = _triangular_decision(design, n, s1, sigma)
                    if decision.stopped:
                        verdict = decision.verdict
            elif kind is DesignKind.FIXED:
                if n >= m_max:
                    verdict = Verdict.TRUNCATED_AT_MAX
            else:
                if n >= m0:
                    if n * q_value(design, s1 / n) >= a:
                        verdict = Verdict.REJECT_H0
                    elif n >= m_max:
                        verdict = Verdict.TRUNCATED_AT_MAX
            if verdict is not None:
                stats = SufficientStats(n, s1, s2, s11, s22, s12)
                return TrialResult(n, stats, verdict)
