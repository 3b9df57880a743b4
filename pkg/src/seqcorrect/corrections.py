"""Correction terms for pivots after optional stopping.

The naive secondary pivot sqrt(N)(theta2 - theta2_hat)/sigma2 is biased by
the stopping rule.  The first-order mean and variance adjustments are
kappa = -sigma1 * gamma * rho10 and m = kappa^2, plugged in through capped
estimates mu_hat and tau_hat whose thresholds keep the corrections stable
when the plug-in kappa blows up.

Cases for the unknown-covariance configurations:
  C0  all of sigma1, sigma2, gamma known
  C1  sigma1, sigma2 known, gamma estimated
  C2  gamma known, sigmas estimated
  C3  everything estimated
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .designs import DesignKind, DesignSpec, rho, rho10
from .model import Estimates

__all__ = [
    "Case",
    "DfMode",
    "RhoSigma1",
    "KnownParams",
    "Correction",
    "PivotValue",
    "kappa_primary",
    "kappa_secondary",
    "m_value",
    "mu_hat",
    "tau_hat",
    "raw_pivot_secondary",
    "corrected_pivot",
    "build_correction",
    "build_primary_correction",
]


class Case(Enum):
    C0 = "c0"
    C1 = "c1"
    C2 = "c2"
    C3 = "c3"


class DfMode(Enum):
    NORMAL = "normal"
    STUDENT_N = "n"
    STUDENT_A_RHO = "arho"


class RhoSigma1(Enum):
    """Which sigma1 enters the stopping-rate terms rho and rho10.

    The triangular design's rho involves sigma1; its corrections are
    calibrated with the underlying (true) value there while the multiplier
    in kappa uses the case-appropriate estimate.  For the SPRT and RST
    designs rho does not involve sigma1 and the choice is inert.
    """

    TRUE_VALUE = "true_value"
    ESTIMATED = "estimated"


@dataclass(frozen=True)
class KnownParams:
    """Known parameter slots for the cases that require them."""

    sigma1: float | None = None
    sigma2: float | None = None
    gamma: float | None = None


@dataclass(frozen=True)
class Correction:
    kappa_hat: float
    m_hat: float
    mu_hat: float
    tau_hat: float
    case: Case
    a: float
    n: int
    rho_hat: float
    df_arho: float


@dataclass(frozen=True)
class PivotValue:
    z: float
    df_mode: DfMode
    df: float


def kappa_primary(sigma1: float, rho10_value: float) -> float:
    """Mean-correction coefficient for the primary pivot: -sigma1 * rho10."""
    if not sigma1 > 0:
        raise ValueError(f"sigma1 must be > 0, got {sigma1}")
    return -sigma1 * rho10_value


def kappa_secondary(sigma1: float, gamma: float, rho10_value: float) -> float:
    """Mean-correction coefficient for the secondary pivot: -sigma1*gamma*rho10.

    gamma = 0 short-circuits to exactly 0 so that an infinite rho10 sentinel
    from a degenerate sample cannot poison the product.
    """
    if not sigma1 >= 0:
        raise ValueError(f"sigma1 must be >= 0, got {sigma1}")
    if not -1.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [-1, 1], got {gamma}")
    if gamma == 0.0:
        return 0.0
    value = -sigma1 * gamma * rho10_value
    # 0 * inf: the variance factor vanishes faster than the rate term grows.
    return 0.0 if math.isnan(value) else value


def m_value(kappa: float) -> float:
    """Variance-correction coefficient: kappa squared, infinity preserved."""
    if math.isinf(kappa):
        return math.inf
    return kappa * kappa


def _mu_threshold(a: float) -> tuple[float, float]:
    la = math.log(a)
    if la == 0.0:
        return math.inf, math.inf
    return a ** (1.0 / 6.0) / la, a ** (-1.0 / 3.0) / la


def mu_hat(kappa_hat: float, a: float) -> float:
    """Capped mean adjustment.

    kappa_hat/sqrt(a) while |kappa_hat| stays below a^(1/6)/log(a); beyond
    that, the sign-matched cap a^(-1/3)/log(a).  Both branches agree at the
    threshold.  Infinite sentinels take the cap branch.
    """
    if not a >= 1:
        raise ValueError(f"boundary parameter a must be >= 1, got {a}")
    threshold, cap = _mu_threshold(a)
    if abs(kappa_hat) <= threshold:
        return kappa_hat / math.sqrt(a)
    return math.copysign(cap, kappa_hat)


def tau_hat(m_hat: float, a: float) -> float:
    """Capped variance adjustment: sqrt(1 + m_hat/a) below sqrt(a)/log(a), else 1."""
    if not a >= 1:
        raise ValueError(f"boundary parameter a must be >= 1, got {a}")
    if not math.isfinite(m_hat):
        return 1.0
    la = math.log(a)
    threshold = math.inf if la == 0.0 else math.sqrt(a) / la
    if abs(m_hat) <= threshold:
        return math.sqrt(1.0 + m_hat / a)
    return 1.0


def raw_pivot_secondary(theta2: float, est: Estimates, sigma2_slot: float) -> float:
    """sqrt(N)(theta2 - theta2_hat) / sigma2_slot.

    The slot is the true sigma2 for cases C0/C1 and the estimate for C2/C3.
    """
    if est.n < 2:
        raise ValueError("secondary pivot requires n >= 2")
    if not sigma2_slot > 0:
        raise ValueError(f"sigma2 slot must be > 0, got {sigma2_slot}")
    return math.sqrt(est.n) * (theta2 - est.theta2_hat) / sigma2_slot


def corrected_pivot(
    raw: float, corr: Correction, df_mode: DfMode | None = None
) -> PivotValue:
    """Renormalise a raw pivot: z = (raw - mu_hat) / tau_hat.

    The default reference distribution is standard normal for cases C0/C1
    and Student-t with the replicate's N degrees of freedom for C2/C3; the
    effective-sample-size mode uses a/rho_hat^2 degrees of freedom.
    """
    if not corr.tau_hat > 0:
        raise ValueError("tau_hat must be positive")
    if df_mode is None:
        df_mode = DfMode.NORMAL if corr.case in (Case.C0, Case.C1) else DfMode.STUDENT_N
    if df_mode is DfMode.NORMAL:
        df = math.inf
    elif df_mode is DfMode.STUDENT_N:
        df = float(corr.n)
    else:
        df = corr.df_arho
    return PivotValue(z=(raw - corr.mu_hat) / corr.tau_hat, df_mode=df_mode, df=df)


def _require(known: KnownParams, case: Case, *slots: str) -> None:
    for slot in slots:
        if getattr(known, slot) is None:
            raise ValueError(f"case {case.value} requires known parameter '{slot}'")


def _rho_sigma1_value(
    design: DesignSpec,
    est: Estimates,
    known: KnownParams,
    source: RhoSigma1,
) -> float | None:
    if design.kind is not DesignKind.TRIANGULAR:
        return None
    if source is RhoSigma1.TRUE_VALUE and known.sigma1 is not None:
        return known.sigma1
    return math.sqrt(est.sigma1_sq_hat)


def default_rho_sigma1(design: DesignSpec) -> RhoSigma1:
    """Triangular corrections keep the underlying sigma1 inside rho."""
    if design.kind is DesignKind.TRIANGULAR:
        return RhoSigma1.TRUE_VALUE
    return RhoSigma1.ESTIMATED


def build_correction(
    case: Case,
    design: DesignSpec,
    est: Estimates,
    known: KnownParams | None = None,
    rho_sigma1: RhoSigma1 | None = None,
) -> Correction:
    """Assemble the secondary-parameter correction for the given case.

    rho10 is evaluated at theta1_hat; the sigma1 multiplying it in kappa is
    the true value for C0/C1 and the estimate for C2/C3, while the sigma1
    inside rho follows the ``rho_sigma1`` policy (triangular only).
    """
    known = known or KnownParams()
    if rho_sigma1 is None:
        rho_sigma1 = default_rho_sigma1(design)
    if case is Case.C0:
        _require(known, case, "sigma1", "sigma2", "gamma")
    elif case is Case.C1:
        _require(known, case, "sigma1", "sigma2")
    elif case is Case.C2:
        _require(known, case, "gamma")

    sigma_for_rho = _rho_sigma1_value(design, est, known, rho_sigma1)
    rho10_hat = rho10(design, est.theta1_hat, sigma_for_rho)
    rho_hat = rho(design, est.theta1_hat, sigma_for_rho)

    if case in (Case.C0, Case.C1):
        sigma1 = known.sigma1
    else:
        sigma1 = math.sqrt(est.sigma1_sq_hat)
    gamma = known.gamma if case in (Case.C0, Case.C2) else est.gamma_hat

    kappa = kappa_secondary(sigma1, gamma, rho10_hat)
    m = m_value(kappa)
    df_arho = design.a / (rho_hat * rho_hat)
    if not (math.isfinite(df_arho) and df_arho > 0):
        df_arho = float(est.n)  # degenerate rho estimate; fall back to N
    return Correction(
        kappa_hat=kappa,
        m_hat=m,
        mu_hat=mu_hat(kappa, design.a),
        tau_hat=tau_hat(m, design.a),
        case=case,
        a=design.a,
        n=est.n,
        rho_hat=rho_hat,
        df_arho=df_arho,
    )


def build_primary_correction(
    design: DesignSpec,
    est: Estimates,
    sigma1: float,
    rho_sigma1: RhoSigma1 | None = None,
) -> Correction:
    """Correction for the primary-parameter pivot (known sigma1).

    Uses kappa = -sigma1 * rho10; the reference distribution is normal.
    """
    if rho_sigma1 is None:
        rho_sigma1 = default_rho_sigma1(design)
    known = KnownParams(sigma1=sigma1)
    sigma_for_rho = _rho_sigma1_value(design, est, known, rho_sigma1)
    rho10_hat = rho10(design, est.theta1_hat, sigma_for_rho)
    rho_hat = rho(design, est.theta1_hat, sigma_for_rho)
    kappa = kappa_primary(sigma1, rho10_hat)
    m = m_value(kappa)
    df_arho = design.a / (rho_hat * rho_hat)
    if not (math.isfinite(df_arho) and df_arho > 0):
        df_arho = float(est.n)
    return Correction(
        kappa_hat=kappa,
        m_hat=m,
        mu_hat=mu_hat(kappa, design.a),
        tau_hat=tau_hat(m, design.a),
        case=Case.C0,
        a=design.a,
        n=est.n,
        rho_hat=rho_hat,
        df_arho=df_arho,
    )
