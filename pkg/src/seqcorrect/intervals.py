"""Confidence interval construction from corrected and naive pivots."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .corrections import Case, Correction, DfMode
from .distributions import normal_quantile, t_quantile
from .model import Estimates

__all__ = [
    "Method",
    "Interval",
    "ci_primary",
    "ci_secondary_known",
    "ci_secondary_unknown",
    "ci_naive",
]


class Method(Enum):
    NAIVE = "naive"
    CORRECTED_NORMAL = "corrected_normal"
    CORRECTED_STUDENT_N = "corrected_student_n"
    CORRECTED_STUDENT_A_RHO = "corrected_student_arho"


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    level: float
    method: Method


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def _shifted(center: float, scale: float, corr: Correction, half: float) -> tuple[float, float]:
    mid = center + scale * corr.mu_hat
    return mid - half, mid + half


def ci_primary(est: Estimates, sigma1: float, corr: Correction, alpha: float) -> Interval:
    """Corrected interval for the monitored mean, known sigma1.

    Inverts |(sqrt(N)(theta1 - theta1_hat)/sigma1 - mu_hat)/tau_hat| <= z
    into theta1_hat + (sigma1/sqrt(N)) * (mu_hat +/- tau_hat z).
    """
    _check_alpha(alpha)
    if not sigma1 > 0:
        raise ValueError(f"sigma1 must be > 0, got {sigma1}")
    z = normal_quantile(1.0 - alpha / 2.0)
    scale = sigma1 / math.sqrt(est.n)
    lo, hi = _shifted(est.theta1_hat, scale, corr, scale * corr.tau_hat * z)
    return Interval(lo, hi, 1.0 - alpha, Method.CORRECTED_NORMAL)


def ci_secondary_known(
    est: Estimates, sigma2: float, corr: Correction, alpha: float
) -> Interval:
    """Corrected interval for the secondary mean with known sigma2 (C0/C1)."""
    _check_alpha(alpha)
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be > 0, got {sigma2}")
    z = normal_quantile(1.0 - alpha / 2.0)
    scale = sigma2 / math.sqrt(est.n)
    lo, hi = _shifted(est.theta2_hat, scale, corr, scale * corr.tau_hat * z)
    return Interval(lo, hi, 1.0 - alpha, Method.CORRECTED_NORMAL)


def ci_secondary_unknown(
    est: Estimates,
    corr: Correction,
    alpha: float,
    df_mode: DfMode = DfMode.STUDENT_N,
) -> Interval:
    """Corrected interval for the secondary mean with estimated sigma2 (C2/C3).

    The critical value is a Student-t quantile with N degrees of freedom or,
    in the effective-sample-size mode, a/rho_hat^2 degrees of freedom.
    """
    _check_alpha(alpha)
    if corr.case not in (Case.C2, Case.C3):
        raise ValueError("ci_secondary_unknown applies to cases C2 and C3")
    sigma2_hat = math.sqrt(est.sigma2_sq_hat)
    if not sigma2_hat > 0:
        raise ValueError("sigma2 estimate is zero; degenerate data")
    if df_mode is DfMode.STUDENT_N:
        df = float(est.n)
        method = Method.CORRECTED_STUDENT_N
    elif df_mode is DfMode.STUDENT_A_RHO:
        df = corr.df_arho
        method = Method.CORRECTED_STUDENT_A_RHO
    else:
        raise ValueError("df_mode must be a Student-t mode for unknown sigma2")
    c = t_quantile(1.0 - alpha / 2.0, df)
    scale = sigma2_hat / math.sqrt(est.n)
    lo, hi = _shifted(est.theta2_hat, scale, corr, scale * corr.tau_hat * c)
    return Interval(lo, hi, 1.0 - alpha, method)


def ci_naive(est: Estimates, sigma2_slot: float, alpha: float) -> Interval:
    """Uncorrected normal-quantile interval around theta2_hat."""
    _check_alpha(alpha)
    if not sigma2_slot > 0:
        raise ValueError(f"sigma2 slot must be > 0, got {sigma2_slot}")
    z = normal_quantile(1.0 - alpha / 2.0)
    half = z * sigma2_slot / math.sqrt(est.n)
    return Interval(
        est.theta2_hat - half, est.theta2_hat + half, 1.0 - alpha, Method.NAIVE
    )
