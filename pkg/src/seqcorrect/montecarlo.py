"""Replicated-trial simulation engine.

Replicates are independent tasks keyed by stream id, so a report is a pure
function of (scenario, seed): results are bit-identical for any degree of
parallelism.  Aggregation reduces exact integer tallies plus fsum'd float
partials over fixed-size chunks merged in chunk order.

Set SEQCORRECT_THREADS to bound worker processes (0 = one per CPU, unset or
1 = in-process sequential).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .corrections import (
    Case,
    DfMode,
    KnownParams,
    RhoSigma1,
    build_correction,
    default_rho_sigma1,
)
from .designs import DesignKind, DesignSpec, Verdict, run_trial
from .distributions import RngStream, normal_cdf, t_cdf
from .model import TrueParams, estimates

__all__ = [
    "Scenario",
    "VariantStats",
    "ScenarioReport",
    "DiagnosticCheck",
    "DiagnosticReport",
    "simulate_scenario",
    "reproduce_table",
    "wald_diagnostics",
    "TableResult",
    "TABLE_IDS",
]

_CHUNK = 256  # replicates per work unit; fixed so results never depend on workers

DEFAULT_LEVELS = (0.05, 0.025)


@dataclass(frozen=True)
class Scenario:
    """One Monte Carlo configuration: design, truth, case and bookkeeping."""

    design: DesignSpec
    params: TrueParams
    case: Case
    replicates: int = 10_000
    seed: int = 1
    df_mode: DfMode | None = None
    levels: tuple[float, ...] = DEFAULT_LEVELS
    rho_sigma1: RhoSigma1 | None = None

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        for alpha in self.levels:
            if not 0.0 < alpha < 0.5:
                raise ValueError(f"one-sided level {alpha} outside (0, 0.5)")

    def resolved_df_mode(self) -> DfMode:
        if self.df_mode is not None:
            return self.df_mode
        return DfMode.NORMAL if self.case in (Case.C0, Case.C1) else DfMode.STUDENT_N

    def variant_names(self) -> tuple[str, ...]:
        if self.case in (Case.C0, Case.C1):
            return ("naive", "corrected")
        return ("naive", "corrected_t_n", "corrected_t_arho")


@dataclass(frozen=True)
class VariantStats:
    """Noncoverage fractions for one pivot variant, keyed by one-sided level."""

    lower: dict[float, float]
    upper: dict[float, float]
    coverage: dict[float, float]
    se_lower: dict[float, float]
    se_upper: dict[float, float]
    se_coverage: dict[float, float]


@dataclass(frozen=True)
class ScenarioReport:
    expected_n: float
    expected_n_se: float
    power: float | None
    power_se: float | None
    variants: dict[str, VariantStats]
    degenerate_count: int
    replicates: int
    seed: int
    levels: tuple[float, ...]
    df_mode: DfMode

    def corrected(self) -> VariantStats:
        """The corrected-pivot stats selected by the scenario's df mode."""
        if "corrected" in self.variants:
            return self.variants["corrected"]
        key = (
            "corrected_t_arho"
            if self.df_mode is DfMode.STUDENT_A_RHO
            else "corrected_t_n"
        )
        return self.variants[key]

    @property
    def lower_noncov(self) -> dict[float, float]:
        return self.corrected().lower

    @property
    def upper_noncov(self) -> dict[float, float]:
        return self.corrected().upper

    @property
    def coverage(self) -> dict[float, float]:
        return self.corrected().coverage

    @property
    def mc_se(self) -> dict[str, float]:
        out = {"expected_n": self.expected_n_se}
        if self.power_se is not None:
            out["power"] = self.power_se
        stats = self.corrected()
        for alpha in self.levels:
            out[f"L{alpha:g}"] = stats.se_lower[alpha]
            out[f"U{alpha:g}"] = stats.se_upper[alpha]
            out[f"cov{alpha:g}"] = stats.se_coverage[alpha]
        return out


def _known_for(sc: Scenario) -> KnownParams:
    # All slots are filled from the simulation truth; the case logic inside
    # build_correction decides which ones are actually consulted.
    p = sc.params
    return KnownParams(sigma1=p.sigma1, sigma2=p.sigma2, gamma=p.gamma)


def _replicate_pit(sc: Scenario, r: int) -> tuple[int, bool, bool, dict[str, float]]:
    """One replicate: (N, rejected, degenerate, PIT value per pivot variant).

    The PIT value u = F(z) under the variant's reference distribution turns
    every tail tally into a comparison of u with the nominal level, so each
    variant costs a single CDF evaluation.
    """
    stream = RngStream(sc.seed, r)
    trial = run_trial(sc.design, sc.params, stream)
    est = estimates(trial.stats)
    corr = build_correction(sc.case, sc.design, est, _known_for(sc), sc.rho_sigma1)
    theta2 = sc.params.theta2
    degenerate = False
    if sc.case in (Case.C0, Case.C1):
        slot = sc.params.sigma2
    else:
        slot = math.sqrt(est.sigma2_sq_hat)
        if slot == 0.0:
            degenerate = True
    diff = theta2 - est.theta2_hat
    if slot > 0.0:
        raw = math.sqrt(est.n) * diff / slot
    else:
        raw = math.copysign(math.inf, diff) if diff != 0.0 else 0.0
    z = (raw - corr.mu_hat) / corr.tau_hat
    us = {"naive": normal_cdf(raw) if math.isfinite(raw) else (0.0 if raw < 0 else 1.0)}
    if sc.case in (Case.C0, Case.C1):
        us["corrected"] = normal_cdf(z)
    else:
        us["corrected_t_n"] = t_cdf(z, float(est.n))
        us["corrected_t_arho"] = t_cdf(z, corr.df_arho)
    return trial.n, trial.verdict is Verdict.REJECT_H0, degenerate, us


def _run_pit_chunk(sc: Scenario, start: int, stop: int):
    levels = sc.levels
    names = sc.variant_names()
    lower = {v: [0] * len(levels) for v in names}
    upper = {v: [0] * len(levels) for v in names}
    n_sum = 0
    n_sq = 0
    rejects = 0
    degen = 0
    for r in range(start, stop):
        n, rejected, degenerate, us = _replicate_pit(sc, r)
        n_sum += n
        n_sq += n * n
        rejects += rejected
        degen += degenerate
        for v in names:
            u = us[v]
            for i, alpha in enumerate(levels):
                if u < alpha:
                    lower[v][i] += 1
                elif u > 1.0 - alpha:
                    upper[v][i] += 1
    return lower, upper, n_sum, n_sq, rejects, degen


def _worker_count() -> int:
    raw = os.environ.get("SEQCORRECT_THREADS", "")
    if raw == "":
        return 1
    count = int(raw)
    if count < 0:
        raise ValueError("SEQCORRECT_THREADS must be >= 0")
    if count == 0:
        return os.cpu_count() or 1
    return count


def _chunks(total: int) -> list[tuple[int, int]]:
    return [(start, min(start + _CHUNK, total)) for start in range(0, total, _CHUNK)]


def _map_chunks(fn, sc: Scenario):
    spans = _chunks(sc.replicates)
    workers = _worker_count()
    if workers <= 1 or len(spans) <= 1:
        return [fn(sc, a, b) for a, b in spans]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, sc, a, b) for a, b in spans]
        return [f.result() for f in futures]  # merged in chunk order


def _binom_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def simulate_scenario(sc: Scenario) -> ScenarioReport:
    """Run the scenario and tally noncoverage of the true secondary mean.

    For each replicate the naive pivot and the case's corrected pivot are
    evaluated at the true theta2; lower (upper) noncoverage at level alpha
    is the fraction of replicates with pivot below (above) the upper-alpha
    quantile of the variant's reference distribution.  Replicates with
    degenerate variance estimates go through the capped correction path and
    are counted, never dropped.
    """
    results = _map_chunks(_run_pit_chunk, sc)
    levels = sc.levels
    names = sc.variant_names()
    R = sc.replicates
    lower = {v: [0] * len(levels) for v in names}
    upper = {v: [0] * len(levels) for v in names}
    n_sum = n_sq = rejects = degen = 0
    for lo, up, ns, nq, rj, dg in results:
        for v in names:
            for i in range(len(levels)):
                lower[v][i] += lo[v][i]
                upper[v][i] += up[v][i]
        n_sum += ns
        n_sq += nq
        rejects += rj
        degen += dg
    variants: dict[str, VariantStats] = {}
    for v in names:
        lo_f = {a: lower[v][i] / R for i, a in enumerate(levels)}
        up_f = {a: upper[v][i] / R for i, a in enumerate(levels)}
        cov = {a: 1.0 - lo_f[a] - up_f[a] for a in levels}
        variants[v] = VariantStats(
            lower=lo_f,
            upper=up_f,
            coverage=cov,
            se_lower={a: _binom_se(lo_f[a], R) for a in levels},
            se_upper={a: _binom_se(up_f[a], R) for a in levels},
            se_coverage={a: _binom_se(cov[a], R) for a in levels},
        )
    mean_n = n_sum / R
    var_n = (n_sq - n_sum * n_sum / R) / (R - 1) if R > 1 else 0.0
    is_tri = sc.design.kind is DesignKind.TRIANGULAR
    power = rejects / R if is_tri else None
    return ScenarioReport(
        expected_n=mean_n,
        expected_n_se=math.sqrt(max(var_n, 0.0) / R),
        power=power,
        power_se=_binom_se(power, R) if power is not None else None,
        variants=variants,
        degenerate_count=degen,
        replicates=R,
        seed=sc.seed,
        levels=levels,
        df_mode=sc.resolved_df_mode(),
    )


# ---------------------------------------------------------------------------
# Table reproduction


TABLE_IDS = ("t1", "t2", "t3", "t4", "t5")

_SPRT_DESIGN = dict(a=10.0, eps=math.sqrt(0.1), eps0=math.sqrt(5.0))
_RST_DESIGN = dict(a=10.0, eps=math.sqrt(0.1), eps0=math.sqrt(2.0))
_TRI_DESIGN = dict(a=5.495, b=0.2726, group=2)

_GRID_UNIT = [
    (0.30, 1.00, 0.40),
    (0.60, 1.00, 0.40),
    (0.80, 1.00, 0.40),
    (0.30, 1.00, 0.80),
    (0.60, 1.00, 0.80),
    (0.80, 1.00, 0.80),
]
_GRID_TRIAL = [
    (0.00, 0.07, 0.40),
    (0.00, 0.07, 0.80),
    (0.30, 0.07, 0.40),
    (0.30, 0.07, 0.80),
    (0.50, 0.07, 0.40),
    (0.50, 0.07, 0.80),
]


@dataclass(frozen=True)
class TableResult:
    table_id: str
    columns: tuple[str, ...]
    rows: list[dict[str, float]]
    reports: list[ScenarioReport] = field(repr=False, default_factory=list)


def table_scenarios(table_id: str, replicates: int, seed: int) -> list[Scenario]:
    """Scenario list for one table; row r uses seed + r.

    Tables sharing a design and base seed (t1/t2, t3/t4) replay identical
    trials and differ only in the pivots, mirroring their shared
    expected-sample-size columns.
    """
    tid = table_id.lower()
    if tid not in TABLE_IDS:
        raise ValueError(f"unknown table id {table_id!r}; expected one of {TABLE_IDS}")
    scenarios = []
    if tid in ("t1", "t2", "t3", "t4"):
        design = (
            DesignSpec.sprt(**_SPRT_DESIGN)
            if tid in ("t1", "t2")
            else DesignSpec.rst(**_RST_DESIGN)
        )
        case = Case.C1 if tid in ("t1", "t3") else Case.C3
        for idx, (th1, th2, gm) in enumerate(_GRID_UNIT):
            params = TrueParams(th1, th2, 1.0, 1.0, gm)
            scenarios.append(
                Scenario(
                    design=design,
                    params=params,
                    case=case,
                    replicates=replicates,
                    seed=seed + idx,
                )
            )
    else:
        for idx, (th1, th2, gm) in enumerate(_GRID_TRIAL):
            params = TrueParams(th1, th2, 0.5, 0.1, gm)
            design = DesignSpec.triangular(monitor_sigma1=params.sigma1, **_TRI_DESIGN)
            scenarios.append(
                Scenario(
                    design=design,
                    params=params,
                    case=Case.C3,
                    replicates=replicates,
                    seed=seed + idx,
                )
            )
    return scenarios


def _noncov_columns(prefix: str, stats: VariantStats, levels) -> dict[str, float]:
    out = {}
    for alpha in levels:
        out[f"{prefix}_L{alpha:g}"] = stats.lower[alpha]
        out[f"{prefix}_U{alpha:g}"] = stats.upper[alpha]
    return out


def _cov_columns(prefix: str, stats: VariantStats, levels) -> dict[str, float]:
    out = {}
    for alpha in levels:
        out[f"{prefix}_cov{100 * (1 - 2 * alpha):g}"] = stats.coverage[alpha]
    return out


def reproduce_table(table_id: str, replicates: int = 10_000, seed: int = 1) -> TableResult:
    """Reproduce one report table row-by-row with Monte Carlo estimates."""
    tid = table_id.lower()
    scenarios = table_scenarios(tid, replicates, seed)
    rows: list[dict[str, float]] = []
    reports: list[ScenarioReport] = []
    for sc in scenarios:
        rep = simulate_scenario(sc)
        reports.append(rep)
        row: dict[str, float] = {
            "theta1": sc.params.theta1,
            "theta2": sc.params.theta2,
            "gamma": sc.params.gamma,
        }
        if tid == "t5":
            row["power"] = rep.power
            row["se_power"] = rep.power_se
        row["expected_n"] = rep.expected_n
        row["se_expected_n"] = rep.expected_n_se
        if tid in ("t1", "t3"):
            row.update(_noncov_columns("naive", rep.variants["naive"], sc.levels))
            row.update(_noncov_columns("corrected", rep.variants["corrected"], sc.levels))
        else:
            row.update(_cov_columns("naive", rep.variants["naive"], sc.levels))
            row.update(_cov_columns("t_n", rep.variants["corrected_t_n"], sc.levels))
            row.update(_cov_columns("t_arho", rep.variants["corrected_t_arho"], sc.levels))
        row["degenerate"] = rep.degenerate_count
        rows.append(row)
    return TableResult(
        table_id=tid,
        columns=tuple(rows[0].keys()),
        rows=rows,
        reports=reports,
    )


# ---------------------------------------------------------------------------
# Appendix diagnostics


@dataclass(frozen=True)
class DiagnosticCheck:
    name: str
    estimate: float
    se: float
    tol: float
    passed: bool


@dataclass(frozen=True)
class DiagnosticReport:
    checks: list[DiagnosticCheck]
    replicates: int
    seed: int

    def all_passed(self, names: tuple[str, ...] | None = None) -> bool:
        selected = self.checks if names is None else [
            c for c in self.checks if c.name in names
        ]
        return all(c.passed for c in selected)

    def by_name(self) -> dict[str, DiagnosticCheck]:
        return {c.name: c for c in self.checks}


_WALD_NAMES = (
    "second_moment_1",
    "second_moment_2",
    "fourth_moment_1",
    "fourth_moment_2",
    "cross_moment",
    "gamma_hat_bias",
    "theta1_hat_bias",
    "theta2_hat_bias",
    "sigma1_sq_hat_bias",
    "sigma2_sq_hat_bias",
)


def _run_wald_chunk(sc: Scenario, start: int, stop: int):
    p = sc.params
    v1 = p.sigma1 * p.sigma1
    v2 = p.sigma2 * p.sigma2
    g = p.gamma
    sums: dict[str, float] = {}
    sqs: dict[str, float] = {}
    parts: dict[str, list[float]] = {k: [] for k in _WALD_NAMES}
    for r in range(start, stop):
        stream = RngStream(sc.seed, r)
        trial = run_trial(sc.design, p, stream)
        n = trial.n
        est = estimates(trial.stats)
        a1, a2, cx = trial.stats.centered(p.theta1, p.theta2)
        res = {
            "second_moment_1": a1 / n - v1,
            "second_moment_2": a2 / n - v2,
            "fourth_moment_1": a1 * a1 / n - 2.0 * v1 * v1 - v1 * v1 * n,
            "fourth_moment_2": a2 * a2 / n - 2.0 * v2 * v2 - v2 * v2 * n,
            "cross_moment": a1 * a2 / n - 2.0 * g * g * v1 * v2 - v1 * v2 * n,
            "gamma_hat_bias": (est.gamma_hat - g) + g * (1.0 - g * g) / (2.0 * n),
            "theta1_hat_bias": est.theta1_hat - p.theta1,
            "theta2_hat_bias": est.theta2_hat - p.theta2,
            "sigma1_sq_hat_bias": est.sigma1_sq_hat - v1,
            "sigma2_sq_hat_bias": est.sigma2_sq_hat - v2,
        }
        for k, val in res.items():
            parts[k].append(val)
    for k in _WALD_NAMES:
        sums[k] = math.fsum(parts[k])
        sqs[k] = math.fsum(x * x for x in parts[k])
    return sums, sqs


def wald_diagnostics(sc: Scenario) -> DiagnosticReport:
    """Monte Carlo checks of randomly-stopped moment identities and biases.

    The first five checks are identity residuals expected to vanish and are
    flagged at 4 MC standard errors.  The estimator-bias checks are only
    asymptotically small under optional stopping (small relative to
    1/sqrt(a) for the means and 1/a for the variances), so their pass
    thresholds add the corresponding log-damped asymptotic allowance to the
    4-se band; in a fixed-sample control design the allowance is idle and
    the biases vanish exactly.
    """
    results = _map_chunks(_run_wald_chunk, sc)
    R = sc.replicates
    sums = {k: math.fsum(chunk[0][k] for chunk in results) for k in _WALD_NAMES}
    sqs = {k: math.fsum(chunk[1][k] for chunk in results) for k in _WALD_NAMES}
    a = sc.design.a
    la = math.log(a) if a > 1 else 1.0
    allowance = {
        "theta1_hat_bias": sc.params.sigma1 / (math.sqrt(a) * la),
        "theta2_hat_bias": sc.params.sigma2 / (math.sqrt(a) * la),
        "sigma1_sq_hat_bias": sc.params.sigma1 ** 2 / (a * la),
        "sigma2_sq_hat_bias": sc.params.sigma2 ** 2 / (a * la),
    }
    checks = []
    for name in _WALD_NAMES:
        mean = sums[name] / R
        var = (sqs[name] - sums[name] * sums[name] / R) / (R - 1) if R > 1 else 0.0
        se = math.sqrt(max(var, 0.0) / R)
        tol = 4.0 * se + allowance.get(name, 0.0)
        checks.append(
            DiagnosticCheck(
                name=name, estimate=mean, se=se, tol=tol, passed=abs(mean) <= tol
            )
        )
    return DiagnosticReport(checks=checks, replicates=R, seed=sc.seed)
