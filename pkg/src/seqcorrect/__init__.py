"""Corrected confidence intervals for the secondary mean of a bivariate
normal process monitored by a sequential test on the first component."""

from .corrections import (
    Case,
    Correction,
    DfMode,
    KnownParams,
    PivotValue,
    RhoSigma1,
    build_correction,
    build_primary_correction,
    corrected_pivot,
    kappa_primary,
    kappa_secondary,
    m_value,
    mu_hat,
    raw_pivot_secondary,
    tau_hat,
)
from .designs import (
    DesignKind,
    DesignSpec,
    StopDecision,
    TrialResult,
    Verdict,
    q_value,
    rho,
    rho10,
    run_trial,
    run_trial_on_data,
    should_stop,
)
from .distributions import (
    RngStream,
    normal_cdf,
    normal_quantile,
    sample_bivariate,
    t_cdf,
    t_quantile,
)
from .intervals import (
    Interval,
    Method,
    ci_naive,
    ci_primary,
    ci_secondary_known,
    ci_secondary_unknown,
)
from .model import (
    Estimates,
    SufficientStats,
    TrueParams,
    accumulate,
    estimates,
    log_density,
)
from .montecarlo import (
    DiagnosticReport,
    Scenario,
    ScenarioReport,
    TableResult,
    reproduce_table,
    simulate_scenario,
    wald_diagnostics,
)

__version__ = "0.1.0"
