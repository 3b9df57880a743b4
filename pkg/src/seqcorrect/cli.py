"""Command-line surface: scenario simulation, table reproduction, one-shot
corrected confidence intervals from trial summaries, and diagnostics.

Outputs are CSV (fixed column order, 6 significant digits, LF endings) or
JSON; files are written atomically (temp file + rename).  A flat
``key = value`` config file can seed any command's flags; explicit flags
override config values and unknown keys are errors.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass

from .corrections import (
    Case,
    DfMode,
    KnownParams,
    build_correction,
)
from .designs import DesignSpec
from .intervals import ci_naive, ci_secondary_known, ci_secondary_unknown
from .model import Estimates
from .montecarlo import (
    Scenario,
    TABLE_IDS,
    reproduce_table,
    simulate_scenario,
    table_scenarios,
    wald_diagnostics,
)
from .model import TrueParams

__all__ = ["main", "parse_config", "execute", "RunConfig"]


@dataclass(frozen=True)
class RunConfig:
    command: str
    args: argparse.Namespace


# ---------------------------------------------------------------------------
# Parsing


def _add_design_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument(
        "--design",
        choices=["sprt", "rst", "triangular", "fixed"],
        required=required,
        help="stopping design family",
    )
    p.add_argument("--a", type=float, help="boundary parameter a")
    p.add_argument("--eps", type=float, help="truncation parameter (plain value)")
    p.add_argument("--eps2", type=float, help="truncation parameter squared (a/eps2 = max size)")
    p.add_argument("--eps0", type=float, help="initial-size parameter (plain value)")
    p.add_argument("--eps0sq", type=float, help="initial-size parameter squared")
    p.add_argument("--b", type=float, help="triangular slope")
    p.add_argument("--group", type=int, default=2, help="triangular group size (looks at multiples)")
    p.add_argument("--overshoot", type=float, default=0.583, help="triangular overshoot correction")
    p.add_argument(
        "--monitor-sigma1",
        type=float,
        default=None,
        help="fixed standardization constant for the triangular boundary statistic "
        "(default: running estimate)",
    )
    p.add_argument("--fixed-n", type=int, help="sample size for the fixed design")


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output file path")
    p.add_argument("--format", choices=["csv", "json"], default="csv", help="output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqcorrect",
        description="Corrected confidence intervals after sequential tests "
        "on the first component of a bivariate normal process.",
    )
    parser.add_argument("--config", help="flat key = value config file; flags override")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte Carlo noncoverage for one scenario")
    _add_design_flags(sim)
    sim.add_argument("--theta1", type=float, required=True)
    sim.add_argument("--theta2", type=float, required=True)
    sim.add_argument("--gamma", type=float, required=True)
    sim.add_argument("--sigma1", type=float, default=1.0)
    sim.add_argument("--sigma2", type=float, default=1.0)
    sim.add_argument("--case", choices=[c.value for c in Case], required=True)
    sim.add_argument("--reps", type=int, default=10_000)
    sim.add_argument("--seed", type=int, default=1)
    sim.add_argument("--df", choices=["normal", "n", "arho"], default=None)
    sim.add_argument(
        "--levels", default="0.05,0.025", help="comma-separated one-sided levels"
    )
    _add_output_flags(sim)

    tab = sub.add_parser("table", help="reproduce a full report table")
    tab.add_argument("--id", choices=list(TABLE_IDS), required=True)
    tab.add_argument("--reps", type=int, default=10_000)
    tab.add_argument("--seed", type=int, default=1)
    _add_output_flags(tab)

    ci = sub.add_parser("ci", help="corrected interval from trial summary statistics")
    _add_design_flags(ci)
    ci.add_argument("--n", type=int, required=True, help="number of observations at stopping")
    ci.add_argument("--theta1-hat", type=float, required=True)
    ci.add_argument("--theta2-hat", type=float, required=True)
    ci.add_argument("--sigma1-hat", type=float, required=True)
    ci.add_argument("--sigma2-hat", type=float, required=True)
    ci.add_argument("--gamma-hat", type=float, required=True)
    ci.add_argument("--case", choices=[c.value for c in Case], default="c3")
    ci.add_argument("--sigma1", type=float, help="known sigma1 (cases c0/c1)")
    ci.add_argument("--sigma2", type=float, help="known sigma2 (cases c0/c1)")
    ci.add_argument("--gamma", type=float, help="known gamma (cases c0/c2)")
    ci.add_argument("--df", choices=["n", "arho"], default="n")
    ci.add_argument("--alpha", type=float, default=0.05)
    _add_output_flags(ci)

    diag = sub.add_parser("diagnose", help="randomly-stopped moment diagnostics")
    _add_design_flags(diag)
    diag.add_argument("--theta1", type=float, required=True)
    diag.add_argument("--theta2", type=float, default=1.0)
    diag.add_argument("--gamma", type=float, required=True)
    diag.add_argument("--sigma1", type=float, default=1.0)
    diag.add_argument("--sigma2", type=float, default=1.0)
    diag.add_argument("--reps", type=int, default=10_000)
    diag.add_argument("--seed", type=int, default=1)
    _add_output_flags(diag)
    parser.subcommand_parsers = {  # type: ignore[attr-defined]
        "simulate": sim,
        "table": tab,
        "ci": ci,
        "diagnose": diag,
    }
    return parser


def parse_config_file(path: str) -> dict[str, str]:
    """Flat `key = value` lines; '#' starts a comment; keys match flag names."""
    pairs: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, value = (part.strip() for part in text.split("=", 1))
            if not key or not value:
                raise ValueError(f"{path}:{lineno}: empty key or value")
            pairs[key] = value
    return pairs


def _config_to_argv(pairs: dict[str, str], parser: argparse.ArgumentParser, command: str) -> list[str]:
    subparsers = parser.subcommand_parsers  # type: ignore[attr-defined]
    if command not in subparsers:
        raise ValueError(f"unknown command {command!r}")
    known = set()
    for action in subparsers[command]._actions:
        known.update(opt.lstrip("-") for opt in action.option_strings)
    argv: list[str] = []
    for key, value in pairs.items():
        norm = key.replace("_", "-")
        if norm not in known:
            raise ValueError(f"unknown config key {key!r} for command {command!r}")
        argv.extend([f"--{norm}", value])
    return argv


def parse_config(argv: list[str]) -> RunConfig:
    """Parse argv (plus optional config file) into a validated RunConfig."""
    parser = build_parser()
    # Pull --config and the subcommand out first so config values can be
    # spliced in ahead of explicit flags (argparse last-one-wins).
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    pre_ns, rest = pre.parse_known_args(argv)
    if pre_ns.config:
        if not rest:
            raise ValueError("--config requires a subcommand")
        command, tail = rest[0], rest[1:]
        pairs = parse_config_file(pre_ns.config)
        injected = _config_to_argv(pairs, parser, command)
        argv = [command] + injected + tail
    ns = parser.parse_args(argv)
    return RunConfig(command=ns.command, args=ns)


# ---------------------------------------------------------------------------
# Builders


def _design_from_args(ns: argparse.Namespace) -> DesignSpec:
    kind = ns.design
    if kind == "fixed":
        if ns.fixed_n is None:
            raise ValueError("fixed design requires --fixed-n")
        return DesignSpec.fixed_sample(ns.fixed_n)
    if ns.a is None:
        raise ValueError(f"design {kind!r} requires --a")
    if kind in ("sprt", "rst"):
        eps = ns.eps if ns.eps is not None else (
            math.sqrt(ns.eps2) if ns.eps2 is not None else None
        )
        eps0 = ns.eps0 if ns.eps0 is not None else (
            math.sqrt(ns.eps0sq) if ns.eps0sq is not None else None
        )
        if eps is None or eps0 is None:
            raise ValueError(f"design {kind!r} requires --eps/--eps2 and --eps0/--eps0sq")
        maker = DesignSpec.sprt if kind == "sprt" else DesignSpec.rst
        return maker(a=ns.a, eps=eps, eps0=eps0)
    if ns.b is None:
        raise ValueError("triangular design requires --b")
    return DesignSpec.triangular(
        a=ns.a,
        b=ns.b,
        group=ns.group,
        overshoot=ns.overshoot,
        monitor_sigma1=ns.monitor_sigma1,
    )


def _df_mode(text: str | None) -> DfMode | None:
    if text is None:
        return None
    return {"normal": DfMode.NORMAL, "n": DfMode.STUDENT_N, "arho": DfMode.STUDENT_A_RHO}[text]


def _scenario_from_args(ns: argparse.Namespace) -> Scenario:
    levels = tuple(float(part) for part in str(ns.levels).split(",") if part)
    return Scenario(
        design=_design_from_args(ns),
        params=TrueParams(ns.theta1, ns.theta2, ns.sigma1, ns.sigma2, ns.gamma),
        case=Case(ns.case),
        replicates=ns.reps,
        seed=ns.seed,
        df_mode=_df_mode(ns.df),
        levels=levels,
    )


# ---------------------------------------------------------------------------
# Output helpers


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(columns, rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def _emit(columns, rows, ns, payload_extra=None) -> None:
    if ns.out is None:
        return
    if ns.format == "csv":
        _write_atomic(ns.out, _csv_text(columns, rows))
    else:
        payload = {"columns": list(columns), "rows": rows}
        if payload_extra:
            payload.update(payload_extra)
        _write_atomic(ns.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Commands


def _run_simulate(ns: argparse.Namespace) -> int:
    sc = _scenario_from_args(ns)
    rep = simulate_scenario(sc)
    columns = ["theta1", "theta2", "gamma", "expected_n", "se_expected_n"]
    row: dict[str, float] = {
        "theta1": sc.params.theta1,
        "theta2": sc.params.theta2,
        "gamma": sc.params.gamma,
        "expected_n": rep.expected_n,
        "se_expected_n": rep.expected_n_se,
    }
    if rep.power is not None:
        columns += ["power", "se_power"]
        row["power"] = rep.power
        row["se_power"] = rep.power_se
    for name, stats in rep.variants.items():
        for alpha in sc.levels:
            for tag, mapping in (("L", stats.lower), ("U", stats.upper)):
                col = f"{name}_{tag}{alpha:g}"
                columns.append(col)
                row[col] = mapping[alpha]
            col = f"{name}_cov{alpha:g}"
            columns.append(col)
            row[col] = stats.coverage[alpha]
    columns.append("degenerate")
    row["degenerate"] = rep.degenerate_count
    mc_se = {f"se_{k}": v for k, v in rep.mc_se.items()}
    _emit(columns, [row], ns, payload_extra={"mc_se": mc_se})
    print(f"scenario: design={sc.design.kind.value} case={sc.case.value} "
          f"reps={sc.replicates} seed={sc.seed}")
    print(f"  E[N] = {rep.expected_n:.4g} (se {rep.expected_n_se:.2g})")
    if rep.power is not None:
        print(f"  power = {rep.power:.4g} (se {rep.power_se:.2g})")
    for name, stats in rep.variants.items():
        parts = [
            f"L{a:g}={stats.lower[a]:.4f} U{a:g}={stats.upper[a]:.4f}" for a in sc.levels
        ]
        print(f"  {name}: " + "  ".join(parts))
    return 0


def _run_table(ns: argparse.Namespace) -> int:
    result = reproduce_table(ns.id, replicates=ns.reps, seed=ns.seed)
    _emit(result.columns, result.rows, ns)
    print(f"table {result.table_id}: {len(result.rows)} rows, "
          f"reps={ns.reps}, seed={ns.seed}")
    header = [c for c in result.columns if not c.startswith("se_") and c != "degenerate"]
    print("  " + "  ".join(header))
    for row in result.rows:
        print("  " + "  ".join(_fmt(row[c]) for c in header))
    return 0


def _run_ci(ns: argparse.Namespace) -> int:
    design = _design_from_args(ns)
    case = Case(ns.case)
    n = ns.n
    if n < 2:
        raise ValueError("--n must be >= 2")
    sigma1_sq = ns.sigma1_hat * ns.sigma1_hat
    sigma2_sq = ns.sigma2_hat * ns.sigma2_hat
    est = Estimates(
        theta1_hat=ns.theta1_hat,
        theta2_hat=ns.theta2_hat,
        sigma1_sq_hat=sigma1_sq,
        sigma2_sq_hat=sigma2_sq,
        gamma_hat=ns.gamma_hat,
        n=n,
    )
    known = KnownParams(sigma1=ns.sigma1, sigma2=ns.sigma2, gamma=ns.gamma)
    corr = build_correction(case, design, est, known)
    alpha = ns.alpha
    if case in (Case.C0, Case.C1):
        naive = ci_naive(est, ns.sigma2, alpha)
        corrected = ci_secondary_known(est, ns.sigma2, corr, alpha)
    else:
        naive = ci_naive(est, ns.sigma2_hat, alpha)
        corrected = ci_secondary_unknown(est, corr, alpha, df_mode=_df_mode(ns.df))
    columns = [
        "method", "lo", "hi", "level", "mu_hat", "tau_hat", "kappa_hat", "df",
    ]
    if case in (Case.C0, Case.C1):
        df_value = ""  # normal critical value
    else:
        df_value = float(n) if ns.df == "n" else corr.df_arho
    rows = [
        {"method": "naive", "lo": naive.lo, "hi": naive.hi, "level": naive.level,
         "mu_hat": 0.0, "tau_hat": 1.0, "kappa_hat": 0.0, "df": ""},
        {"method": corrected.method.value, "lo": corrected.lo, "hi": corrected.hi,
         "level": corrected.level, "mu_hat": corr.mu_hat, "tau_hat": corr.tau_hat,
         "kappa_hat": corr.kappa_hat, "df": df_value},
    ]
    _emit(columns, rows, ns)
    print(f"naive     ({naive.lo:.3f}, {naive.hi:.3f})")
    print(f"corrected ({corrected.lo:.3f}, {corrected.hi:.3f})   "
          f"[mu_hat={corr.mu_hat:.6g}, tau_hat={corr.tau_hat:.6g}]")
    return 0


def _run_diagnose(ns: argparse.Namespace) -> int:
    sc = Scenario(
        design=_design_from_args(ns),
        params=TrueParams(ns.theta1, ns.theta2, ns.sigma1, ns.sigma2, ns.gamma),
        case=Case.C3,
        replicates=ns.reps,
        seed=ns.seed,
    )
    report = wald_diagnostics(sc)
    columns = ["check", "estimate", "se", "tol", "passed"]
    rows = [
        {"check": c.name, "estimate": c.estimate, "se": c.se, "tol": c.tol,
         "passed": int(c.passed)}
        for c in report.checks
    ]
    _emit(columns, rows, ns)
    for c in report.checks:
        flag = "pass" if c.passed else "FAIL"
        print(f"  {c.name:22s} {c.estimate:+.5f} (se {c.se:.5f}, tol {c.tol:.5f})  {flag}")
    return 0


_RUNNERS = {
    "simulate": _run_simulate,
    "table": _run_table,
    "ci": _run_ci,
    "diagnose": _run_diagnose,
}


def execute(config: RunConfig) -> int:
    return _RUNNERS[config.command](config.args)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = parse_config(argv)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return execute(config)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
