"""
Command-line front end: every study is a subcommand that emits one table.

Exit codes: 0 success, 1 usage error, 2 bad configuration or precondition,
3 solver failure, 4 failed invariant check.
"""
import argparse
import dataclasses
import logging
import math
import sys

from core import analysis, borel_summation, loewner_dynamics, series_coefficients, verification
from core.errors import (
    ArtifactError,
    ConfigError,
    InvariantViolation,
    LoewnerToolkitError,
    PreconditionError,
    SolverError,
)
from utils.config import load_config
from utils.data_loader import ARTIFACT_FORMATS, emit_table

logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PRECONDITION = 2
EXIT_SOLVER = 3
EXIT_INVARIANT = 4

# parameters each subcommand reads; they are resolved into the echoed config
SUBCOMMAND_PARAMS = {
    "coeffs": ("family", "n", "t0", "eps"),
    "borel": ("family", "n_max", "taus", "pade"),
    "flow": ("z", "t_start", "t_end", "driving", "shift", "seed", "sign", "t0"),
    "trace": ("t_lo", "t_hi", "points", "driving", "shift"),
    "harmonic": ("t_grid",),
    "monotonic": ("t1", "t0", "t"),
    "radius": ("eps", "n_max"),
    "smoothness": ("t_lo", "t_hi", "levels"),
    "verify-all": (),
}

# where the shared default does not fit the subcommand
SUBCOMMAND_DEFAULTS = {
    "borel": {"n_max": 60, "taus": [1e-3, 1e-2]},
    "flow": {"t0": 1e-3},
    "monotonic": {"t0": 1e-3},
}

SOLVER_FLAGS = {
    "rtol": float,
    "atol": float,
    "min_gap": float,
    "t_max": float,
    "tau_switch": float,
    "n_seed": int,
    "workers": int,
    "precision": str,
    "mp_dps": int,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _float_list(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _flag(name):
    return "--" + name.replace("_", "-")


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat TOML file of key = value settings")
    common.add_argument("--format", choices=ARTIFACT_FORMATS, help="artifact format (default csv)")
    common.add_argument("--output", help="artifact path; stdout when omitted")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    for name, kind in SOLVER_FLAGS.items():
        common.add_argument(_flag(name), dest=name, type=kind, help=f"solver setting {name}")

    parser = _Parser(prog="loewner-cuberoot", description="Studies of the Loewner flow driven by t^(1/3).")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("coeffs", parents=[common], help="exact series coefficients",
                       description="CSV columns: n, numerator, denominator, exponent, t0_power")
    p.add_argument("--family", choices=series_coefficients.FAMILIES)
    p.add_argument("--n", type=int, help="number of coefficients")
    p.add_argument("--t0", help="expansion point (exact rational) for taylor and branch families")
    p.add_argument("--eps", help="real starting point (exact rational) for the holomorphic family")

    p = sub.add_parser("borel", parents=[common], help="Borel-Pade sums of the singular series",
                       description="CSV columns: tau, borel_sum, error_estimate, ode_reference, abs_diff")
    p.add_argument("--family", choices=("plus", "minus"))
    p.add_argument("--n-max", dest="n_max", type=int, help="series order fed to the transform")
    p.add_argument("--taus", type=_float_list, help="comma-separated tau values")
    p.add_argument("--pade", help="preferred Pade orders m,k")

    p = sub.add_parser("flow", parents=[common], help="one forward trajectory",
                       description="CSV columns: t, re, im, gap")
    p.add_argument("--z", help="starting point, e.g. 1+1j")
    p.add_argument("--t-start", dest="t_start", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--driving", choices=loewner_dynamics.DRIVING_KINDS)
    p.add_argument("--shift", type=float, help="t0 of the shifted cube-root driving")
    p.add_argument("--seed", choices=("regular", "singular", "branch"))
    p.add_argument("--sign", choices=("+", "-"))
    p.add_argument("--t0", help="branch time for --seed branch")

    p = sub.add_parser("trace", parents=[common], help="trace gamma(t) on a geometric grid",
                       description="CSV columns: t, re, im, step_count, residual")
    p.add_argument("--t-lo", dest="t_lo", type=float)
    p.add_argument("--t-hi", dest="t_hi", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--driving", choices=loewner_dynamics.DRIVING_KINDS)
    p.add_argument("--shift", type=float)

    p = sub.add_parser("harmonic", parents=[common], help="harmonic-measure ratio scan",
                       description="CSV columns: " + ", ".join(analysis.SCAN_COLUMNS))
    p.add_argument("--t-grid", dest="t_grid", type=_float_list, help="comma-separated times")

    p = sub.add_parser("monotonic", parents=[common], help="ordering chain of the real solutions",
                       description="CSV columns: lower, upper, lower_value, upper_value, margin, status")
    p.add_argument("--t1", type=float)
    p.add_argument("--t0")
    p.add_argument("--t", type=float)

    p = sub.add_parser("radius", parents=[common], help="convergence radius near a real point",
                       description="CSV columns: eps, method, value, t_radius, n_used, error, c")
    p.add_argument("--eps")
    p.add_argument("--n-max", dest="n_max", type=int)

    p = sub.add_parser("smoothness", parents=[common], help="turning angles under grid refinement",
                       description="CSV columns: level, segments, max_angle, reduction")
    p.add_argument("--t-lo", dest="t_lo", type=float)
    p.add_argument("--t-hi", dest="t_hi", type=float)
    p.add_argument("--levels", type=int)

    sub.add_parser("verify-all", parents=[common], help="run the acceptance checks",
                   description="CSV columns: " + ", ".join(verification.VERIFY_COLUMNS))
    return parser


def _configure_logging(verbose):
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def complete_params(run_config):
    """Copy of run_config whose params hold exactly the values its subcommand reads."""
    if run_config.subcommand not in SUBCOMMAND_PARAMS:
        raise PreconditionError(f"unknown subcommand {run_config.subcommand!r}")
    defaults = SUBCOMMAND_DEFAULTS.get(run_config.subcommand, {})
    params = {
        name: run_config.params[name] if name in run_config.params else defaults.get(name, run_config.param(name))
        for name in SUBCOMMAND_PARAMS[run_config.subcommand]
    }
    return dataclasses.replace(run_config, params=params)


def resolve_config(args):
    """RunConfig from the optional file plus flags, with every parameter the subcommand reads filled in."""
    overrides = {k: v for k, v in vars(args).items() if k not in ("config", "verbose", "subcommand")}
    return complete_params(load_config(args.config, overrides, subcommand=args.subcommand))


def _complex(text):
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError:
        raise PreconditionError(f"cannot read {text!r} as a complex number") from None


def _floats(value):
    if isinstance(value, str):
        return [float(v) for v in value.split(",") if v.strip()]
    return [float(v) for v in value]


def _pade_ladder(value):
    orders = [int(v) for v in (value.split(",") if isinstance(value, str) else value)]
    if len(orders) != 2:
        raise PreconditionError(f"Pade orders are given as m,k, got {value!r}")
    preferred = tuple(orders)
    return (preferred,) + tuple(o for o in borel_summation.DEFAULT_LADDER if o != preferred)


def _driving(run_config):
    kind = run_config.param("driving")
    if kind == "shifted_cube_root":
        return loewner_dynamics.DrivingSpec.shifted(float(run_config.param("shift")))
    return loewner_dynamics.DrivingSpec(kind)


def _geometric(t_lo, t_hi, points):
    if points < 2:
        raise PreconditionError(f"need at least two grid points, got {points}")
    return analysis.geometric_grid(t_lo, t_hi, points - 1)


def cmd_coeffs(run_config):
    cfg = run_config.solver
    series = series_coefficients.compute_family(
        run_config.param("family"),
        int(run_config.param("n")),
        series_coefficients.as_fraction(run_config.param("t0")),
        series_coefficients.as_fraction(run_config.param("eps")),
        cap=cfg.n_max_cap,
    )
    return series_coefficients.series_to_frame(series), {}, []


def cmd_borel(run_config):
    cfg = run_config.solver
    family = run_config.param("family")
    n_max = int(run_config.param("n_max"))
    if family == "plus":
        series = series_coefficients.singular_plus_coeffs(n_max, cfg.n_max_cap)
    elif family == "minus":
        series = series_coefficients.singular_minus_coeffs(n_max, cfg.n_max_cap)
    else:
        raise PreconditionError(f"Borel sums are computed for the plus and minus families, got {family!r}")
    transform = borel_summation.borel_transform(series)
    ladder = _pade_ladder(run_config.param("pade"))
    table = borel_summation.borel_table(_floats(run_config.param("taus")), transform, cfg=cfg, ladder=ladder)
    summary = {"transform_radius": transform.radius_estimate, "pade": "%d,%d" % ladder[0]}
    return table, summary, []


def cmd_flow(run_config):
    cfg = run_config.solver
    seed = run_config.param("seed")
    t_end = float(run_config.param("t_end"))
    sign = run_config.param("sign")
    if seed == "singular":
        flow = loewner_dynamics.solve_singular(sign, None, t_end, cfg)
    elif seed == "branch":
        flow = loewner_dynamics.solve_branch(float(run_config.param("t0")), sign, t_end, cfg)
    elif seed == "regular":
        z = _complex(run_config.param("z"))
        flow = loewner_dynamics.solve_forward(z, float(run_config.param("t_start")), t_end, _driving(run_config), cfg)
    else:
        raise PreconditionError(f"unknown seed {seed!r}; expected regular, singular or branch")
    summary = {"seed": flow.seed.describe(), "steps": flow.stats.steps, "rejected": flow.stats.rejected}
    return flow.to_frame(), summary, []


def cmd_trace(run_config):
    grid = _geometric(float(run_config.param("t_lo")), float(run_config.param("t_hi")), int(run_config.param("points")))
    trace = loewner_dynamics.trace_curve(grid, run_config.solver, _driving(run_config))
    summary = {"failed_points": len(trace.failed)}
    return trace.to_frame(), summary, []


def cmd_harmonic(run_config):
    grid = sorted(_floats(run_config.param("t_grid")), reverse=True)
    scan = analysis.ratio_scan(grid, run_config.solver)
    return scan.table, {"leading_constant": scan.constant, "loglog_slope": scan.slope}, scan.violations()


def cmd_monotonic(run_config):
    report = analysis.monotonicity_report(
        float(run_config.param("t1")), float(run_config.param("t0")), float(run_config.param("t")), run_config.solver
    )
    failures = [f"{lower} < {upper} is a {status}" for lower, upper, _, _, status in report.failing_pairs()]
    return report.to_frame(), {"tolerance": report.tolerance}, failures


def cmd_radius(run_config):
    cfg = run_config.solver
    eps_exact = series_coefficients.as_fraction(run_config.param("eps"))
    n_max = int(run_config.param("n_max"))
    estimates = [analysis.radius_root_test(eps_exact, n_max, cfg), analysis.radius_ratio_test(eps_exact, n_max, cfg)]
    if eps_exact > 0:
        estimates.append(analysis.majorant_lower_bound(float(eps_exact)))
    rows = [
        {
            "eps": e.eps,
            "method": e.method,
            "value": e.value,
            "t_radius": e.t_radius,
            "n_used": e.n_used,
            "error": e.error,
            "c": e.details.get("c", math.nan),
        }
        for e in estimates
    ]
    failures = []
    if eps_exact > 0 and estimates[0].value < estimates[-1].value:
        failures.append(f"root-test radius {estimates[0].value:.4g} below the majorant bound {estimates[-1].value:.4g}")
    return rows, {}, failures


def cmd_smoothness(run_config):
    table = analysis.smoothness_refinement(
        float(run_config.param("t_lo")), float(run_config.param("t_hi")), int(run_config.param("levels")),
        run_config.solver,
    )
    reductions = table["reduction"].dropna()
    failures = [f"turning angle fell only {r:.3g}x at level {lvl}"
                for lvl, r in zip(table.loc[reductions.index, "level"], reductions) if r < 1.5]
    return table, {}, failures


def cmd_verify_all(run_config):
    table = verification.run_checks(run_config.solver)
    failures = [f"{row.module}: {row.check}" for row in table.itertuples() if not row.passed]
    summary = {"modules": ",".join(sorted(set(table["module"]))), "checks": len(table)}
    return table, summary, failures


COMMANDS = {
    "coeffs": cmd_coeffs,
    "borel": cmd_borel,
    "flow": cmd_flow,
    "trace": cmd_trace,
    "harmonic": cmd_harmonic,
    "monotonic": cmd_monotonic,
    "radius": cmd_radius,
    "smoothness": cmd_smoothness,
    "verify-all": cmd_verify_all,
}


def run(argv=None, stdout=None):
    """
    Parse argv, run the subcommand and emit its table.

    Returns the process exit code
    """
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    _configure_logging(args.verbose)

    try:
        run_config = resolve_config(args)
        table, summary, failures = COMMANDS[args.subcommand](run_config)
        text = emit_table(table, run_config.format, run_config.output_path(), run_config, summary)
        if run_config.output is None:
            stdout.write(text)
        if failures:
            raise InvariantViolation("; ".join(failures))
    except (ConfigError, PreconditionError, ArtifactError) as exc:
        logger.error("%s", exc)
        return EXIT_PRECONDITION
    except SolverError as exc:
        logger.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except InvariantViolation as exc:
        logger.error("invariant check failed: %s", exc)
        return EXIT_INVARIANT
    except LoewnerToolkitError as exc:
        logger.error("%s", exc)
        return EXIT_SOLVER
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
