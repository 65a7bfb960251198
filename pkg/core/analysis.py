"""
Checks of the asymptotic statements about the cube-root flow: harmonic-measure
ratio, ordering of the real solutions, trace smoothness and convergence radii.
"""
import cmath
import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.optimize import minimize_scalar

from core.errors import MajorantBracketError, PreconditionError, SolverError, TailEstimateError
from core.loewner_dynamics import CUBE_ROOT, Trace, map_grid, solve_branch, solve_singular, trace_curve
from core.series_coefficients import as_fraction, holomorphic_coeffs, log_abs
from utils.config import SolverConfig

logger = logging.getLogger(__name__)

SIX_PI = 6 * math.pi
RADIUS_METHODS = ("root_test", "ratio_test", "cauchy_majorant")
ENVELOPE_WINDOW = 8
DEVIATION_BOUND = 20.0
LEADING_CONSTANT_RANGE = (15.0, 21.0)
ASYMPTOTIC_WINDOW = 1e-6


@dataclass(frozen=True)
class HarmonicMeasures:
    """Harmonic measures of the two slit sides seen from w (default i)."""

    t: float
    f1: float
    f2: float
    alpha1: float
    alpha2: float
    m1: float
    m2: float
    ratio: float
    w: complex = 1j

    @property
    def deviation(self):
        return abs(self.ratio / SIX_PI - 1)


@dataclass(frozen=True)
class RadiusEstimate:
    eps: float
    method: str
    value: float
    n_used: int
    error: float
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in RADIUS_METHODS:
            raise PreconditionError(f"unknown radius method {self.method!r}")
        if not self.value > 0:
            raise SolverError(f"radius estimate must be positive, got {self.value}")

    @property
    def t_radius(self):
        """Radius in the t variable."""
        return self.value**3


def _check_t(t, cfg):
    if not 0 < t <= cfg.t_max:
        raise PreconditionError(f"t must lie in (0, t_max={cfg.t_max}], got {t}")


def seen_angle(a, b, w=1j):
    """Angle under which the real segment [a, b] is seen from w in the upper half-plane."""
    w = complex(w)
    if w.imag <= 0:
        raise PreconditionError(f"observation point must lie in the upper half-plane, got {w}")
    return cmath.phase(1 + (b - a) / (a - w))


def harmonic_measures(t, cfg=None, w=1j):
    """
    Harmonic measures m1, m2 of the right and left sides of the slit at time t.

    The slit's prime ends map to f1(0,t) and f2(0,t) on either side of t**(1/3);
    each m_k is the angle under which its image segment is seen from w, over pi.
    """
    cfg = cfg or SolverConfig()
    _check_t(t, cfg)
    f1 = solve_singular("plus", None, t, cfg, record_steps=False).final
    f2 = solve_singular("minus", None, t, cfg, record_steps=False).final
    lam = math.cbrt(t)
    alpha1 = seen_angle(lam, f1, w)
    alpha2 = seen_angle(f2, lam, w)
    m1, m2 = alpha1 / math.pi, alpha2 / math.pi
    return HarmonicMeasures(t, f1, f2, alpha1, alpha2, m1, m2, m1 / m2**2, complex(w))


def _measures_row(t, cfg, w):
    try:
        hm = harmonic_measures(t, cfg, w)
    except SolverError as exc:
        logger.warning("ratio scan point t=%.3g failed: %s", t, exc)
        return {"t": t, "error": str(exc)}
    return {
        "t": t,
        "f1": hm.f1,
        "f2": hm.f2,
        "alpha1": hm.alpha1,
        "alpha2": hm.alpha2,
        "m1": hm.m1,
        "m2": hm.m2,
        "ratio": hm.ratio,
        "deviation": hm.deviation,
        "error": "",
    }


@dataclass(frozen=True)
class RatioScan:
    table: pd.DataFrame
    constant: float
    slope: float

    def violations(self):
        """Failed points, deviations above DEVIATION_BOUND * t**(1/3), and a fitted constant
        outside LEADING_CONSTANT_RANGE when the whole grid lies in the asymptotic window."""
        found = [f"t={row.t:g}: {row.error}" for row in self.table.itertuples() if row.error]
        good = self.table[self.table["error"] == ""]
        for row in good.itertuples():
            if row.deviation > DEVIATION_BOUND * math.cbrt(row.t):
                found.append(f"t={row.t:g}: deviation {row.deviation:.3g} above {DEVIATION_BOUND:g} t^(1/3)")
        low, high = LEADING_CONSTANT_RANGE
        if len(good) >= 2 and good["t"].max() <= ASYMPTOTIC_WINDOW and not low <= self.constant <= high:
            found.append(f"leading constant {self.constant:.4g} outside [{low:g}, {high:g}]")
        return found


SCAN_COLUMNS = ["t", "f1", "f2", "alpha1", "alpha2", "m1", "m2", "ratio", "deviation", "error"]


def fit_deviation(t_values, deviations):
    """
    Leading constant C of deviation ~ C t**(1/3) (+ D t**(2/3) when three or more points)
    and the log-log slope of deviation against t.
    """
    tau = np.cbrt(np.asarray(t_values, dtype=float))
    dev = np.asarray(deviations, dtype=float)
    if len(dev) == 0:
        return math.nan, math.nan
    if len(dev) < 3:
        constant = float(np.mean(dev / tau))
    else:
        design = np.column_stack([tau, tau**2])
        (constant, _), *_ = np.linalg.lstsq(design, dev, rcond=None)
    slope = math.nan
    if len(dev) >= 2 and np.all(dev > 0):
        slope = float(np.polyfit(np.log(tau**3), np.log(dev), 1)[0])
    return float(constant), slope


def ratio_scan(t_grid, cfg=None, w=1j):
    """Harmonic-measure ratio over a decreasing grid; failed points are flagged and the scan continues."""
    cfg = cfg or SolverConfig()
    grid = [float(t) for t in t_grid]
    if not grid:
        raise PreconditionError("empty time grid")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise PreconditionError("ratio scan grid must be strictly decreasing")
    for t in grid:
        _check_t(t, cfg)
    rows = map_grid(functools.partial(_measures_row, cfg=cfg, w=w), grid, cfg.workers)
    table = pd.DataFrame(rows, columns=SCAN_COLUMNS)
    good = table[table["error"] == ""]
    constant, slope = fit_deviation(good["t"], good["deviation"])
    return RatioScan(table, constant, slope)


@dataclass(frozen=True)
class MonotonicityReport:
    t1: float
    t0: float
    t: float
    labels: tuple
    values: tuple
    margins: tuple
    statuses: tuple
    tolerance: float

    @property
    def ok(self):
        return all(s == "strict" for s in self.statuses)

    def failing_pairs(self):
        return [
            (self.labels[i], self.labels[i + 1], self.values[i], self.values[i + 1], self.statuses[i])
            for i, s in enumerate(self.statuses)
            if s != "strict"
        ]

    def to_frame(self):
        return pd.DataFrame(
            {
                "lower": self.labels[:-1],
                "upper": self.labels[1:],
                "lower_value": self.values[:-1],
                "upper_value": self.values[1:],
                "margin": self.margins,
                "status": self.statuses,
            }
        )


CHAIN_LABELS = ("f2(0,t)", "f2(z1,t)", "f2(z0,t)", "t^(1/3)", "f1(z0,t)", "f1(z1,t)", "f1(0,t)")


def monotonicity_report(t1, t0, t, cfg=None):
    """
    Evaluate f2(0,t) < f2(z1,t) < f2(z0,t) < t**(1/3) < f1(z0,t) < f1(z1,t) < f1(0,t).

    A margin within the solver tolerance is a tie, below it a violation.
    """
    cfg = cfg or SolverConfig()
    if not 0 < t1 < t0 < t <= cfg.t_max:
        raise PreconditionError(f"need 0 < t1 < t0 < t <= t_max={cfg.t_max}, got ({t1}, {t0}, {t})")
    values = (
        solve_singular("minus", None, t, cfg, record_steps=False).final,
        solve_branch(t1, -1, t, cfg, record_steps=False).final,
        solve_branch(t0, -1, t, cfg, record_steps=False).final,
        math.cbrt(t),
        solve_branch(t0, 1, t, cfg, record_steps=False).final,
        solve_branch(t1, 1, t, cfg, record_steps=False).final,
        solve_singular("plus", None, t, cfg, record_steps=False).final,
    )
    scale = max(1.0, max(abs(v) for v in values))
    tolerance = 10 * cfg.tolerance * scale
    margins = tuple(b - a for a, b in zip(values, values[1:]))
    statuses = tuple("strict" if m > tolerance else "tie" if m >= -tolerance else "violation" for m in margins)
    report = MonotonicityReport(t1, t0, t, CHAIN_LABELS, values, margins, statuses, tolerance)
    for lower, upper, a, b, status in report.failing_pairs():
        logger.warning("ordering %s < %s is a %s: %.17g vs %.17g", lower, upper, status, a, b)
    return report


def upper_envelope(values, window=ENVELOPE_WINDOW):
    """(index, value) of the maximum in each consecutive window; indices refer to the input order."""
    points = []
    for start in range(0, len(values) - window + 1, window):
        chunk = values[start : start + window]
        k = max(range(window), key=chunk.__getitem__)
        points.append((start + k, chunk[k]))
    return points


def _tail_fit(indices, logs):
    """exp(-B) of the fit log|a_n| = A + B n + C log n; the log n term absorbs the algebraic prefactor."""
    n = np.asarray(indices, dtype=float)
    design = np.column_stack([np.ones_like(n), n, np.log(n)])
    (_, slope, _), *_ = np.linalg.lstsq(design, np.asarray(logs), rcond=None)
    return math.exp(-slope)


def _holomorphic_logs(eps, n_max, cfg):
    series = holomorphic_coeffs(as_fraction(eps), n_max, cap=cfg.n_max_cap)
    return [log_abs(c) for c in series.coeffs]


def radius_root_test(eps, n_max=200, cfg=None):
    """
    Root-test radius in tau = t**(1/3) of the series through the real point eps.

    The fit runs on the upper envelope of log|a_n| over the last half of the
    coefficients; the error bar is the change when only the last quarter is used.
    """
    cfg = cfg or SolverConfig()
    if n_max < 50:
        raise PreconditionError(f"root test needs n_max >= 50, got {n_max}")
    logs = _holomorphic_logs(eps, n_max, cfg)
    half = n_max // 2
    envelope = [(half + i + 1, v) for i, v in upper_envelope(logs[half:]) if math.isfinite(v)]
    quarter = [(n, v) for n, v in envelope if n > n_max - n_max // 4]
    if len(envelope) < 4 or len(quarter) < 3:
        raise TailEstimateError(f"too few usable tail coefficients for eps={eps}", logs[half:])
    value = _tail_fit(*zip(*envelope))
    check = _tail_fit(*zip(*quarter)) if len(quarter) >= 4 else value
    if not (math.isfinite(value) and value > 0 and math.isfinite(check)):
        sequence = [math.exp(-v / n) for n, v in envelope]
        raise TailEstimateError(f"root-test tail for eps={eps} does not settle", sequence)
    return RadiusEstimate(float(eps), "root_test", value, n_max, abs(value - check), {"envelope_points": len(envelope)})


def radius_ratio_test(eps, n_max=200, cfg=None):
    """Ratio-test radius: geometric mean of successive envelope ratios over the last half."""
    cfg = cfg or SolverConfig()
    if n_max < 50:
        raise PreconditionError(f"ratio test needs n_max >= 50, got {n_max}")
    logs = _holomorphic_logs(eps, n_max, cfg)
    half = n_max // 2
    envelope = [(half + i + 1, v) for i, v in upper_envelope(logs[half:]) if math.isfinite(v)]
    if len(envelope) < 4:
        raise TailEstimateError(f"too few usable tail coefficients for eps={eps}", logs[half:])

    def mean_ratio(points):
        (n_a, v_a), (n_b, v_b) = points[0], points[-1]
        return math.exp(-(v_b - v_a) / (n_b - n_a))

    value = mean_ratio(envelope)
    check = mean_ratio(envelope[len(envelope) // 2 :])
    return RadiusEstimate(float(eps), "ratio_test", value, n_max, abs(value - check))


def majorant_r1(r, eps):
    """R1 = r (1 - exp(-(eps - r)**2 / (48 r**3))) for 0 < r < eps."""
    if r <= 0 or r >= eps:
        return 0.0
    return r * -math.expm1(-((eps - r) ** 2) / (48 * r**3))


def _r1_derivative(r, eps):
    u = (eps - r) ** 2 / (48 * r**3)
    du = -(eps - r) / (24 * r**3) - (eps - r) ** 2 / (16 * r**4)
    return -math.expm1(-u) + r * math.exp(-u) * du


def majorant_profile(eps, points=400):
    """Scanned profile c = r/eps -> R1/eps of the majorant bound."""
    if not eps > 0:
        raise PreconditionError(f"majorant bound needs eps > 0, got {eps}")
    c = np.linspace(0, 1, points + 1)[1:-1]
    return pd.DataFrame({"c": c, "r1_over_eps": [majorant_r1(ci * eps, eps) / eps for ci in c]})


def majorant_lower_bound(eps, points=400):
    """
    Cauchy-majorant lower bound R2(eps) = max over r1 in (0, eps) of R1(r1).

    Grid bracketing followed by golden-section refinement. Details carry the
    maximizing c = r1/eps, the bound M = 12 r1**2 / (eps - r1) on the right-hand
    side over the polydisk with rho1 = (eps - r1)/2, and the stationarity residual.
    """
    if eps == 0:
        raise PreconditionError("eps = 0 is the singular point of indefinite character")
    if not eps > 0:
        raise PreconditionError(f"majorant bound needs eps > 0, got {eps}")
    profile = majorant_profile(eps, points)
    values = profile["r1_over_eps"].to_numpy()
    k = int(np.argmax(values))
    if k == 0 or k == len(values) - 1:
        raise MajorantBracketError(f"maximum of R1 for eps={eps} sits on the scan boundary", profile)
    c = profile["c"].to_numpy()
    bracket = (c[k - 1] * eps, c[k] * eps, c[k + 1] * eps)
    found = minimize_scalar(lambda r: -majorant_r1(r, eps), bracket=bracket, method="golden",
                            options={"xtol": 1e-12})
    if not getattr(found, "success", True):
        raise MajorantBracketError(f"golden-section search failed for eps={eps}: {found.message}", profile)
    r1 = float(found.x)
    value = majorant_r1(r1, eps)
    rho1 = (eps - r1) / 2
    details = {
        "c": r1 / eps,
        "r1": r1,
        "rho1": rho1,
        "M": 12 * r1**2 / (eps - r1),
        "stationarity": _r1_derivative(r1, eps),
        "one_minus_c_sq_over_eps": (1 - r1 / eps) ** 2 / eps,
    }
    return RadiusEstimate(float(eps), "cauchy_majorant", value, 0, 0.0, details)


@dataclass(frozen=True)
class SmoothnessReport:
    max_angle: float
    table: pd.DataFrame
    grid_size: int


def turning_angles(gammas):
    """Angles between consecutive chords of a polyline."""
    chords = [b - a for a, b in zip(gammas, gammas[1:])]
    return [abs(cmath.phase(b / a)) for a, b in zip(chords, chords[1:])]


def _smoothness_from_trace(trace):
    if trace.failed:
        bad = ", ".join(f"{p.t:.6g}" for p in trace.failed)
        raise SolverError(f"trace failed at t = {bad}")
    gammas = trace.gammas
    times = trace.times
    angles = turning_angles(gammas)
    table = pd.DataFrame(
        {
            "t": times[1:-1],
            "turning_angle": angles,
            "arg_gamma": [cmath.phase(g) for g in gammas[1:-1]],
        },
        columns=["t", "turning_angle", "arg_gamma"],
    )
    return SmoothnessReport(max(angles, default=0.0), table, len(times))


def trace_smoothness(t_grid, cfg=None, driving=CUBE_ROOT):
    """Max turning angle of the sampled trace and the per-vertex table (t, turning_angle, arg_gamma)."""
    cfg = cfg or SolverConfig()
    return _smoothness_from_trace(trace_curve(t_grid, cfg, driving, check_residual=False))


def geometric_grid(t_lo, t_hi, segments):
    return [t_lo * (t_hi / t_lo) ** (k / segments) for k in range(segments + 1)]


def smoothness_refinement(t_lo, t_hi, levels=2, cfg=None, base_segments=8, driving=CUBE_ROOT):
    """
    Max turning angle on geometric grids whose segment count doubles per level.

    The finest trace is computed once and subsampled for the coarser levels.
    """
    cfg = cfg or SolverConfig()
    if not 0 < t_lo < t_hi:
        raise PreconditionError(f"need 0 < t_lo < t_hi, got ({t_lo}, {t_hi})")
    if levels < 1:
        raise PreconditionError(f"need at least one refinement level, got {levels}")
    finest = base_segments * 2 ** (levels - 1)
    trace = trace_curve(geometric_grid(t_lo, t_hi, finest), cfg, driving, check_residual=False)
    rows = []
    for level in range(levels):
        stride = 2 ** (levels - 1 - level)
        sub = Trace(trace.points[::stride], trace.driving)
        report = _smoothness_from_trace(sub)
        previous = rows[-1]["max_angle"] if rows else math.nan
        rows.append(
            {
                "level": level,
                "segments": base_segments * 2**level,
                "max_angle": report.max_angle,
                "reduction": previous / report.max_angle if rows and report.max_angle > 0 else math.nan,
            }
        )
    return pd.DataFrame(rows, columns=["level", "segments", "max_angle", "reduction"])
