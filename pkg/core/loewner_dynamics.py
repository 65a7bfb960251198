"""
Chordal Loewner flows driven by t**(1/3) and its relatives.

Below t = tau_switch**3 the cube-root flow is integrated in tau = t**(1/3),
where dg/dtau = 6 tau**2 / (g - tau) has a bounded right-hand side.
"""
import bisect
import cmath
import functools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import pandas as pd
from scipy.optimize import minimize_scalar

from core.errors import (
    BranchViolationError,
    PreconditionError,
    SeedValidationError,
    SingularApproachError,
    SolverError,
)
from core.integrator import DOUBLE, StepStats, arithmetic_for, dormand_prince
from core.series_coefficients import (
    as_fraction,
    branch_half_coeffs,
    singular_minus_coeffs,
    singular_plus_coeffs,
)
from utils.config import SolverConfig

logger = logging.getLogger(__name__)

DRIVING_KINDS = ("cube_root", "zero", "shifted_cube_root")

# the gap-squared residual check needs a sharper flow than the default
PRIME_END_RTOL = 1e-12
PRIME_END_ATOL = 1e-15


@dataclass(frozen=True)
class DrivingSpec:
    """Driving function lambda(t): cube_root, zero, or shifted_cube_root (t + t0)**(1/3)."""

    kind: str = "cube_root"
    t0: float | None = None

    def __post_init__(self):
        if self.kind not in DRIVING_KINDS:
            raise PreconditionError(f"unknown driving {self.kind!r}; expected one of {', '.join(DRIVING_KINDS)}")
        if self.kind == "shifted_cube_root":
            if self.t0 is None or not self.t0 > 0:
                raise PreconditionError(f"shifted cube-root driving needs t0 > 0, got {self.t0!r}")
        elif self.t0 is not None:
            raise PreconditionError(f"driving {self.kind!r} takes no shift")

    @classmethod
    def cube_root(cls):
        return cls("cube_root")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def shifted(cls, t0):
        return cls("shifted_cube_root", float(t0))

    @property
    def label(self):
        if self.kind == "shifted_cube_root":
            return f"(t+{self.t0:g})^(1/3)"
        return {"cube_root": "t^(1/3)", "zero": "0"}[self.kind]

    def value(self, t, arithmetic=DOUBLE):
        if self.kind == "zero":
            return arithmetic.real(0)
        if self.kind == "cube_root":
            return arithmetic.cbrt(t)
        return arithmetic.cbrt(t + arithmetic.real(self.t0))

    def derivative(self, t, arithmetic=DOUBLE):
        if self.kind == "zero":
            return arithmetic.real(0)
        base = t if self.kind == "cube_root" else t + arithmetic.real(self.t0)
        if base == 0:
            return math.inf
        root = arithmetic.cbrt(base)
        return 1 / (3 * root * root)


CUBE_ROOT = DrivingSpec.cube_root()


@dataclass(frozen=True)
class FlowSeed:
    """Where a trajectory starts: a point z, a singular branch at the origin, or a branch point."""

    kind: str
    z: complex | None = None
    branch: str | None = None
    t0: float | None = None
    t_seed: float | None = None

    def describe(self):
        if self.kind == "point":
            return f"z={self.z}"
        if self.kind == "singular":
            return f"singular {self.branch} seeded at t={self.t_seed:.6g}"
        return f"branch {self.branch} at t0={self.t0:g} seeded at t={self.t_seed:.6g}"


@dataclass(frozen=True)
class FlowTrajectory:
    seed: FlowSeed
    driving: DrivingSpec
    times: tuple
    values: tuple
    stats: StepStats

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise SolverError("trajectory times are not strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def final(self):
        return self.values[-1]

    def at(self, t, rel=1e-9):
        """Value recorded at time t (requested through t_samples)."""
        i = bisect.bisect_left(self.times, t * (1 - rel))
        for j in (i, i - 1, i + 1):
            if 0 <= j < len(self.times) and abs(self.times[j] - t) <= rel * abs(t):
                return self.values[j]
        raise KeyError(f"no sample recorded at t={t!r}")

    def gaps(self):
        return [abs(f - self.driving.value(t)) for t, f in zip(self.times, self.values)]

    def to_frame(self):
        return pd.DataFrame(
            {
                "t": list(self.times),
                "re": [complex(f).real for f in self.values],
                "im": [complex(f).imag for f in self.values],
                "gap": self.gaps(),
            }
        )


@dataclass(frozen=True)
class TracePoint:
    t: float
    gamma: complex | None
    residual: float | None
    substeps: int
    flagged: bool = False
    error: str | None = None

    @property
    def ok(self):
        return self.error is None


@dataclass(frozen=True)
class Trace:
    points: tuple
    driving: DrivingSpec = CUBE_ROOT

    def __len__(self):
        return len(self.points)

    @property
    def times(self):
        return [p.t for p in self.points]

    @property
    def gammas(self):
        return [p.gamma for p in self.points]

    @property
    def failed(self):
        return [p for p in self.points if not p.ok]

    def to_frame(self):
        rows = [
            {
                "t": p.t,
                "re": p.gamma.real if p.gamma is not None else math.nan,
                "im": p.gamma.imag if p.gamma is not None else math.nan,
                "step_count": p.substeps,
                "residual": p.residual if p.residual is not None else math.nan,
            }
            for p in self.points
        ]
        return pd.DataFrame(rows, columns=["t", "re", "im", "step_count", "residual"])


def zero_driving_closed_form(z, t):
    """sqrt(z**2 + 4t) on the branch that keeps Im >= 0 and the sign of real seeds."""
    z = complex(z)
    root = cmath.sqrt(z * z + 4 * t)
    if root.imag < 0 or (root.imag == 0 and z.imag == 0 and z.real < 0):
        root = -root
    return root


def map_grid(func, items, workers=1):
    """Apply func over items, in a process pool when workers > 1; results keep input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def _phases(driving, t_a, t_b, cfg):
    """Split [t_a, t_b] (either order) into ("tau", ...) and ("t", ...) pieces in integration order."""
    if driving.kind != "cube_root":
        return [("t", t_a, t_b)]
    t_switch = cfg.tau_switch**3
    lo, hi = min(t_a, t_b), max(t_a, t_b)
    pieces = []
    if lo < t_switch:
        pieces.append(("tau", lo, min(hi, t_switch)))
    if hi > t_switch:
        pieces.append(("t", max(lo, t_switch), hi))
    if t_a > t_b:
        pieces = [(kind, b, a) for kind, a, b in reversed(pieces)]
    return pieces


def _gap_root(q, side, arithmetic):
    """f - lambda recovered from q = (f - lambda)**2; complex flows stay in the upper half-plane."""
    if side is None:
        return arithmetic.complex(0, 1) * arithmetic.sqrt(-q)
    return side * arithmetic.real_sqrt(q) if q > 0 else arithmetic.real(0)


def _make_rhs(kind, mode, driving, cfg, arithmetic, side=None):
    min_gap = cfg.min_gap

    def check(x, gap, state):
        if abs(gap) < min_gap:
            t = float(x) ** 3 if kind == "tau" else float(x)
            raise SingularApproachError(
                f"|f - lambda| = {float(abs(gap)):.3g} fell below min_gap at t={t:.6g}",
                t,
                arithmetic.to_python(state),
                float(abs(gap)),
            )

    if mode == "value" and kind == "t":

        def rhs(t, f):
            gap = f - driving.value(t, arithmetic)
            check(t, gap, f)
            return 2 / gap

    elif mode == "value":

        def rhs(tau, g):
            gap = g - tau
            check(tau, gap, g)
            return 6 * tau * tau / gap

    elif kind == "t":

        def rhs(t, q):
            return 4 - 2 * _gap_root(q, side, arithmetic) * driving.derivative(t, arithmetic)

    else:

        def rhs(tau, q):
            return 12 * tau * tau - 2 * _gap_root(q, side, arithmetic)

    return rhs


def _integrate(driving, y0, t_a, t_b, cfg, arithmetic, *, mode="value", side=None, t_samples=None,
               record_steps=True, guard=None):
    """Run the phase plan; returns (times, states, stats) with times in integration order."""
    times = [t_a]
    states = [y0]
    stats = StepStats()
    y = y0
    wanted = sorted(t_samples or [], reverse=t_a > t_b)
    for kind, begin, end in _phases(driving, t_a, t_b, cfg):
        inside = [s for s in wanted if min(begin, end) < s < max(begin, end)]
        to_x = arithmetic.cbrt if kind == "tau" else arithmetic.real
        x0, x1 = to_x(arithmetic.real(begin)), to_x(arithmetic.real(end))
        step_guard = None
        if guard is not None:
            step_guard = (lambda x, v, k=kind: guard(float(x) ** 3 if k == "tau" else float(x), v))
        solution = dormand_prince(
            _make_rhs(kind, mode, driving, cfg, arithmetic, side),
            x0,
            y,
            x1,
            rtol=cfg.rtol,
            atol=cfg.atol,
            h_min=cfg.h_min,
            max_steps=cfg.max_steps,
            sample_at=[to_x(arithmetic.real(s)) for s in inside],
            record_steps=record_steps,
            guard=step_guard,
            arithmetic=arithmetic,
        )
        stats.merge(solution.stats)
        for x, value in zip(solution.xs[1:-1], solution.ys[1:-1]):
            times.append(float(x) ** 3 if kind == "tau" else float(x))
            states.append(value)
        times.append(end)
        states.append(solution.final)
        y = solution.final
        logger.debug("phase %s %g -> %g: %d steps", kind, begin, end, solution.stats.steps)
    return times, states, stats


def _check_time_window(t_start, t_end):
    if not (t_start >= 0 and t_end > t_start):
        raise PreconditionError(f"need 0 <= t_start < t_end, got t_start={t_start}, t_end={t_end}")


def _finish(seed, driving, times, values, stats):
    cleaned_t, cleaned_v = [], []
    for t, v in zip(times, values):
        if cleaned_t and t <= cleaned_t[-1]:
            continue
        cleaned_t.append(t)
        cleaned_v.append(v)
    return FlowTrajectory(seed, driving, tuple(cleaned_t), tuple(cleaned_v), stats)


def solve_forward(z, t_start, t_end, driving=CUBE_ROOT, cfg=None, *, absorb=False, t_samples=None,
                  record_steps=True):
    """
    Integrate df/dt = 2/(f - lambda(t)) from f(t_start) = z.

    Parameters:
    - z: starting point in the closed upper half-plane, off the hull
    - driving: DrivingSpec
    - cfg: SolverConfig
    - absorb: integrate q = (f - lambda)**2 instead of f, which stays regular when the
      point is swallowed exactly at t_end (used for trace residuals)
    - t_samples: extra times at which the state is recorded exactly

    Returns a FlowTrajectory
    """
    cfg = cfg or SolverConfig()
    _check_time_window(t_start, t_end)
    z = complex(z)
    if z.imag < 0:
        raise PreconditionError(f"starting point must lie in the closed upper half-plane, got z={z}")
    arithmetic = arithmetic_for(cfg)
    real_seed = z.imag == 0
    start = arithmetic.real(z.real) if real_seed else arithmetic.complex(z.real, z.imag)
    lam0 = driving.value(arithmetic.real(t_start), arithmetic)
    gap0 = start - lam0
    seed = FlowSeed("point", z=z)
    if not absorb:
        if abs(gap0) < cfg.min_gap:
            raise PreconditionError(
                f"z={z} sits on the driving point at t={t_start}; use the singular or branch solvers"
            )
        times, states, stats = _integrate(
            driving, start, t_start, t_end, cfg, arithmetic, t_samples=t_samples, record_steps=record_steps
        )
        values = [arithmetic.to_python(s) for s in states]
        if real_seed:
            values = [float(v) for v in values]
        return _finish(seed, driving, times, values, stats)

    side = None
    if real_seed:
        side = 1 if gap0 > 0 else -1
    times, states, stats = _integrate(
        driving,
        gap0 * gap0,
        t_start,
        t_end,
        cfg,
        arithmetic,
        mode="gap_squared",
        side=side,
        t_samples=t_samples,
        record_steps=record_steps,
    )
    values = []
    for t, q in zip(times, states):
        f = driving.value(arithmetic.real(t), arithmetic) + _gap_root(q, side, arithmetic)
        values.append(arithmetic.to_python(f))
    if real_seed:
        values = [complex(v).real for v in values]
    return _finish(seed, driving, times, values, stats)


def hydrodynamic_constant(z, t, cfg=None, driving=CUBE_ROOT):
    """|f(z,t) - z - 2t/z| * |z|**2, bounded for large |z| under hydrodynamic normalization."""
    f = complex(solve_forward(z, 0.0, t, driving, cfg, record_steps=False).final)
    z = complex(z)
    return abs(f - z - 2 * t / z) * abs(z) ** 2


def _normalize_branch(branch):
    aliases = {"plus": "plus", "+": "plus", "1": "plus", "minus": "minus", "-": "minus", "-1": "minus"}
    try:
        return aliases[str(branch)]
    except KeyError:
        raise PreconditionError(f"branch must be plus or minus, got {branch!r}") from None


def _singular_series(branch, n):
    return singular_plus_coeffs(n) if branch == "plus" else singular_minus_coeffs(n)


def singular_seed_time(branch, n_seed, bound):
    """Time at which the first omitted term |a_{n_seed+1}| tau**(n_seed+1) of the seed equals bound."""
    branch = _normalize_branch(branch)
    series = _singular_series(branch, n_seed + 1)
    a_next = abs(float(series.coefficient(n_seed + 1)))
    tau = (bound / a_next) ** (1.0 / (n_seed + 1))
    return tau**3


def _exact_to(arithmetic, value):
    if arithmetic.ctx is None:
        return float(value)
    return arithmetic.ctx.mpf(value.numerator) / value.denominator


def _branch_guard(branch, driving, arithmetic):
    sign = 1 if branch == "plus" else -1

    def guard(t, f):
        gap = f - driving.value(arithmetic.real(t), arithmetic)
        if sign * gap <= 0:
            raise BranchViolationError(
                f"{branch} solution crossed the driving function at t={t:.6g}", t
            )

    return guard


def solve_singular(branch, t_seed=None, t_end=1e-2, cfg=None, *, t_samples=None, record_steps=True):
    """
    Real solutions f1(0,t) (plus) and f2(0,t) (minus) through the singular point at the origin.

    The flow starts at t_seed from the truncated asymptotic series in tau = t**(1/3);
    when t_seed is None it is picked by singular_seed_time, capped at t_end/8.
    """
    cfg = cfg or SolverConfig()
    branch = _normalize_branch(branch)
    if t_seed is None:
        t_seed = min(singular_seed_time(branch, cfg.n_seed, cfg.seed_bound), t_end / 8)
    if not 0 < t_seed < t_end:
        raise PreconditionError(f"need 0 < t_seed < t_end, got t_seed={t_seed}, t_end={t_end}")
    arithmetic = arithmetic_for(cfg)
    series = _singular_series(branch, cfg.n_seed)
    tau = arithmetic.cbrt(arithmetic.real(t_seed))
    start = sum(_exact_to(arithmetic, c) * tau**n for n, c in enumerate(series.coeffs, start=1))
    logger.debug("singular %s seed t=%.3g f=%.17g (order %d)", branch, t_seed, float(start), cfg.n_seed)
    guard = _branch_guard(branch, CUBE_ROOT, arithmetic)
    guard(t_seed, start)
    times, states, stats = _integrate(
        CUBE_ROOT, start, t_seed, t_end, cfg, arithmetic, t_samples=t_samples, record_steps=record_steps,
        guard=guard,
    )
    values = [float(s) for s in states]
    return _finish(FlowSeed("singular", branch=branch, t_seed=t_seed), CUBE_ROOT, times, values, stats)


def branch_seed(t0, sign, cfg):
    """
    Seed (t0 + delta, f) of the solution branching at (t0**(1/3), t0), with its relative residual.

    The half-power series is taken to order 2*n_seed, matching n_seed orders in t.
    """
    delta = max(cfg.branch_delta_floor, cfg.branch_delta_rel * t0)
    series = branch_half_coeffs(as_fraction(t0), 2 * cfg.n_seed, sign)
    u = math.sqrt(delta)
    f = float(series.offset) + sum(float(b) * u**n for n, b in enumerate(series.coeffs, start=1))
    slope = sum(float(b) * (n / 2) * u ** (n - 2) for n, b in enumerate(series.coeffs, start=1))
    gap = f - math.cbrt(t0 + delta)
    residual = abs(slope * gap - 2) / 2
    return t0 + delta, f, residual


def solve_branch(t0, sign=1, t_end=1e-2, cfg=None, *, t_samples=None, record_steps=True):
    """
    Solutions f1(z0,t) (sign=+1) and f2(z0,t) (sign=-1) leaving the algebraic critical point at t0.

    Seeded in value space at t0 + delta from the half-power series; continued by the forward flow.
    """
    cfg = cfg or SolverConfig()
    if sign in ("+", "plus"):
        sign = 1
    elif sign in ("-", "minus"):
        sign = -1
    if not 0 < t0 < t_end <= cfg.t_max:
        raise PreconditionError(f"need 0 < t0 < t_end <= t_max={cfg.t_max}, got t0={t0}, t_end={t_end}")
    t_seed, start, residual = branch_seed(t0, sign, cfg)
    if t_seed >= t_end:
        raise PreconditionError(f"seed time {t_seed:.6g} does not precede t_end={t_end}")
    if residual > cfg.seed_residual_tol:
        raise SeedValidationError(
            f"branch seed at t0={t0:g} has residual {residual:.3g} above {cfg.seed_residual_tol:.3g}", residual
        )
    branch = "plus" if sign == 1 else "minus"
    logger.debug("branch %s seed t=%.6g f=%.17g residual %.2e", branch, t_seed, start, residual)
    arithmetic = arithmetic_for(cfg)
    start_value = arithmetic.real(start)
    guard = _branch_guard(branch, CUBE_ROOT, arithmetic)
    times, states, stats = _integrate(
        CUBE_ROOT, start_value, t_seed, t_end, cfg, arithmetic, t_samples=t_samples, record_steps=record_steps,
        guard=guard,
    )
    values = [float(s) for s in states]
    seed = FlowSeed("branch", branch=branch, t0=t0, t_seed=t_seed)
    return _finish(seed, CUBE_ROOT, times, values, stats)


def _sharpened(cfg):
    """Tip-resolving tolerances; the prime-end residual scales like the root of the local error."""
    return cfg.replace(rtol=min(cfg.rtol, PRIME_END_RTOL), atol=min(cfg.atol, PRIME_END_ATOL))


def _backward_flow(t, driving, cfg):
    """Downward flow from lambda(t) to time 0 at sharpened tolerances; returns (gamma, accepted steps)."""
    cfg = _sharpened(cfg)
    arithmetic = arithmetic_for(cfg)
    t_value = arithmetic.real(t)
    lam_t = driving.value(t_value, arithmetic)
    slope = driving.derivative(t_value, arithmetic)
    sigma0 = arithmetic.real(cfg.trace_sigma0) * arithmetic.real_sqrt(t_value)
    sigma1 = arithmetic.real_sqrt(arithmetic.real(cfg.trace_s_switch) * t_value)
    start = lam_t + arithmetic.complex(0, 2) * sigma0 - slope * sigma0 * sigma0 / 3

    def rhs(sigma, h):
        gap = h - driving.value(t_value - sigma * sigma, arithmetic)
        if abs(gap) < cfg.min_gap:
            raise SingularApproachError(
                f"backward flow touched the driving point at s={float(sigma) ** 2:.3g}",
                t,
                arithmetic.to_python(h),
                float(abs(gap)),
            )
        return -4 * sigma / gap

    first = dormand_prince(
        rhs,
        sigma0,
        start,
        sigma1,
        rtol=cfg.rtol,
        atol=cfg.atol,
        h_min=0.0,
        max_steps=cfg.max_steps,
        record_steps=False,
        arithmetic=arithmetic,
    )
    u_start = t * (1 - cfg.trace_s_switch)
    _, states, stats = _integrate(driving, first.final, u_start, 0.0, cfg, arithmetic, record_steps=False)
    return arithmetic.to_python(states[-1]), first.stats.steps + stats.steps


def prime_end_residual(gamma, t, cfg=None, driving=CUBE_ROOT):
    """|f(gamma, t) - lambda(t)| from the gap-squared forward flow started at gamma."""
    cfg = cfg or SolverConfig()
    sharp = _sharpened(cfg).replace(min_gap=0.0)
    flow = solve_forward(gamma, 0.0, t, driving, sharp, absorb=True, record_steps=False)
    return abs(complex(flow.final) - driving.value(t))


def trace_point_detail(t, cfg=None, driving=CUBE_ROOT, check_residual=True):
    """Trace point with diagnostics; solver failures are reported, not raised."""
    cfg = cfg or SolverConfig()
    try:
        gamma, substeps = _backward_flow(t, driving, cfg)
    except SolverError as exc:
        logger.warning("trace point t=%.6g failed: %s", t, exc)
        return TracePoint(t, None, None, 0, True, str(exc))
    residual = None
    flagged = False
    if check_residual:
        try:
            residual = prime_end_residual(gamma, t, cfg, driving)
        except SolverError as exc:
            logger.warning("residual check at t=%.6g failed: %s", t, exc)
            flagged = True
        else:
            if residual > cfg.trace_residual_tol:
                logger.warning("trace point t=%.6g has prime-end residual %.3g", t, residual)
                flagged = True
    return TracePoint(t, gamma, residual, substeps, flagged)


def trace_point(t, cfg=None, driving=CUBE_ROOT):
    """gamma(t) = f^{-1}(lambda(t), t) by the backward flow."""
    cfg = cfg or SolverConfig()
    if not t > 0:
        raise PreconditionError(f"trace time must be positive, got t={t}")
    if driving.kind == "cube_root" and t > cfg.t_max:
        raise PreconditionError(f"trace time must lie in (0, t_max={cfg.t_max}], got t={t}")
    gamma, _ = _backward_flow(t, driving, cfg)
    return gamma


def _check_grid(t_grid, cfg, driving):
    grid = [float(t) for t in t_grid]
    if not grid:
        raise PreconditionError("empty time grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise PreconditionError("time grid must be strictly increasing")
    if grid[0] <= 0 or (driving.kind == "cube_root" and grid[-1] > cfg.t_max):
        raise PreconditionError(f"time grid must lie in (0, t_max={cfg.t_max}]")
    return grid


def trace_curve(t_grid, cfg=None, driving=CUBE_ROOT, check_residual=True):
    """Trace over an increasing grid; failed points are flagged and the sweep continues."""
    cfg = cfg or SolverConfig()
    grid = _check_grid(t_grid, cfg, driving)
    worker = functools.partial(trace_point_detail, cfg=cfg, driving=driving, check_residual=check_residual)
    return Trace(tuple(map_grid(worker, grid, cfg.workers)), driving)


def min_gap(eps, t_end, cfg=None):
    """
    Minimum of |f(eps,t) - t**(1/3)| over (0, t_end] and its argmin.

    The sampled minimum is refined with a bounded scalar search between its neighbours.
    """
    cfg = cfg or SolverConfig()
    if eps == 0:
        raise PreconditionError("eps = 0 is the singular point of indefinite character")
    if not t_end > 0:
        raise PreconditionError(f"t_end must be positive, got {t_end}")
    flow = solve_forward(float(eps), 0.0, t_end, CUBE_ROOT, cfg)
    times = flow.times[1:]
    gaps = flow.gaps()[1:]
    k = min(range(len(gaps)), key=gaps.__getitem__)
    if 0 < k < len(gaps) - 1:
        left_t, left_f = flow.times[k], flow.values[k]

        def gap_at(t):
            if t <= left_t:
                return abs(left_f - math.cbrt(left_t))
            f = solve_forward(left_f, left_t, t, CUBE_ROOT, cfg, record_steps=False).final
            return abs(f - math.cbrt(t))

        found = minimize_scalar(gap_at, bounds=(left_t, times[k + 1]), method="bounded",
                                options={"xatol": 1e-3 * (times[k + 1] - left_t)})
        if found.success and found.fun < gaps[k]:
            return float(found.fun), float(found.x)
    return gaps[k], times[k]


def concatenation_check(z, t0, t, cfg=None):
    """|f(z,t) - h1(f(z,t0), t - t0)| where h1 runs under the shifted driving (t1 + t0)**(1/3)."""
    cfg = cfg or SolverConfig()
    if not 0 < t0 <= t:
        raise PreconditionError(f"need 0 < t0 <= t, got t0={t0}, t={t}")
    direct = complex(solve_forward(z, 0.0, t, CUBE_ROOT, cfg, record_steps=False).final)
    middle = complex(solve_forward(z, 0.0, t0, CUBE_ROOT, cfg, record_steps=False).final)
    if t == t0:
        return abs(direct - middle)
    shifted = DrivingSpec.shifted(t0)
    staged = complex(solve_forward(middle, 0.0, t - t0, shifted, cfg, record_steps=False).final)
    return abs(direct - staged)
