"""
Borel-Pade summation of the divergent singular-solution series.

G(xi) = sum a_n xi**n / n! is continued by a rational approximant and the
Laplace integral h(tau) = int_0^inf exp(-x) G(tau x) dx is evaluated with
mpmath's tanh-sinh quadrature in a private precision context.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
import pandas as pd

from core.errors import (
    PadeDegeneracyError,
    PoleOnRayError,
    PreconditionError,
    QuadratureError,
    SolverError,
)
from core.series_coefficients import STEP_TAU, log_abs

logger = logging.getLogger(__name__)

PADE_DPS = 40
DEFAULT_LADDER = ((8, 8), (6, 6), (10, 10))
_SCAN_STEP = 0.5
_SCAN_LIMIT = 2000.0


@dataclass(frozen=True)
class QuadConfig:
    """
    Laplace-integral settings.

    Parameters:
    - truncation: the ray is cut where exp(-x)|G(tau x)| drops below truncation * max
    - abs_tol: largest accepted quadrature error estimate
    - dps: working decimal digits
    - pieces: number of equal subintervals handed to the quadrature
    """

    truncation: float = 1e-16
    abs_tol: float = 1e-10
    dps: int = 30
    pieces: int = 8


# used for remainder slopes, where the quantity of interest is far below double precision
STRICT_QUAD = QuadConfig(truncation=1e-40, abs_tol=1e-30, dps=50, pieces=16)


@dataclass(frozen=True)
class BorelTransform:
    coeffs: tuple
    radius_estimate: float
    family: str = "plus"

    def __post_init__(self):
        if not self.radius_estimate > 0:
            raise SolverError(f"radius estimate must be positive, got {self.radius_estimate}")

    @property
    def n_max(self):
        return len(self.coeffs)

    def taylor(self):
        """Maclaurin coefficients from order 0 (the constant term is zero)."""
        return [Fraction(0)] + list(self.coeffs)

    def partial_sum(self, xi, n=None):
        n = self.n_max if n is None else n
        return sum(float(c) * xi**k for k, c in enumerate(self.coeffs[:n], start=1))


@dataclass(frozen=True)
class RationalApproximant:
    """[m/k] Pade approximant p(xi)/q(xi) with q(0) = 1; coefficients ascending, as mpf strings."""

    numerator: tuple
    denominator: tuple
    m: int
    k: int
    dps: int = PADE_DPS

    def __post_init__(self):
        if mpmath.mpf(self.denominator[0]) == 0:
            raise PadeDegeneracyError(f"[{self.m}/{self.k}] denominator vanishes at 0", (self.m, self.k))

    def _context(self):
        ctx = mpmath.MPContext()
        ctx.dps = self.dps
        return ctx

    def bind(self, ctx):
        """Evaluator in the given mpmath context, coefficients converted once."""
        p = [ctx.mpf(c) for c in reversed(self.numerator)]
        q = [ctx.mpf(c) for c in reversed(self.denominator)]
        return lambda xi: ctx.polyval(p, xi) / ctx.polyval(q, xi)

    def evaluate(self, xi, ctx=None):
        return self.bind(ctx or self._context())(xi)

    def __call__(self, xi):
        return float(self.evaluate(xi))

    @property
    def poles(self):
        if self.k == 0:
            return []
        coefficients = [float(mpmath.mpf(c)) for c in reversed(self.denominator)]
        return [complex(r) for r in np.roots(coefficients)]

    @property
    def positive_real_poles(self):
        return sorted(p.real for p in self.poles if p.real > 0 and abs(p.imag) <= 1e-8 * max(1.0, abs(p)))


@dataclass(frozen=True)
class BorelResult:
    tau: float
    value: float
    error_estimate: float
    order: tuple
    quad_error: float
    x_max: float
    poles: tuple = field(default_factory=tuple)


def _root_test_radius(coeffs):
    """exp(-B) from a fit log|c_n| = A + B n + C log n over the last half of the non-zero coefficients."""
    points = [(n, log_abs(c)) for n, c in enumerate(coeffs, start=1) if c != 0]
    tail = points[len(points) // 2 :]
    if len(tail) < 4:
        n, value = points[-1]
        return math.exp(-value / n)
    n = np.array([p[0] for p in tail], dtype=float)
    y = np.array([p[1] for p in tail])
    design = np.column_stack([np.ones_like(n), n, np.log(n)])
    (_, slope, _), *_ = np.linalg.lstsq(design, y, rcond=None)
    return math.exp(-slope)


def borel_transform(series):
    """Divide the plus (or minus) singular coefficients by n! exactly and attach a root-test radius."""
    if series.step != STEP_TAU:
        raise PreconditionError(f"Borel transform needs an integer-power series, got basis step {series.step}")
    if series.family not in ("plus", "minus"):
        raise PreconditionError(f"Borel transform is defined for the singular families, got {series.family!r}")
    coeffs = tuple(Fraction(c) / math.factorial(n) for n, c in enumerate(series.coeffs, start=1))
    radius = _root_test_radius(coeffs)
    logger.debug("Borel transform of %s to order %d: radius %.6g", series.family, len(coeffs), radius)
    if series.family == "plus" and len(coeffs) >= 50:
        logger.info("fitted Borel radius %.6g (a disk of radius 1/12 = %.6g is claimed)", radius, 1 / 12)
    return BorelTransform(coeffs, radius, series.family)


def _hankel_condition(ctx, taylor, m, k):
    def c(i):
        return taylor[i] if 0 <= i < len(taylor) else 0

    matrix = ctx.matrix(k, k)
    for i in range(k):
        for j in range(k):
            matrix[i, j] = c(m + 1 + i - (j + 1))
    return ctx.cond(matrix)


def pade_continuation(transform, m, k):
    """
    [m/k] rational approximant matching the transform through order m + k.

    Raises PadeDegeneracyError when the Hankel system is singular or too ill-conditioned
    for the working precision; pick a different (m, k) in that case.
    """
    if m < 0 or k < 0:
        raise PreconditionError(f"Pade orders must be non-negative, got ({m}, {k})")
    if m + k > transform.n_max:
        raise PreconditionError(f"[{m}/{k}] needs {m + k} coefficients, transform has {transform.n_max}")
    ctx = mpmath.MPContext()
    ctx.dps = PADE_DPS
    taylor = [ctx.mpf(c.numerator) / c.denominator for c in transform.taylor()[: m + k + 1]]
    if k == 0:
        return RationalApproximant(tuple(str(c) for c in taylor[: m + 1]), ("1",), m, 0)
    try:
        condition = _hankel_condition(ctx, taylor, m, k)
    except ZeroDivisionError as exc:
        raise PadeDegeneracyError(f"[{m}/{k}] Hankel system is singular; try different orders", (m, k)) from exc
    if condition > ctx.mpf(10) ** (PADE_DPS - 5):
        raise PadeDegeneracyError(
            f"[{m}/{k}] Hankel system has condition {float(condition):.3g}; try different orders", (m, k)
        )
    try:
        p, q = ctx.pade(taylor, m, k)
    except ZeroDivisionError as exc:
        raise PadeDegeneracyError(f"[{m}/{k}] Hankel system is singular; try different orders", (m, k)) from exc
    approximant = RationalApproximant(tuple(str(c) for c in p), tuple(str(c) for c in q), m, k)
    if approximant.positive_real_poles:
        logger.debug("[%d/%d] has positive real poles %s", m, k, approximant.positive_real_poles)
    return approximant


def _ray_cutoff(ctx, g, tau, truncation):
    """Smallest x past the integrand peak where exp(-x)|G(tau x)| < truncation * peak."""
    peak = ctx.mpf(0)
    x = 0.0
    cutoff = None
    threshold = ctx.mpf(truncation)
    while x <= _SCAN_LIMIT:
        magnitude = ctx.exp(-x) * abs(g(tau * x))
        if magnitude > peak:
            peak = magnitude
            cutoff = None
        elif x > 0 and magnitude < threshold * peak:
            cutoff = x
            break
        x += _SCAN_STEP
    if cutoff is None:
        raise QuadratureError(f"Laplace integrand at tau={tau} does not decay below the truncation level", math.inf)
    return cutoff


def _laplace(approximant, tau, quad):
    ctx = mpmath.MPContext()
    ctx.dps = quad.dps
    tau_mp = ctx.mpf(tau)
    g = approximant.bind(ctx)
    x_max = _ray_cutoff(ctx, g, tau_mp, quad.truncation)
    blocking = [p for p in approximant.positive_real_poles if p <= tau * x_max]
    if blocking:
        raise PoleOnRayError(
            f"[{approximant.m}/{approximant.k}] has poles {blocking} on the integration ray at tau={tau}", blocking
        )
    nodes = ctx.linspace(0, x_max, quad.pieces + 1)
    value, error = ctx.quad(lambda x: ctx.exp(-x) * g(tau_mp * x), nodes, error=True)
    if error > quad.abs_tol:
        raise QuadratureError(f"quadrature at tau={tau} reached only {float(error):.3g}", float(error))
    return ctx, value, float(error), x_max


def _continuations(transform, ladder):
    """Usable approximants along the ladder, with the failures logged."""
    for m, k in ladder:
        if m + k > transform.n_max:
            continue
        try:
            yield pade_continuation(transform, m, k)
        except PadeDegeneracyError as exc:
            logger.warning("Pade fallback: %s", exc)


def _borel_value(tau, transform, quad, ladder):
    """(ctx, value, error estimate, approximant, quad error, x_max) in working precision."""
    primary = None
    last_error = None
    for approximant in _continuations(transform, ladder):
        try:
            evaluated = _laplace(approximant, tau, quad)
        except (PoleOnRayError, QuadratureError) as exc:
            logger.warning("Pade fallback: %s", exc)
            last_error = exc
            continue
        if primary is None:
            primary = (approximant, evaluated)
            continue
        ctx, value, quad_error, x_max = primary[1]
        spread = abs(value - ctx.mpf(evaluated[1]))
        return ctx, value, float(spread) + quad_error, primary[0], quad_error, x_max
    if primary is None:
        if last_error is not None:
            raise last_error
        raise PadeDegeneracyError("no order on the Pade ladder produced a usable continuation", tuple(ladder))
    approximant, (ctx, value, quad_error, x_max) = primary
    logger.warning("only [%d/%d] succeeded; error estimate covers quadrature only", approximant.m, approximant.k)
    return ctx, value, quad_error, approximant, quad_error, x_max


def borel_sum(tau, transform, quad=None, ladder=DEFAULT_LADDER):
    """
    Borel sum h(tau) with an error estimate.

    The estimate is the spread between the first two usable ladder orders plus
    the quadrature error of the first.
    """
    quad = quad or QuadConfig()
    if tau < 0:
        raise PreconditionError(f"Borel sums are taken for tau >= 0, got {tau}")
    if tau == 0:
        return BorelResult(0.0, 0.0, 0.0, tuple(ladder[0]), 0.0, 0.0)
    _, value, error, approximant, quad_error, x_max = _borel_value(tau, transform, quad, ladder)
    return BorelResult(
        float(tau),
        float(value),
        error,
        (approximant.m, approximant.k),
        quad_error,
        float(x_max),
        tuple(approximant.positive_real_poles),
    )


def borel_remainder(tau, transform, n, quad=STRICT_QUAD, ladder=DEFAULT_LADDER):
    """h(tau) - sum_{k<=n} a_k tau**k, with the subtraction done in working precision."""
    if not 0 <= n <= transform.n_max:
        raise PreconditionError(f"partial-sum order {n} outside 0..{transform.n_max}")
    if tau == 0:
        return 0.0
    ctx, value, *_ = _borel_value(tau, transform, quad, ladder)
    tau_mp = ctx.mpf(tau)
    partial = ctx.mpf(0)
    for k, c in enumerate(transform.coeffs[:n], start=1):
        a_k = c * math.factorial(k)
        partial += ctx.mpf(a_k.numerator) / a_k.denominator * tau_mp**k
    return float(value - partial)


def borel_table(taus, transform, quad=None, cfg=None, with_ode=True, ladder=DEFAULT_LADDER):
    """
    Rows tau, borel_sum, error_estimate, ode_reference, abs_diff.

    The ODE reference is the singular solution of the same family read at t = tau**3.
    """
    from core.loewner_dynamics import solve_singular

    rows = []
    for tau in taus:
        result = borel_sum(float(tau), transform, quad, ladder)
        reference = math.nan
        if with_ode and tau > 0:
            flow = solve_singular(transform.family, None, float(tau) ** 3, cfg, record_steps=False)
            reference = flow.final
        rows.append(
            {
                "tau": float(tau),
                "borel_sum": result.value,
                "error_estimate": result.error_estimate,
                "ode_reference": reference,
                "abs_diff": abs(result.value - reference) if with_ode else math.nan,
            }
        )
    return pd.DataFrame(rows, columns=["tau", "borel_sum", "error_estimate", "ode_reference", "abs_diff"])
