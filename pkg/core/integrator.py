"""
Embedded Dormand-Prince 5(4) stepper for scalar (real or complex) ODEs.

The number type is pluggable: plain floats/complex for double precision or an
isolated mpmath context for extended precision runs.
"""
import cmath
import logging
import math
from dataclasses import dataclass, field

import mpmath

from core.errors import SolverError, StepSizeUnderflowError

logger = logging.getLogger(__name__)

# Dormand & Prince (1980) tableau
_C = (0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0)
_B_LOW = (5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b - bl for b, bl in zip(_B, _B_LOW))

_SAFETY = 0.9
_GROW_MAX = 5.0
_SHRINK_MIN = 0.2


@dataclass(frozen=True)
class Arithmetic:
    """Number system a flow is integrated in."""

    name: str
    real: object
    complex: object
    cbrt: object
    sqrt: object
    real_sqrt: object
    ctx: object = None

    def scalar(self, value):
        if self.ctx is None:
            return value
        return self.ctx.mpf(value)

    def to_python(self, value):
        """Convert a state back to a Python float or complex."""
        if self.ctx is None:
            return value
        if isinstance(value, self.ctx.mpc):
            return complex(value)
        return float(value)


DOUBLE = Arithmetic("double", float, complex, math.cbrt, cmath.sqrt, math.sqrt)


def arithmetic_for(cfg):
    """Arithmetic selected by SolverConfig.precision; mp runs get a private mpmath context."""
    if cfg.precision == "double":
        return DOUBLE
    ctx = mpmath.MPContext()
    ctx.dps = cfg.mp_dps
    return Arithmetic("mp", ctx.mpf, ctx.mpc, ctx.cbrt, ctx.sqrt, ctx.sqrt, ctx)


@dataclass
class StepStats:
    steps: int = 0
    rejected: int = 0
    min_step: float = math.inf

    def merge(self, other):
        self.steps += other.steps
        self.rejected += other.rejected
        self.min_step = min(self.min_step, other.min_step)
        return self


@dataclass
class Solution:
    xs: list = field(default_factory=list)
    ys: list = field(default_factory=list)
    stats: StepStats = field(default_factory=StepStats)

    @property
    def final(self):
        return self.ys[-1]


def _initial_step(y0, f0, span, rtol, atol):
    scale = atol + rtol * abs(y0)
    d0 = abs(y0) / scale
    d1 = abs(f0) / scale
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6 * span
    else:
        h = 0.01 * d0 / d1
    return min(float(h), span)


def dormand_prince(
    rhs,
    x0,
    y0,
    x1,
    *,
    rtol,
    atol,
    h_min=0.0,
    max_steps=100000,
    sample_at=None,
    record_steps=True,
    guard=None,
    arithmetic=DOUBLE,
):
    """
    Integrate y' = rhs(x, y) from x0 to x1 (either direction).

    Parameters:
    - sample_at: positions strictly between x0 and x1 (in integration order) where
      the state is recorded exactly; steps are clipped to land on them
    - record_steps: record every accepted step as well
    - guard: callable(x, y) run after every accepted step; may raise

    Returns a Solution whose first entry is (x0, y0) and last entry (x1, y(x1))
    """
    direction = 1.0 if x1 >= x0 else -1.0
    span = abs(float(x1 - x0))
    solution = Solution([x0], [y0])
    if span == 0:
        return solution

    scalar = arithmetic.scalar
    c = [scalar(v) for v in _C]
    a = [[scalar(v) for v in row] for row in _A]
    b = [scalar(v) for v in _B]
    e = [scalar(v) for v in _E]

    pending = list(sample_at or [])
    stats = solution.stats
    x, y = x0, y0
    k1 = rhs(x, y)
    h = _initial_step(y0, k1, span, rtol, atol)

    while direction * float(x1 - x) > 0:
        if stats.steps + stats.rejected >= max_steps:
            raise SolverError(f"step budget of {max_steps} exhausted at x={float(x):.6g}")
        target = pending[0] if pending else x1
        remaining = abs(float(target - x))
        clipped = h >= remaining
        step = remaining if clipped else h
        if step < h_min and not clipped:
            raise StepSizeUnderflowError(f"step size {step:.3g} fell below h_min at x={float(x):.6g}", float(x), step)

        hs = scalar(direction * step)
        k = [k1]
        for i in range(1, 7):
            yi = y + hs * sum(a[i][j] * k[j] for j in range(i))
            k.append(rhs(x + c[i] * hs, yi))
        y_new = y + hs * sum(b[j] * k[j] for j in range(6))
        err = abs(hs * sum(e[j] * k[j] for j in range(7)))
        scale = atol + rtol * max(abs(y), abs(y_new))
        ratio = float(err / scale) if scale else float(err) * 1e300

        if ratio <= 1.0:
            x = target if clipped else x + hs
            y = y_new
            k1 = k[6]
            stats.steps += 1
            stats.min_step = min(stats.min_step, step)
            if guard is not None:
                guard(x, y)
            if clipped and pending:
                pending.pop(0)
                solution.xs.append(x)
                solution.ys.append(y)
            elif record_steps or not direction * float(x1 - x) > 0:
                solution.xs.append(x)
                solution.ys.append(y)
            factor = _GROW_MAX if ratio == 0 else min(_GROW_MAX, max(_SHRINK_MIN, _SAFETY * ratio**-0.2))
            h = max(h, step * factor) if clipped else step * factor
        else:
            stats.rejected += 1
            h = step * max(_SHRINK_MIN, _SAFETY * ratio**-0.2)

    if solution.xs[-1] != x1:
        solution.xs.append(x1)
        solution.ys.append(y)
    logger.debug(
        "dormand_prince %s -> %s: %d steps, %d rejected, min step %.3g",
        float(x0),
        float(x1),
        stats.steps,
        stats.rejected,
        stats.min_step,
    )
    return solution
