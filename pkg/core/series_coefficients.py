"""
Exact coefficient families of the cube-root Loewner equation.

Every recurrence runs in rational arithmetic (``fractions.Fraction`` and plain
``int``); floating point only enters through :func:`eval_series`.  Powers of
t0^(1/3) are carried symbolically by :class:`CubeSurd`.
"""
import functools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import pandas as pd

from core.errors import PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_N_MAX_CAP = 500

STEP_TAU = Fraction(1)
STEP_HALF = Fraction(1, 2)
STEP_THIRD = Fraction(1, 3)
STEPS = (STEP_TAU, STEP_HALF, STEP_THIRD)

FAMILIES = ("plus", "minus", "taylor", "branch_plus", "branch_minus", "holomorphic")


def as_fraction(value):
    """Exact rational from an int, Fraction, decimal string or float (via its shortest repr)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise PreconditionError(f"expected a finite number, got {value!r}")
        return Fraction(repr(value))
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise PreconditionError(f"cannot read {value!r} as an exact rational") from exc


def _integer_cube_root(n):
    if n < 0 or n.bit_length() > 900:
        return None
    guess = round(n ** (1 / 3))
    return next((r for r in (guess - 1, guess, guess + 1) if r >= 0 and r**3 == n), None)


def _rational_cube_root(value):
    num = _integer_cube_root(value.numerator)
    den = _integer_cube_root(value.denominator)
    if num is None or den is None:
        return None
    return Fraction(num, den)


@dataclass(frozen=True)
class CubeSurd:
    """Exact element p0 + p1*r + p2*r**2 of Q(r) with r = base**(1/3)."""

    base: Fraction
    parts: tuple

    def __post_init__(self):
        # perfect-cube bases fold into the rational part so equal values compare equal
        r = _rational_cube_root(self.base)
        if r is not None and (self.parts[1] or self.parts[2]):
            p0, p1, p2 = self.parts
            object.__setattr__(self, "parts", (p0 + p1 * r + p2 * r * r, Fraction(0), Fraction(0)))

    @classmethod
    def of(cls, base, value=0):
        return cls(Fraction(base), (Fraction(value), Fraction(0), Fraction(0)))

    @classmethod
    def root(cls, base):
        return cls(Fraction(base), (Fraction(0), Fraction(1), Fraction(0)))

    def _coerce(self, other):
        if isinstance(other, CubeSurd):
            if other.base != self.base:
                raise ValueError("cannot combine surds over different bases")
            return other
        if isinstance(other, (int, Fraction)):
            return CubeSurd.of(self.base, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return CubeSurd(self.base, tuple(a + b for a, b in zip(self.parts, other.parts)))

    __radd__ = __add__

    def __neg__(self):
        return CubeSurd(self.base, tuple(-a for a in self.parts))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return CubeSurd(self.base, tuple(a * other for a in self.parts))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a0, a1, a2 = self.parts
        b0, b1, b2 = other.parts
        base = self.base
        return CubeSurd(
            base,
            (
                a0 * b0 + base * (a1 * b2 + a2 * b1),
                a0 * b1 + a1 * b0 + base * a2 * b2,
                a0 * b2 + a1 * b1 + a2 * b0,
            ),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, (int, Fraction)):
            return NotImplemented
        return CubeSurd(self.base, tuple(a / other for a in self.parts))

    def is_zero(self):
        return not any(self.parts)

    def is_rational(self):
        return self.parts[1] == 0 and self.parts[2] == 0

    def rational_part(self):
        return self.parts[0]

    def __float__(self):
        r = math.cbrt(float(self.base))
        p0, p1, p2 = self.parts
        return float(p0) + float(p1) * r + float(p2) * r * r

    def to_mp(self, mp):
        r = mp.cbrt(mp.mpf(self.base.numerator) / self.base.denominator)
        return sum((mp.mpf(p.numerator) / p.denominator) * r**j for j, p in enumerate(self.parts))


def _is_zero(value):
    if isinstance(value, CubeSurd):
        return value.is_zero()
    return value == 0


@dataclass(frozen=True)
class ExactSeries:
    """
    Truncated formal series offset + sum_{n>=1} coeffs[n-1] * x**(n*step).

    Parameters:
    - step: basis exponent step, one of 1, 1/2, 1/3
    - coeffs: exact coefficients, dense from n = 1
    - offset: exact constant term
    - anchor: expansion point t0, present exactly for the half-power basis
    - family: name of the coefficient family that produced the series
    - parameter: t0 or eps the family was computed for
    """

    step: Fraction
    coeffs: tuple
    offset: object = Fraction(0)
    anchor: Fraction | None = None
    family: str = ""
    parameter: Fraction | None = None

    def __post_init__(self):
        if self.step not in STEPS:
            raise PreconditionError(f"basis step must be one of 1, 1/2, 1/3; got {self.step}")
        if (self.anchor is not None) != (self.step == STEP_HALF):
            raise PreconditionError("an anchor is required for, and only for, the half-power basis")
        if any(c is None for c in self.coeffs):
            raise PreconditionError("coefficient list must be dense")

    @property
    def n_max(self):
        return len(self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    def coefficient(self, n):
        """Coefficient of x**(n*step), n counted from 1."""
        if not 1 <= n <= len(self.coeffs):
            raise IndexError(f"index {n} outside 1..{len(self.coeffs)}")
        return self.coeffs[n - 1]

    def truncated(self, n):
        return ExactSeries(self.step, self.coeffs[:n], self.offset, self.anchor, self.family, self.parameter)


@dataclass(frozen=True)
class BoundReport:
    n: int
    lower: Fraction
    value: Fraction
    upper: Fraction
    ok: bool


def _check_order(n_max, cap, minimum=1):
    if not isinstance(n_max, int) or n_max < minimum:
        raise PreconditionError(f"series order must be an integer >= {minimum}, got {n_max!r}")
    if n_max > cap:
        raise PreconditionError(f"series order {n_max} exceeds the cap {cap}; raise n_max_cap to allow it")


@functools.lru_cache(maxsize=8)
def _plus_sequence(n_max):
    a = [0, 1, 6]
    for n in range(3, n_max + 1):
        a.append(-sum(k * a[k] * a[n + 1 - k] for k in range(2, n)))
    return tuple(a[1 : n_max + 1])


@functools.lru_cache(maxsize=8)
def _minus_sequence(n_max):
    a = [Fraction(0), Fraction(0), Fraction(-3)]
    for n in range(3, n_max + 1):
        a.append(Fraction(sum(k * a[k] * a[n + 1 - k] for k in range(2, n)), n))
    return tuple(a[1 : n_max + 1])


def singular_plus_coeffs(n_max, cap=DEFAULT_N_MAX_CAP):
    """Coefficients a_n+ of the singular solution through the origin with a_1 = 1 (integers)."""
    _check_order(n_max, cap)
    coeffs = tuple(Fraction(a) for a in _plus_sequence(n_max))
    return ExactSeries(STEP_TAU, coeffs, family="plus")


def singular_minus_coeffs(n_max, cap=DEFAULT_N_MAX_CAP):
    """Coefficients a_n- of the singular solution through the origin with a_1 = 0."""
    _check_order(n_max, cap)
    return ExactSeries(STEP_TAU, _minus_sequence(n_max), family="minus")


def _positive_anchor(t0):
    t0 = as_fraction(t0)
    if t0 <= 0:
        raise PreconditionError(f"expansion point must be a positive singular time, got t0={t0}")
    return t0


def _binomial_third(k):
    """Generalized binomial coefficient C(1/3, k)."""
    value = Fraction(1)
    for j in range(k):
        value *= (Fraction(1, 3) - j) / (j + 1)
    return value


def _cube_root_taylor_terms(t0, k_max):
    return [CubeSurd(t0, (Fraction(0), _binomial_third(k) / t0**k, Fraction(0))) for k in range(1, k_max + 1)]


def cube_root_taylor(t0, k_max, cap=DEFAULT_N_MAX_CAP):
    """
    Taylor coefficients c_k of t**(1/3) at t0, on the half-power basis.

    Entry 2k holds c_k = C(1/3, k) * t0**(1/3 - k); odd entries are zero.
    The offset is t0**(1/3).
    """
    t0 = _positive_anchor(t0)
    _check_order(k_max, cap)
    coeffs = []
    for c in _cube_root_taylor_terms(t0, k_max):
        coeffs.extend([CubeSurd.of(t0), c])
    return ExactSeries(STEP_HALF, tuple(coeffs), CubeSurd.root(t0), anchor=t0, family="taylor", parameter=t0)


def _half_power_driving(t0, n_max):
    """c_{n/2} for n = 0..n_max (index 0 unused)."""
    terms = _cube_root_taylor_terms(t0, n_max // 2 + 1)
    zero = CubeSurd.of(t0)
    c = [zero] * (n_max + 2)
    for k, term in enumerate(terms, start=1):
        if 2 * k <= n_max + 1:
            c[2 * k] = term
    return c


def branch_half_coeffs(t0, n_max, sign=1, cap=DEFAULT_N_MAX_CAP):
    """
    Coefficients b_{n/2} of the solutions branching at the singular point (t0**(1/3), t0).

    The plus branch starts with b_{1/2} = 2; the minus branch (sign=-1) is the
    other branch of (t - t0)**(n/2): odd-index coefficients change sign.
    """
    t0 = _positive_anchor(t0)
    _check_order(n_max, cap)
    if sign not in (1, -1):
        raise PreconditionError(f"branch sign must be +1 or -1, got {sign!r}")
    c = _half_power_driving(t0, n_max)
    b = [None, CubeSurd.of(t0, 2)]
    for n in range(2, n_max + 1):
        acc = CubeSurd.of(t0)
        for k in range(2, n):
            acc = acc + b[k] * (b[n + 1 - k] - c[n + 1 - k]) * k
        b.append((c[n] - acc / 2) / (n + 1))
    coeffs = tuple(-v if (sign == -1 and n % 2 == 1) else v for n, v in enumerate(b[1:], start=1))
    family = "branch_plus" if sign == 1 else "branch_minus"
    return ExactSeries(STEP_HALF, coeffs, CubeSurd.root(t0), anchor=t0, family=family, parameter=t0)


def holomorphic_coeffs(eps, n_max, cap=DEFAULT_N_MAX_CAP):
    """Coefficients a_n(eps) of the solution through the real point eps, in powers of t**(1/3)."""
    eps = as_fraction(eps)
    if eps == 0:
        raise PreconditionError("eps = 0 is the singular point of indefinite character; no holomorphic solution")
    _check_order(n_max, cap)
    a = [Fraction(0)] * (n_max + 1)
    for k in (3, 4, 5):
        if k <= n_max:
            a[k] = Fraction(6) / (k * eps ** (k - 2))
    for n in range(6, n_max + 1):
        convolution = sum((n - k) * a[n - k] * a[k] for k in range(3, n - 2))
        a[n] = ((n - 1) * a[n - 1] - convolution) / (n * eps)
    return ExactSeries(STEP_THIRD, tuple(a[1:]), eps, family="holomorphic", parameter=eps)


def _term(coeff, x, power):
    if _is_zero(coeff):
        return 0.0
    if x == 0:
        return 0.0
    try:
        return float(coeff) * x**power
    except OverflowError:
        value = Fraction(coeff)
        sign = 1.0 if value > 0 else -1.0
        if x < 0 and int(power) % 2 == 1:
            sign = -sign
        return sign * math.exp(log_abs(value) + power * math.log(abs(x)))


def eval_series(series, x, n_trunc=None):
    """
    Evaluate offset + sum_{n<=n_trunc} coeff_n * x**(n*step) in floating point.

    For the half-power basis x is the distance t - t0 from the anchor.
    """
    n_trunc = len(series) if n_trunc is None else n_trunc
    if not 0 <= n_trunc <= len(series):
        raise PreconditionError(f"n_trunc={n_trunc} outside 0..{len(series)}")
    if series.step != STEP_TAU and x < 0:
        raise PreconditionError(f"negative argument {x} with fractional basis step {series.step}")
    total = float(series.offset)
    for n in range(1, n_trunc + 1):
        total += _term(series.coeffs[n - 1], x, float(n * series.step))
    return total


def _convolve(a, b, zero):
    """Product of two coefficient lists indexed from exponent 0."""
    out = [zero] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if _is_zero(ai):
            continue
        for j, bj in enumerate(b):
            if not _is_zero(bj):
                out[i + j] = out[i + j] + ai * bj
    return out


@dataclass(frozen=True)
class Residual:
    """Residual of a truncated series in its defining equation, coefficient k at exponent k*step."""

    coeffs: tuple
    lowest_order: int | None


def _lowest(coeffs):
    return next((k for k, c in enumerate(coeffs) if not _is_zero(c)), None)


def series_residual(series):
    """
    Substitute a truncated series into the equation its family solves.

    - plus, minus: A'(tau) (A(tau) - tau) - 6 tau**2 = 0
    - holomorphic: A'(tau) (eps - tau + A(tau)) - 6 tau**2 = 0
    - branch_plus, branch_minus: f'(s) (f - s**(1/3) shifted) - 2 = 0 in powers of u = sqrt(t - t0)

    Returns a Residual whose lowest_order is the first non-vanishing exponent index.
    """
    n_max = len(series)
    if series.family in ("plus", "minus", "holomorphic"):
        a = [Fraction(0)] + list(series.coeffs)
        derivative = [n * a[n] for n in range(1, n_max + 1)]
        gap = list(a)
        gap[1] -= 1
        if series.family == "holomorphic":
            gap[0] += series.offset
        product = _convolve(derivative, gap, Fraction(0))
        if len(product) > 2:
            product[2] -= 6
        else:
            product.extend([Fraction(0)] * (3 - len(product)))
            product[2] -= 6
        return Residual(tuple(product), _lowest(product))
    if series.family in ("branch_plus", "branch_minus"):
        t0 = series.anchor
        zero = CubeSurd.of(t0)
        c = _half_power_driving(t0, n_max)
        b = [zero] + list(series.coeffs)
        gap = [zero] + [b[n] - c[n] for n in range(1, n_max + 1)]
        # d/ds of sum b_n u**n is sum (n/2) b_n u**(n-2); start the list at u**(-1)
        derivative = [b[n] * Fraction(n, 2) for n in range(1, n_max + 1)]
        product = _convolve(derivative, gap, zero)
        # product index k multiplies u**(k-1); drop the identically zero u**(-1) slot
        product = product[1:]
        product[0] = product[0] - 2
        return Residual(tuple(product), _lowest(product))
    raise PreconditionError(f"no defining equation for family {series.family!r}")


def lemma1_report(n_max, cap=DEFAULT_N_MAX_CAP):
    """Exact check of 6**(n-1) (n-1)! <= |a_n+| <= 12**(n-1) n**(n-3) for n = 2..n_max."""
    _check_order(n_max, cap, minimum=2)
    plus = _plus_sequence(n_max)
    reports = []
    for n in range(2, n_max + 1):
        lower = Fraction(6 ** (n - 1) * math.factorial(n - 1))
        upper = Fraction(12 ** (n - 1)) * Fraction(n) ** (n - 3)
        value = Fraction(abs(plus[n - 1]))
        reports.append(BoundReport(n, lower, value, upper, lower <= value <= upper))
    return reports


def log_abs(value):
    """Natural log of |value| for an exact rational of any size; -inf for zero."""
    value = Fraction(value)
    if value == 0:
        return -math.inf
    return math.log(abs(value.numerator)) - math.log(value.denominator)


def divergence_onset(series, tau):
    """
    Smallest n from which |a_n tau**n| increases strictly through the last computed index.

    Returns None when the terms are still decreasing at the end of the series.
    """
    if tau == 0:
        raise PreconditionError("divergence is only witnessed for tau != 0")
    logs = [log_abs(c) + n * math.log(abs(tau)) for n, c in enumerate(series.coeffs, start=1)]
    if len(logs) < 2 or not logs[-1] > logs[-2]:
        return None
    onset = len(logs) - 1
    while onset >= 1 and logs[onset] > logs[onset - 1]:
        onset -= 1
    return onset + 1


def denominators_divide_factorial(series):
    """Per index n, whether the denominator of the rational coefficient divides n!."""
    flags = []
    for n, c in enumerate(series.coeffs, start=1):
        if isinstance(c, CubeSurd):
            flags.append(all(math.factorial(n) % p.denominator == 0 for p in c.parts))
        else:
            flags.append(math.factorial(n) % Fraction(c).denominator == 0)
    return flags


def _components(value):
    if isinstance(value, CubeSurd):
        return [(Fraction(j, 3), p) for j, p in enumerate(value.parts) if p != 0]
    value = Fraction(value)
    return [(Fraction(0), value)] if value != 0 else []


def series_to_frame(series):
    """
    Exact export table: one row per non-zero component of every coefficient.

    Columns: n, numerator, denominator, exponent (n*step), t0_power (power of t0
    multiplying the component). Numbers are strings so no float ever appears.
    """
    rows = []
    entries = [(0, series.offset)] + list(enumerate(series.coeffs, start=1))
    for n, value in entries:
        components = _components(value) or ([] if n == 0 else [(Fraction(0), Fraction(0))])
        for t0_power, part in components:
            rows.append(
                {
                    "n": n,
                    "numerator": str(part.numerator),
                    "denominator": str(part.denominator),
                    "exponent": str(n * series.step),
                    "t0_power": str(t0_power),
                }
            )
    return pd.DataFrame(rows, columns=["n", "numerator", "denominator", "exponent", "t0_power"])


def compute_family(family, n_max, t0=1, eps=1, cap=DEFAULT_N_MAX_CAP):
    """Dispatch used by the CLI and the explorer."""
    if family == "plus":
        return singular_plus_coeffs(n_max, cap)
    if family == "minus":
        return singular_minus_coeffs(n_max, cap)
    if family == "taylor":
        return cube_root_taylor(t0, n_max, cap)
    if family == "branch_plus":
        return branch_half_coeffs(t0, n_max, 1, cap)
    if family == "branch_minus":
        return branch_half_coeffs(t0, n_max, -1, cap)
    if family == "holomorphic":
        return holomorphic_coeffs(eps, n_max, cap)
    raise PreconditionError(f"unknown coefficient family {family!r}; expected one of {', '.join(FAMILIES)}")
