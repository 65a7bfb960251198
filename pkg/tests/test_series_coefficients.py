import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from core.errors import PreconditionError
from core.series_coefficients import (
    CubeSurd,
    ExactSeries,
    STEP_HALF,
    as_fraction,
    branch_half_coeffs,
    compute_family,
    cube_root_taylor,
    denominators_divide_factorial,
    divergence_onset,
    eval_series,
    holomorphic_coeffs,
    lemma1_report,
    series_residual,
    series_to_frame,
    singular_minus_coeffs,
    singular_plus_coeffs,
)

positive_rationals = st.fractions(min_value=Fraction(1, 100), max_value=Fraction(50), max_denominator=100)
nonzero_rationals = st.fractions(min_value=Fraction(-20), max_value=Fraction(20), max_denominator=30).filter(
    lambda x: abs(x) >= Fraction(1, 30)
)


def test_plus_low_orders_exact():
    plus = singular_plus_coeffs(4)
    assert plus.coeffs == (1, 6, -72, 2160)
    assert all(isinstance(c, Fraction) and c.denominator == 1 for c in plus.coeffs)


def test_minus_low_orders_exact():
    minus = singular_minus_coeffs(5)
    assert minus.coeffs == (0, -3, 6, Fraction(-45, 2), Fraction(513, 5))


def test_plus_coefficients_are_integers():
    assert all(c.denominator == 1 for c in singular_plus_coeffs(60).coeffs)


def test_minus_denominators_divide_factorial_up_to_six():
    assert all(denominators_divide_factorial(singular_minus_coeffs(6)))


def test_growth_bounds_hold_through_fifty():
    reports = lemma1_report(50)
    assert [r.n for r in reports] == list(range(2, 51))
    assert all(r.ok for r in reports)
    assert reports[0].lower == reports[0].value == 6


@given(st.integers(min_value=2, max_value=80))
def test_growth_bounds_property(n):
    report = lemma1_report(n)[-1]
    assert report.n == n
    assert report.lower <= report.value <= report.upper


@pytest.mark.parametrize("factory", [singular_plus_coeffs, singular_minus_coeffs])
def test_singular_residual_vanishes_through_order(factory):
    n = 30
    residual = series_residual(factory(n))
    assert residual.lowest_order is None or residual.lowest_order >= n
    assert all(c == 0 for c in residual.coeffs[: n])


def test_holomorphic_residual_at_one():
    n = 30
    residual = series_residual(holomorphic_coeffs(1, n))
    assert residual.lowest_order is None or residual.lowest_order >= n - 1


@given(nonzero_rationals)
def test_holomorphic_residual_property(eps):
    n = 12
    residual = series_residual(holomorphic_coeffs(eps, n))
    assert residual.lowest_order is None or residual.lowest_order >= n - 1


def test_holomorphic_first_terms():
    series = holomorphic_coeffs(Fraction(1, 2), 6)
    assert series.coeffs[:5] == (0, 0, 4, 6, Fraction(48, 5))
    assert holomorphic_coeffs(1, 6).coefficient(6) == -1
    assert series.offset == Fraction(1, 2)


def test_holomorphic_leading_order_law():
    eps = Fraction(1, 10**12)
    series = holomorphic_coeffs(eps, 10)
    for n in range(3, 11):
        scaled = series.coefficient(n) * eps ** (n - 2)
        assert float(scaled) == pytest.approx(6 / n, abs=1e-6)


def test_holomorphic_rejects_indefinite_point():
    with pytest.raises(PreconditionError, match="indefinite character"):
        holomorphic_coeffs(0, 10)


def test_cube_root_taylor_at_perfect_cube():
    series = cube_root_taylor(8, 3)
    assert series.step == STEP_HALF
    assert series.offset.rational_part() == 2 and series.offset.is_rational()
    assert series.coefficient(1).is_zero()
    assert series.coefficient(2).rational_part() == Fraction(1, 12)
    assert series.coefficient(4).rational_part() == Fraction(-1, 288)


def test_cube_root_taylor_matches_float():
    series = cube_root_taylor(Fraction(3, 2), 6)
    for dt in (1e-3, 1e-2):
        assert eval_series(series, dt) == pytest.approx(math.cbrt(1.5 + dt), rel=1e-12)


@pytest.mark.parametrize("t0", [Fraction(1, 2), Fraction(1), Fraction(2)])
@pytest.mark.parametrize("side", [1, -1])
def test_cube_root_taylor_within_next_term(t0, side):
    k_max = 6
    series = cube_root_taylor(t0, k_max + 1)
    x = side * float(t0) / 10
    partial = float(series.offset) + sum(float(series.coefficient(2 * k)) * x**k for k in range(1, k_max + 1))
    next_term = abs(float(series.coefficient(2 * k_max + 2)) * x ** (k_max + 1))
    assert abs(partial - math.cbrt(float(t0) + x)) <= 2 * next_term + 1e-15


def test_branch_low_orders_at_one():
    plus = branch_half_coeffs(1, 4)
    assert plus.coefficient(1).rational_part() == 2
    assert plus.coefficient(2).rational_part() == Fraction(1, 9)
    minus = branch_half_coeffs(1, 4, sign=-1)
    assert minus.coefficient(1).rational_part() == -2
    assert minus.coefficient(2) == plus.coefficient(2)
    assert minus.coefficient(3) == -plus.coefficient(3)


@given(positive_rationals, st.sampled_from([1, -1]))
def test_branch_residual_property(t0, sign):
    n = 10
    residual = series_residual(branch_half_coeffs(t0, n, sign))
    assert residual.lowest_order is None or residual.lowest_order >= n - 1


def test_branch_requires_positive_time():
    with pytest.raises(PreconditionError):
        branch_half_coeffs(0, 5)
    with pytest.raises(PreconditionError):
        branch_half_coeffs(-1, 5)


def test_cube_surd_arithmetic_and_folding():
    r = CubeSurd.root(2)
    assert (r * r * r).is_rational()
    assert (r * r * r).rational_part() == 2
    assert float(r * 3 - 1) == pytest.approx(3 * math.cbrt(2) - 1)
    assert CubeSurd.root(27) == CubeSurd.of(27, 3)
    with pytest.raises(ValueError):
        r + CubeSurd.root(3)


def test_as_fraction_reads_strings_and_floats():
    assert as_fraction("1/3") == Fraction(1, 3)
    assert as_fraction(0.1) == Fraction(1, 10)
    assert as_fraction("1e-3") == Fraction(1, 1000)
    with pytest.raises(PreconditionError):
        as_fraction("one third")
    with pytest.raises(PreconditionError):
        as_fraction(math.inf)


def test_eval_series_truncation():
    plus = singular_plus_coeffs(3)
    assert eval_series(plus, 0.1) == pytest.approx(0.1 + 0.06 - 0.072)
    assert eval_series(plus, 0.1, n_trunc=1) == pytest.approx(0.1)
    with pytest.raises(PreconditionError):
        eval_series(plus, 0.1, n_trunc=4)


def test_eval_series_survives_huge_coefficients():
    plus = singular_plus_coeffs(300)
    assert eval_series(plus, 1e-4) == pytest.approx(1e-4 + 6e-8 - 72e-12, rel=1e-8)


def test_divergence_onset_is_witnessed():
    plus = singular_plus_coeffs(40)
    onset = divergence_onset(plus, 0.05)
    assert onset is not None and 1 <= onset < 40
    assert divergence_onset(singular_plus_coeffs(5), 1e-6) is None
    with pytest.raises(PreconditionError):
        divergence_onset(plus, 0)


def test_series_to_frame_plus():
    frame = series_to_frame(singular_plus_coeffs(10))
    assert list(frame.columns) == ["n", "numerator", "denominator", "exponent", "t0_power"]
    assert list(frame["n"]) == list(range(1, 11))
    row = frame[frame["n"] == 3].iloc[0]
    assert (row.numerator, row.denominator, row.exponent, row.t0_power) == ("-72", "1", "3", "0")


def test_series_to_frame_carries_surds():
    frame = series_to_frame(cube_root_taylor(2, 2))
    offset = frame[frame["n"] == 0].iloc[0]
    assert (offset.numerator, offset.denominator, offset.t0_power) == ("1", "1", "1/3")
    first = frame[frame["n"] == 2].iloc[0]
    assert (first.numerator, first.denominator, first.exponent, first.t0_power) == ("1", "6", "1", "1/3")


@pytest.mark.parametrize("family", ["plus", "minus", "taylor", "branch_plus", "branch_minus", "holomorphic"])
def test_compute_family_dispatch(family):
    series = compute_family(family, 6, t0=Fraction(1, 8), eps=Fraction(1, 2))
    assert series.family == family
    assert len(series) == (12 if family == "taylor" else 6)


def test_order_limits():
    with pytest.raises(PreconditionError, match="unknown coefficient family"):
        compute_family("sideways", 5)
    with pytest.raises(PreconditionError):
        singular_plus_coeffs(0)
    with pytest.raises(PreconditionError, match="cap"):
        singular_plus_coeffs(20, cap=10)


def test_exact_series_invariants():
    with pytest.raises(PreconditionError):
        ExactSeries(STEP_HALF, (Fraction(1),))
    with pytest.raises(PreconditionError):
        ExactSeries(Fraction(1, 4), (Fraction(1),))
    truncated = singular_plus_coeffs(10).truncated(3)
    assert truncated.coeffs == (1, 6, -72)
