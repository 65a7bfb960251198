import cmath
import math

import pytest

from core.errors import PreconditionError
from core.loewner_dynamics import (
    CUBE_ROOT,
    DrivingSpec,
    concatenation_check,
    hydrodynamic_constant,
    map_grid,
    min_gap,
    prime_end_residual,
    singular_seed_time,
    solve_branch,
    solve_forward,
    solve_singular,
    trace_curve,
    trace_point,
    zero_driving_closed_form,
)
from core.series_coefficients import singular_plus_coeffs
from utils.config import SolverConfig

ZERO = DrivingSpec.zero()


def test_closed_form_reference_value():
    assert zero_driving_closed_form(1 + 1j, 1.0) == pytest.approx(cmath.sqrt(4 + 2j))
    assert zero_driving_closed_form(-1.0, 1.0) == pytest.approx(-math.sqrt(5))


def test_zero_driving_flow_matches_closed_form(cfg):
    samples = [k / 20 for k in range(1, 21)]
    flow = solve_forward(1 + 1j, 0.0, 1.0, ZERO, cfg, t_samples=samples)
    for t in samples:
        assert flow.at(t) == pytest.approx(zero_driving_closed_form(1 + 1j, t), rel=1e-8)
    assert flow.stats.rejected >= 0


@pytest.mark.parametrize("z", [2.0, -1.0])
def test_zero_driving_real_points_stay_real(cfg, z):
    flow = solve_forward(z, 0.0, 1.0, ZERO, cfg)
    assert isinstance(flow.final, float)
    assert flow.final == pytest.approx(zero_driving_closed_form(z, 1.0).real, rel=1e-8)


def test_absorbed_point_reaches_driving(cfg):
    flow = solve_forward(2j, 0.0, 1.0, ZERO, cfg, absorb=True)
    assert abs(flow.final) < 1e-7


def test_forward_preconditions(cfg):
    with pytest.raises(PreconditionError):
        solve_forward(1 - 1j, 0.0, 1e-2, CUBE_ROOT, cfg)
    with pytest.raises(PreconditionError):
        solve_forward(1 + 1j, 1e-2, 1e-3, CUBE_ROOT, cfg)
    with pytest.raises(PreconditionError, match="driving point"):
        solve_forward(0.0, 0.0, 1e-2, CUBE_ROOT, cfg)


def test_forward_flow_lowers_imaginary_part(cfg):
    flow = solve_forward(1 + 1j, 0.0, 1e-2, CUBE_ROOT, cfg)
    imag = [complex(f).imag for f in flow.values]
    assert all(b <= a for a, b in zip(imag, imag[1:]))
    resolved = [(t, y) for t, y in zip(flow.times, imag) if t >= 1e-12]
    assert all(b < a for (_, a), (_, b) in zip(resolved, resolved[1:]))
    assert imag[-1] > 0
    assert list(flow.to_frame().columns) == ["t", "re", "im", "gap"]
    with pytest.raises(KeyError):
        flow.at(0.123)


def test_hydrodynamic_normalization():
    cfg = SolverConfig(rtol=1e-13, atol=1e-15)
    t = 1e-2
    expected = 1.5 * t ** (4 / 3)
    for radius in (10.0, 30.0, 100.0):
        assert hydrodynamic_constant(radius * 1j, t, cfg) == pytest.approx(expected, rel=0.1)


def test_seed_time_balances_first_omitted_term():
    t_seed = singular_seed_time("plus", 4, 1e-12)
    a5 = abs(float(singular_plus_coeffs(5).coefficient(5)))
    assert a5 == 93312
    assert a5 * t_seed ** (5 / 3) == pytest.approx(1e-12, rel=1e-9)


def test_singular_solution_follows_series(cfg):
    tau = 1e-3
    flow = solve_singular("plus", t_end=tau**3, cfg=cfg)
    series = tau + 6 * tau**2 - 72 * tau**3 + 2160 * tau**4
    assert abs(flow.final - series) <= 2e-10
    assert flow.seed.kind == "singular"
    assert "singular plus" in flow.seed.describe()


@pytest.mark.slow
def test_singular_solution_forgets_its_seed(cfg):
    early = solve_singular("plus", 1e-9, 1e-3, cfg, record_steps=False).final
    later = solve_singular("plus", 2.5e-10, 1e-3, cfg, record_steps=False).final
    assert early == pytest.approx(later, rel=1e-9)


@pytest.mark.slow
def test_singular_solutions_bracket_driving(cfg):
    t = 1e-3
    plus = solve_singular("plus", t_end=t, cfg=cfg).final
    minus = solve_singular("-", t_end=t, cfg=cfg).final
    assert minus < math.cbrt(t) < plus


def test_singular_preconditions(cfg):
    with pytest.raises(PreconditionError):
        solve_singular("sideways", t_end=1e-3, cfg=cfg)
    with pytest.raises(PreconditionError):
        solve_singular("plus", 1e-3, 1e-3, cfg)


@pytest.mark.slow
def test_branch_solutions_move_apart(cfg):
    t0 = 1e-3
    plus = solve_branch(t0, 1, 1e-2, cfg)
    minus = solve_branch(t0, "-", 1e-2, cfg)
    assert all(f > math.cbrt(t) for t, f in zip(plus.times, plus.values))
    assert all(f < math.cbrt(t) for t, f in zip(minus.times, minus.values))
    assert all(b > a for a, b in zip(plus.values, plus.values[1:]))
    assert all(b < a for a, b in zip(minus.values, minus.values[1:]))


@pytest.mark.slow
def test_branch_gap_grows_like_square_root(cfg):
    t0 = 1e-3
    offsets = (1e-6, 1e-5)
    flow = solve_branch(t0, 1, 2e-3, cfg, t_samples=[t0 + d for d in offsets])
    gaps = [flow.at(t0 + d) - math.cbrt(t0 + d) for d in offsets]
    slope = math.log(gaps[1] / gaps[0]) / math.log(offsets[1] / offsets[0])
    assert slope == pytest.approx(0.5, abs=0.05)


def test_branch_preconditions(cfg):
    with pytest.raises(PreconditionError):
        solve_branch(1e-2, 1, 1e-3, cfg)
    with pytest.raises(PreconditionError):
        solve_branch(1e-3, 1, 1.0, cfg)


def test_trace_of_zero_driving(cfg):
    for t in (1e-3, 1e-2, 0.5):
        assert trace_point(t, cfg, ZERO) == pytest.approx(2j * math.sqrt(t), abs=1e-6)


@pytest.mark.slow
def test_trace_point_is_prime_end(sharp_cfg):
    t = 1e-3
    gamma = trace_point(t, sharp_cfg)
    assert gamma.imag > 0
    assert prime_end_residual(gamma, t, sharp_cfg) <= 1e-6


@pytest.mark.slow
def test_trace_curve_on_grid(cfg):
    trace = trace_curve([1e-4, 1e-3, 1e-2], cfg)
    assert len(trace) == 3 and not trace.failed
    frame = trace.to_frame()
    assert list(frame.columns) == ["t", "re", "im", "step_count", "residual"]
    assert (frame["im"] > 0).all()
    assert all(abs(a) < abs(b) for a, b in zip(trace.gammas, trace.gammas[1:]))
    assert (frame["residual"] <= cfg.trace_residual_tol).all()


@pytest.mark.slow
def test_default_tolerances_resolve_the_tip_on_dyadic_grid():
    cfg = SolverConfig()
    trace = trace_curve([1e-4 * 2**k for k in range(7)], cfg)
    assert not trace.failed
    assert max(p.residual for p in trace.points) <= 1e-6


@pytest.mark.slow
def test_trace_point_ignores_caller_sharpness(cfg, sharp_cfg):
    t = 1e-3
    assert trace_point(t, cfg) == trace_point(t, sharp_cfg)


def test_trace_preconditions(cfg):
    with pytest.raises(PreconditionError):
        trace_curve([1e-3, 1e-4], cfg)
    with pytest.raises(PreconditionError):
        trace_curve([], cfg)
    with pytest.raises(PreconditionError):
        trace_point(0.0, cfg)
    with pytest.raises(PreconditionError):
        trace_point(1.0, cfg)


@pytest.mark.slow
def test_flow_concatenates_under_shifted_driving(cfg):
    assert concatenation_check(1 + 1j, 1e-3, 1e-2, cfg) < 1e-8
    assert concatenation_check(1 + 1j, 1e-3, 1e-3, cfg) == 0.0


def test_min_gap(cfg):
    gap, at = min_gap(1.0, 1e-2, cfg)
    assert 0 < gap < 1.0
    assert 0 < at <= 1e-2
    with pytest.raises(PreconditionError, match="indefinite character"):
        min_gap(0, 1e-2, cfg)


def test_min_gap_right_of_driving_stays_open(cfg):
    gap, at = min_gap(0.1, 1e-2, cfg)
    assert gap > 0
    assert 0 < at <= 1e-2


def test_min_gap_left_of_driving_only_widens(cfg):
    flow = solve_forward(-0.1, 0.0, 1e-2, CUBE_ROOT, cfg)
    gaps = flow.gaps()[1:]
    assert all(b >= a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] > gaps[0] > 0.1
    gap, at = min_gap(-0.1, 1e-2, cfg)
    assert gap == pytest.approx(gaps[0])
    assert at == pytest.approx(flow.times[1])
    assert gap < abs(flow.final - math.cbrt(1e-2))


def test_driving_spec_validation():
    assert DrivingSpec.shifted(1e-3).value(0.0) == pytest.approx(0.1)
    assert ZERO.derivative(1.0) == 0
    with pytest.raises(PreconditionError):
        DrivingSpec("square_root")
    with pytest.raises(PreconditionError):
        DrivingSpec("shifted_cube_root")
    with pytest.raises(PreconditionError):
        DrivingSpec("zero", 1.0)


def test_map_grid_keeps_order():
    items = [-3, 1, -2, 5]
    assert map_grid(abs, items) == [3, 1, 2, 5]
    assert map_grid(abs, items, workers=2) == [3, 1, 2, 5]


@pytest.mark.slow
def test_multiprecision_flow(cfg):
    mp_cfg = cfg.replace(precision="mp", mp_dps=30, rtol=1e-14, atol=1e-16)
    flow = solve_forward(1 + 1j, 0.0, 1.0, ZERO, mp_cfg, record_steps=False)
    assert complex(flow.final) == pytest.approx(cmath.sqrt(4 + 2j), rel=1e-10)
