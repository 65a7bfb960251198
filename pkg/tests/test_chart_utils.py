import math

import pandas as pd
import plotly.graph_objects as go
import pytest

from core.analysis import majorant_profile
from core.series_coefficients import series_to_frame, singular_minus_coeffs, singular_plus_coeffs
from utils.chart_utils import (
    coefficient_magnitudes,
    create_coefficient_growth,
    create_deviation_plot,
    create_line_chart,
    create_majorant_profile,
    create_trace_plot,
    growth_envelope,
)


def test_coefficient_magnitudes():
    magnitudes = coefficient_magnitudes(series_to_frame(singular_plus_coeffs(4)))
    assert list(magnitudes["n"]) == [1, 2, 3, 4]
    assert magnitudes["log10_abs"].tolist() == pytest.approx([0, math.log10(6), math.log10(72), math.log10(2160)])


def test_zero_coefficients_are_dropped():
    magnitudes = coefficient_magnitudes(series_to_frame(singular_minus_coeffs(3)))
    assert list(magnitudes["n"]) == [2, 3]


def test_growth_envelope_meets_at_two():
    lower, upper = growth_envelope([2, 10])
    assert lower[0] == pytest.approx(math.log10(6))
    assert upper[0] == pytest.approx(math.log10(6))
    assert lower[1] < upper[1]


def test_figures_are_built():
    assert isinstance(create_coefficient_growth(series_to_frame(singular_plus_coeffs(10))), go.Figure)
    trace = pd.DataFrame({"t": [1e-4, 1e-3], "re": [0.01, 0.05], "im": [0.02, 0.06], "residual": [1e-9, 1e-9]})
    assert isinstance(create_trace_plot(trace), go.Figure)
    scan = pd.DataFrame({"t": [1e-6, 1e-7], "deviation": [0.17, 0.08]})
    assert isinstance(create_deviation_plot(scan), go.Figure)
    assert isinstance(create_majorant_profile(majorant_profile(1e-2, 40), optimum=0.54), go.Figure)
    assert isinstance(create_line_chart(scan, "t", "deviation", log_x=True), go.Figure)


def test_missing_columns_give_no_figure():
    empty = pd.DataFrame({"x": [1.0]})
    assert create_trace_plot(empty) is None
    assert create_deviation_plot(empty) is None
    assert create_line_chart(empty, "x", "y") is None
    assert create_coefficient_growth(empty) is None
    assert create_deviation_plot(pd.DataFrame({"t": [1e-6], "deviation": [0.0]})) is None
