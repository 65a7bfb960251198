import math
from fractions import Fraction

import numpy as np
import pandas as pd
import plotly.express as px
import plotly.graph_objects as go
import streamlit as st

from core.series_coefficients import log_abs

LOG10 = math.log(10)


def _missing(df, *columns):
    absent = [c for c in columns if c not in df.columns]
    if absent:
        st.warning(f"Columns {', '.join(absent)} not found in the data.")
    return bool(absent)


def coefficient_magnitudes(df):
    """
    log10 |a_n| per index from an exact coefficient table

    Parameters:
    - df: table with n, numerator, denominator columns (one row per component)

    Returns DataFrame with n and log10_abs; zero coefficients are dropped
    """
    values = {}
    for row in df.itertuples(index=False):
        if int(row.n) == 0:
            continue
        values[int(row.n)] = values.get(int(row.n), Fraction(0)) + Fraction(int(row.numerator), int(row.denominator))
    rows = [{"n": n, "log10_abs": log_abs(v) / LOG10} for n, v in sorted(values.items()) if v != 0]
    return pd.DataFrame(rows, columns=["n", "log10_abs"])


def growth_envelope(n_values):
    """log10 of 6**(n-1) (n-1)! and 12**(n-1) n**(n-3)"""
    n = np.asarray(n_values, dtype=float)
    lower = ((n - 1) * math.log(6) + np.array([math.lgamma(v) for v in n])) / LOG10
    upper = ((n - 1) * math.log(12) + (n - 3) * np.log(n)) / LOG10
    return lower, upper


def create_coefficient_growth(df, envelope=True, title=None):
    """Create log10 |a_n| against n, optionally between the factorial growth bounds"""
    if _missing(df, "n", "numerator", "denominator"):
        return None
    magnitudes = coefficient_magnitudes(df)
    if magnitudes.empty:
        st.warning("All coefficients are zero.")
        return None

    fig = go.Figure()
    fig.add_trace(go.Scatter(x=magnitudes["n"], y=magnitudes["log10_abs"], mode="markers+lines",
                             name="log10 |a_n|"))
    if envelope:
        n = magnitudes["n"][magnitudes["n"] >= 2]
        lower, upper = growth_envelope(n)
        fig.add_trace(go.Scatter(x=n, y=lower, mode="lines", name="6^(n-1) (n-1)!", line=dict(dash="dash")))
        fig.add_trace(go.Scatter(x=n, y=upper, mode="lines", name="12^(n-1) n^(n-3)", line=dict(dash="dot")))

    fig.update_layout(
        title=title if title else "Coefficient growth",
        xaxis_title="n",
        yaxis_title="log10 |a_n|",
        autosize=True
    )
    return fig


def create_trace_plot(df, title=None):
    """Create the trace in the complex plane from re/im columns"""
    if _missing(df, "re", "im"):
        return None
    points = df.dropna(subset=["re", "im"])
    fig = px.line(
        points, x="re", y="im",
        markers=True,
        hover_data=[c for c in ("t", "residual") if c in points.columns],
        title=title if title else "Trace gamma(t)"
    )
    fig.update_layout(
        xaxis_title="Re",
        yaxis_title="Im",
        autosize=True
    )
    fig.update_yaxes(scaleanchor="x", scaleratio=1)
    return fig


def create_deviation_plot(df, constant=18.0, title=None):
    """Create |m1/m2^2 / 6pi - 1| against t on log-log axes with a C t^(1/3) reference line"""
    if _missing(df, "t", "deviation"):
        return None
    points = df[pd.to_numeric(df["deviation"], errors="coerce") > 0]
    if points.empty:
        st.warning("No positive deviations to plot.")
        return None

    t = points["t"].astype(float)
    fig = go.Figure()
    fig.add_trace(go.Scatter(x=t, y=points["deviation"], mode="markers+lines", name="deviation"))
    fig.add_trace(go.Scatter(x=t, y=constant * np.cbrt(t), mode="lines", name=f"{constant:g} t^(1/3)",
                             line=dict(dash="dash")))
    fig.update_layout(
        title=title if title else "Harmonic-measure ratio deviation",
        xaxis_title="t",
        yaxis_title="|ratio / 6 pi - 1|",
        xaxis_type="log",
        yaxis_type="log",
        autosize=True
    )
    return fig


def create_majorant_profile(df, optimum=None, title=None):
    """Create R1/eps against c = r/eps, marking the maximizing c"""
    if _missing(df, "c", "r1_over_eps"):
        return None
    fig = px.line(df, x="c", y="r1_over_eps", title=title if title else "Majorant bound profile")
    if optimum is not None:
        fig.add_vline(x=optimum, line_dash="dash", annotation_text=f"c = {optimum:.4f}")
    fig.update_layout(
        xaxis_title="c = r1 / eps",
        yaxis_title="R1 / eps",
        autosize=True
    )
    return fig


def create_line_chart(df, x_col, y_col, title=None, log_x=False, log_y=False):
    """Create a line chart"""
    if _missing(df, x_col, y_col):
        return None

    fig = px.line(
        df, x=x_col, y=y_col,
        markers=True,
        log_x=log_x,
        log_y=log_y,
        title=title if title else f"{y_col} over {x_col}"
    )

    fig.update_layout(
        xaxis_title=x_col,
        yaxis_title=y_col,
        autosize=True
    )

    return fig
