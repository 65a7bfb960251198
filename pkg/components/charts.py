import math

import streamlit as st

from core.analysis import majorant_profile
from core.errors import LoewnerToolkitError
from utils.chart_utils import (
    create_coefficient_growth, create_deviation_plot, create_line_chart,
    create_majorant_profile, create_trace_plot
)
from utils.data_loader import filter_data


def _show(fig):
    if fig:
        st.plotly_chart(fig, use_container_width=True)


def create_summary(meta):
    """
    Show the scalar results and the resolved configuration of a study

    Parameters:
    - meta: dict with summary, failures and config_hash entries
    """
    summary = meta.get("summary") or {}
    if summary:
        columns = st.columns(min(len(summary), 4))
        for i, (key, value) in enumerate(sorted(summary.items())):
            with columns[i % len(columns)]:
                shown = f"{value:.6g}" if isinstance(value, float) else str(value)
                st.metric(label=key, value=shown)

    for failure in meta.get("failures") or []:
        st.warning(f"Check failed: {failure}")

    if meta.get("config_hash"):
        with st.expander("Resolved configuration"):
            st.caption(f"config hash {meta['config_hash']}")
            st.json(meta.get("config", {}))


def _radius_profile(data):
    """Majorant profile for the first positive eps in a radius table."""
    eps_values = [e for e in data["eps"].dropna().unique() if e > 0]
    if not eps_values:
        return
    eps = float(eps_values[0])
    optimum = data.loc[data["method"] == "cauchy_majorant", "c"]
    c = float(optimum.iloc[0]) if len(optimum) and not math.isnan(optimum.iloc[0]) else None
    try:
        profile = majorant_profile(eps)
    except LoewnerToolkitError as e:
        st.error(f"Cannot build the majorant profile: {str(e)}")
        return
    _show(create_majorant_profile(profile, optimum=c, title=f"Majorant bound profile at eps = {eps:g}"))


def create_charts(data, subcommand):
    """
    Create the charts that fit a study's table

    Parameters:
    - data: DataFrame produced by one subcommand
    - subcommand: the subcommand that produced it
    """
    filtered_data = filter_data(data, st.session_state.filters) if hasattr(st.session_state, 'filters') else data

    if filtered_data is None or len(filtered_data) == 0:
        st.warning("No data available for visualization.")
        return

    if subcommand == "coeffs":
        config = (st.session_state.get("meta") or {}).get("config", {})
        family = config.get("params", {}).get("family", "plus")
        _show(create_coefficient_growth(filtered_data, envelope=family == "plus",
                                        title=f"Coefficient growth ({family})"))

    elif subcommand == "borel":
        _show(create_line_chart(filtered_data, "tau", "borel_sum", title="Borel sum h(tau)"))
        positive = filtered_data[filtered_data["abs_diff"] > 0]
        if len(positive):
            _show(create_line_chart(positive, "tau", "abs_diff", title="Distance to the singular flow",
                                    log_x=True, log_y=True))

    elif subcommand in ("flow", "trace"):
        _show(create_trace_plot(filtered_data))
        if "gap" in filtered_data.columns:
            _show(create_line_chart(filtered_data, "t", "gap", title="|f - lambda(t)|", log_x=True, log_y=True))
        elif "residual" in filtered_data.columns and filtered_data["residual"].notna().any():
            _show(create_line_chart(filtered_data, "t", "residual", title="Prime-end residual",
                                    log_x=True, log_y=True))

    elif subcommand == "harmonic":
        _show(create_deviation_plot(filtered_data))

    elif subcommand == "radius":
        _show(create_line_chart(filtered_data, "method", "value", title="Radius estimates"))
        _radius_profile(filtered_data)

    elif subcommand == "smoothness":
        _show(create_line_chart(filtered_data, "segments", "max_angle", title="Max turning angle",
                                log_x=True, log_y=True))

    elif subcommand == "monotonic":
        _show(create_line_chart(filtered_data, "lower", "margin", title="Ordering margins"))

    elif subcommand == "verify-all":
        passed = int(filtered_data["passed"].astype(bool).sum())
        st.metric(label="checks passed", value=f"{passed} / {len(filtered_data)}")

    else:
        st.info("No chart for this table; see the Data Table tab.")
