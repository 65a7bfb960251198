import math

import pandas as pd
import streamlit as st

from cli import COMMANDS, complete_params
from core.errors import LoewnerToolkitError
from utils.config import build_run_config
from utils.data_loader import get_sample_studies, handle_uploaded_file, is_log_scaled


def run_study(subcommand, params, solver=None):
    """
    Run one CLI study in-process

    Parameters:
    - subcommand: name of the study, as on the command line
    - params: parameter overrides (flat keys)
    - solver: SolverConfig overrides (flat keys)

    Returns (table, meta) where meta carries config, config_hash, summary and failures
    """
    values = dict(params)
    values.update(solver or {})
    run_config = complete_params(build_run_config(values, subcommand))
    table, summary, failures = COMMANDS[subcommand](run_config)
    meta = {
        "subcommand": subcommand,
        "config": run_config.to_dict(),
        "config_hash": run_config.digest(),
        "summary": summary,
        "failures": failures,
    }
    return table, meta


def store_result(table, meta, name):
    st.session_state.data = table if isinstance(table, pd.DataFrame) else pd.DataFrame(table)
    st.session_state.meta = meta
    st.session_state.selected_study = name
    st.session_state.filters = {}


def _parameter_inputs(study):
    """Widgets for the parameters a preset exposes; returns the edited values."""
    edited = {}
    for key, value in study["params"].items():
        widget_key = f"param_{study['subcommand']}_{key}"
        if isinstance(value, str):
            edited[key] = st.text_input(key, value=str(value), key=widget_key)
        elif isinstance(value, int):
            edited[key] = int(st.number_input(key, value=value, step=1, key=widget_key))
        elif isinstance(value, float):
            edited[key] = float(st.number_input(key, value=value, format="%.3e", key=widget_key))
        else:
            text = st.text_input(f"{key} (comma-separated)", value=",".join(f"{v:g}" for v in value), key=widget_key)
            edited[key] = [float(v) for v in text.split(",") if v.strip()]
    return edited


def create_sidebar():
    """
    Create the sidebar with study selection, artifact upload and filtering options
    """
    with st.sidebar:
        st.title("Controls")

        st.header("Study")

        run_tab, upload_tab = st.tabs(["Run Study", "Load Artifact"])

        with run_tab:
            studies = get_sample_studies()
            selected_name = st.selectbox(
                "Select a study",
                options=[study["name"] for study in studies],
                index=0
            )
            study = next(s for s in studies if s["name"] == selected_name)
            st.caption(study["description"])

            try:
                params = _parameter_inputs(study)
            except ValueError as e:
                st.error(f"Invalid parameter: {str(e)}")
                params = None

            rtol = st.select_slider("rtol", options=[1e-8, 1e-9, 1e-10, 1e-11, 1e-12], value=1e-10)

            if params is not None and st.button("Run Study"):
                with st.spinner(f"Running {selected_name}..."):
                    try:
                        table, meta = run_study(study["subcommand"], params, {"rtol": rtol})
                    except LoewnerToolkitError as e:
                        st.error(f"Study failed: {str(e)}")
                    else:
                        store_result(table, meta, selected_name)
                        st.success(f"Finished {selected_name}")
                        st.rerun()

        with upload_tab:
            st.markdown("""
            ### Upload an artifact
            CSV or JSON tables written by the `loewner-cuberoot` command line.
            """)

            uploaded_file = st.file_uploader(
                "Upload a CSV or JSON artifact",
                type=["csv", "json"]
            )

            if uploaded_file is not None and st.button("Load Uploaded Artifact"):
                try:
                    table, meta = handle_uploaded_file(uploaded_file.name, uploaded_file.getvalue())
                except LoewnerToolkitError as e:
                    st.error(f"Failed to load the file: {str(e)}")
                else:
                    meta["subcommand"] = meta.get("config", {}).get("subcommand", "")
                    meta.setdefault("failures", [])
                    store_result(table, meta, uploaded_file.name)
                    st.success(f"Successfully loaded {uploaded_file.name}")
                    st.rerun()

        if st.session_state.selected_study:
            st.info(f"Current study: {st.session_state.selected_study}")

        if st.session_state.data is not None:
            data = st.session_state.data

            st.header("Filters")
            numeric_cols = data.select_dtypes(include=['number']).columns.tolist()

            for col in numeric_cols[:3]:
                values = data[col].dropna()
                if values.empty:
                    continue
                min_val = float(values.min())
                max_val = float(values.max())
                if min_val == max_val:
                    continue

                if is_log_scaled(values):
                    lo_exp, hi_exp = math.log10(min_val), math.log10(max_val)
                    picked = st.slider(
                        f"Filter by {col} (log10)",
                        min_value=lo_exp,
                        max_value=hi_exp,
                        value=(lo_exp, hi_exp)
                    )
                    changed = picked != (lo_exp, hi_exp)
                    filter_val = (10 ** picked[0], 10 ** picked[1])
                else:
                    filter_val = st.slider(
                        f"Filter by {col}",
                        min_value=min_val,
                        max_value=max_val,
                        value=(min_val, max_val)
                    )
                    changed = filter_val != (min_val, max_val)

                if changed:
                    st.session_state.filters[col] = filter_val
                elif col in st.session_state.filters:
                    del st.session_state.filters[col]

            if st.session_state.filters and st.button("Reset All Filters"):
                st.session_state.filters = {}
                st.rerun()

        st.sidebar.markdown("---")
        if st.sidebar.button("🏠 Return to Home", use_container_width=True):
            st.session_state.data = None
            st.session_state.meta = {}
            st.session_state.selected_study = None
            st.session_state.filters = {}
            st.rerun()

        st.sidebar.markdown("---")
        st.sidebar.subheader("About")
        st.sidebar.info(
            "Explore the Loewner flow driven by t^(1/3): exact series coefficients, Borel sums, "
            "the slit trace, harmonic measures and convergence radii."
        )
