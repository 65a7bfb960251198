import streamlit as st

# Page configuration must be the first Streamlit command
st.set_page_config(
    page_title="Cube-root Loewner Explorer",
    page_icon="📈",
    layout="wide",
    initial_sidebar_state="expanded"
)

from components.charts import create_charts, create_summary
from components.data_table import create_data_table
from components.sidebar import create_sidebar, run_study, store_result
from core.errors import LoewnerToolkitError
from utils.data_loader import get_sample_studies


def init_state():
    if 'data' not in st.session_state:
        st.session_state.data = None
    if 'meta' not in st.session_state:
        st.session_state.meta = {}
    if 'selected_study' not in st.session_state:
        st.session_state.selected_study = None
    if 'filters' not in st.session_state:
        st.session_state.filters = {}


def main_dashboard():
    col1, col2 = st.columns([7, 1])
    with col1:
        st.title("📈 Cube-root Loewner Explorer")
    with col2:
        if st.button("🏠 Home", use_container_width=True):
            st.session_state.data = None
            st.session_state.meta = {}
            st.session_state.selected_study = None
            st.session_state.filters = {}
            st.rerun()

    st.markdown("""
        <div style="border-bottom: 1px solid #e6e6e6; margin-bottom: 16px;"></div>
    """, unsafe_allow_html=True)

    create_sidebar()

    if st.session_state.data is None:
        st.info("👈 Pick a study in the sidebar or load an artifact written by the command line.")

        st.header("Preset Studies")
        studies = get_sample_studies()

        col1, col2 = st.columns(2)
        for i, study in enumerate(studies):
            with (col1 if i % 2 == 0 else col2):
                st.subheader(study["name"])
                st.caption(study["description"])
                if st.button(f"Run {study['name']}", key=f"btn_{study['subcommand']}"):
                    with st.spinner(f"Running {study['name']}..."):
                        try:
                            table, meta = run_study(study["subcommand"], study["params"])
                        except LoewnerToolkitError as e:
                            st.error(f"Study failed: {str(e)}")
                        else:
                            store_result(table, meta, study["name"])
                            st.rerun()
        return

    subcommand = st.session_state.meta.get("subcommand", "")

    tab1, tab2 = st.tabs(["Charts", "Data Table"])

    with tab1:
        create_summary(st.session_state.meta)
        create_charts(st.session_state.data, subcommand)

    with tab2:
        st.header("Data Table")
        create_data_table(st.session_state.data, file_name=f"{subcommand or 'study'}.csv")

    st.markdown("""
        <div style="border-top: 1px solid #e6e6e6; margin-top: 20px; padding-top: 10px; text-align: center; font-size: 0.8em;">
            Cube-root Loewner Explorer | Built with Streamlit
        </div>
    """, unsafe_allow_html=True)


def main():
    init_state()
    main_dashboard()


if __name__ == "__main__":
    main()
