"""Streamlit widgets of the explorer."""
