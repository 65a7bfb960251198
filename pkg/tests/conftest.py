import os

import hypothesis
import pytest

from utils.config import SolverConfig

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=50, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fast"))


@pytest.fixture
def cfg():
    return SolverConfig()


@pytest.fixture
def sharp_cfg():
    """Tighter tolerances for checks whose quantity is the square root of the flow error."""
    return SolverConfig(rtol=1e-12, atol=1e-15)


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("LOEWNER_OUTPUT_DIR", str(tmp_path))
    return tmp_path
