import pytest

from core.errors import ConfigError
from utils.config import (
    OUTPUT_DIR_ENV,
    PARAMETER_DEFAULTS,
    RunConfig,
    SolverConfig,
    build_run_config,
    load_config,
    parse_config_text,
)


def test_solver_defaults():
    cfg = SolverConfig()
    assert (cfg.rtol, cfg.atol, cfg.precision, cfg.workers) == (1e-10, 1e-12, "double", 1)
    assert cfg.tolerance == 1e-10
    assert cfg.replace(rtol=1e-8).rtol == 1e-8


def test_solver_validation():
    with pytest.raises(ConfigError):
        SolverConfig(rtol=0)
    with pytest.raises(ConfigError):
        SolverConfig(precision="quad")
    with pytest.raises(ConfigError):
        SolverConfig(n_seed=0)


def test_parse_flat_document():
    data = parse_config_text('rtol = 1e-9\nfamily = "minus"\ntaus = [1e-3, 1e-2]\n')
    assert data == {"rtol": 1e-9, "family": "minus", "taus": [1e-3, 1e-2]}


def test_parse_rejects_unknown_and_nested_keys():
    with pytest.raises(ConfigError, match="did you mean 'atol'"):
        parse_config_text("atoll = 1e-9\n")
    with pytest.raises(ConfigError, match="flat"):
        parse_config_text("[solver]\nrtol = 1e-9\n")


def test_parse_error_carries_location():
    with pytest.raises(ConfigError) as info:
        parse_config_text("rtol = 1e-9\nn = \n")
    assert info.value.line == 2
    assert "line 2" in str(info.value)


def test_build_splits_values():
    config = build_run_config({"rtol": 1e-8, "n": 7, "format": "json"}, subcommand="coeffs")
    assert config.solver.rtol == 1e-8
    assert config.params == {"n": 7}
    assert config.format == "json"
    assert config.param("family") == PARAMETER_DEFAULTS["family"]
    with pytest.raises(ConfigError):
        build_run_config({"format": "xml"})


def test_run_config_round_trip_and_digest():
    config = build_run_config({"n": 7, "taus": (1e-3, 1e-2)}, subcommand="borel")
    restored = RunConfig.from_dict(config.to_dict())
    assert restored.digest() == config.digest()
    changed = build_run_config({"n": 8, "taus": (1e-3, 1e-2)}, subcommand="borel")
    assert changed.digest() != config.digest()
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"subcommand": "coeffs", "colour": "blue"})


def test_flags_override_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("rtol = 1e-8\nn = 4\n", encoding="utf-8")
    config = load_config(path, {"rtol": 1e-11, "n": None}, subcommand="coeffs")
    assert config.solver.rtol == 1e-11
    assert config.params["n"] == 4
    assert load_config(None, subcommand="coeffs").solver == SolverConfig()


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.toml")


def test_output_path(monkeypatch, tmp_path):
    config = build_run_config({"output": "out/table.csv"}, subcommand="coeffs")
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    assert str(config.output_path()) == "out/table.csv"
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
    assert config.output_path() == tmp_path / "out" / "table.csv"
    absolute = build_run_config({"output": str(tmp_path / "abs.csv")}, subcommand="coeffs")
    assert absolute.output_path() == tmp_path / "abs.csv"
    assert build_run_config({}, subcommand="coeffs").output_path() is None
