import cmath
import io
import json

import pandas as pd
import pytest

import cli
from core import analysis, verification
from core.analysis import RadiusEstimate
from utils.config import RunConfig


def run_cli(*argv):
    out = io.StringIO()
    code = cli.run(list(argv), stdout=out)
    return code, out.getvalue()


def test_coeffs_csv_rows():
    code, text = run_cli("coeffs", "--family", "plus", "--n", "10")
    assert code == cli.EXIT_OK
    lines = text.splitlines()
    assert lines[0].startswith("# config_hash: ")
    assert "n,numerator,denominator,exponent,t0_power" in lines
    assert "3,-72,1,3,0" in lines


def test_json_artifact_echoes_config():
    code, text = run_cli("coeffs", "--n", "5", "--format", "json")
    assert code == cli.EXIT_OK
    document = json.loads(text)
    assert document["columns"][0] == "n"
    assert len(document["rows"]) == 5
    config = RunConfig.from_dict(document["config"])
    assert config.subcommand == "coeffs"
    assert config.params["n"] == 5
    assert document["config_hash"] == config.digest()


def test_same_config_same_bytes():
    first = run_cli("coeffs", "--family", "minus", "--n", "12")
    second = run_cli("coeffs", "--family", "minus", "--n", "12")
    assert first == second


def test_changed_config_changes_hash():
    _, a = run_cli("coeffs", "--n", "5", "--format", "json")
    _, b = run_cli("coeffs", "--n", "6", "--format", "json")
    assert json.loads(a)["config_hash"] != json.loads(b)["config_hash"]


def test_usage_errors():
    assert run_cli("sideways")[0] == cli.EXIT_USAGE
    assert run_cli("coeffs", "--no-such-flag")[0] == cli.EXIT_USAGE
    assert run_cli("coeffs", "--n", "many")[0] == cli.EXIT_USAGE
    assert run_cli()[0] == cli.EXIT_USAGE


def test_help_lists_columns(capsys):
    assert run_cli("trace", "--help")[0] == cli.EXIT_OK
    assert "step_count" in capsys.readouterr().out


def test_indefinite_point_is_a_precondition(capsys):
    code, text = run_cli("radius", "--eps", "0")
    assert code == cli.EXIT_PRECONDITION
    assert text == ""
    assert "indefinite character" in capsys.readouterr().err


def test_monotonic_needs_ordered_times():
    assert run_cli("monotonic", "--t1", "1e-2", "--t0", "1e-3")[0] == cli.EXIT_PRECONDITION


def test_config_file_and_flag_precedence(tmp_path):
    config = tmp_path / "run.toml"
    config.write_text('rtol = 1e-8\nfamily = "minus"\nn = 4\n', encoding="utf-8")
    code, text = run_cli("coeffs", "--config", str(config), "--rtol", "1e-9", "--format", "json")
    assert code == cli.EXIT_OK
    document = json.loads(text)
    assert document["config"]["solver"]["rtol"] == 1e-9
    assert document["config"]["params"]["family"] == "minus"
    assert len(document["rows"]) == 4


def test_unknown_config_key(tmp_path, capsys):
    config = tmp_path / "run.toml"
    config.write_text("tolarence = 1e-8\n", encoding="utf-8")
    assert run_cli("coeffs", "--config", str(config))[0] == cli.EXIT_PRECONDITION
    assert "tolarence" in capsys.readouterr().err


def test_config_parse_error_location(tmp_path, capsys):
    config = tmp_path / "run.toml"
    config.write_text("rtol = 1e-8\nn = \n", encoding="utf-8")
    assert run_cli("coeffs", "--config", str(config))[0] == cli.EXIT_PRECONDITION
    assert "line 2" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert run_cli("coeffs", "--config", str(tmp_path / "absent.toml"))[0] == cli.EXIT_PRECONDITION


def test_output_directory_override(output_dir):
    code, text = run_cli("coeffs", "--n", "3", "--output", "sub/coeffs.csv")
    assert code == cli.EXIT_OK
    assert text == ""
    written = (output_dir / "sub" / "coeffs.csv").read_text(encoding="utf-8")
    assert "2,6,1,2,0" in written.splitlines()


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    code, _ = run_cli("coeffs", "--output", str(blocker / "coeffs.csv"))
    assert code == cli.EXIT_PRECONDITION


def test_zero_driving_flow():
    code, text = run_cli("flow", "--driving", "zero", "--z", "1+1j", "--t-end", "1", "--format", "json")
    assert code == cli.EXIT_OK
    document = json.loads(text)
    table = pd.DataFrame(document["rows"], columns=document["columns"])
    last = table.iloc[-1]
    assert complex(last["re"], last["im"]) == pytest.approx(cmath.sqrt(4 + 2j), rel=1e-8)
    assert document["summary"]["seed"] == "z=(1+1j)"


def test_solver_failure_exit_code(tmp_path):
    config = tmp_path / "run.toml"
    config.write_text("max_steps = 5\n", encoding="utf-8")
    assert run_cli("flow", "--config", str(config))[0] == cli.EXIT_SOLVER


def test_failed_check_exits_after_emitting(monkeypatch):
    failing = pd.DataFrame(
        [{"module": "analysis", "check": "stub", "value": 2.0, "bound": 1.0, "passed": False, "error": ""}],
        columns=verification.VERIFY_COLUMNS,
    )
    monkeypatch.setattr(verification, "run_checks", lambda cfg: failing)
    code, text = run_cli("verify-all")
    assert code == cli.EXIT_INVARIANT
    assert "analysis,stub,2,1,False," in text.splitlines()


def test_every_core_module_is_verified():
    assert {check.module for check in verification.CHECKS} == set(verification.VERIFIED_MODULES)


@pytest.mark.slow
def test_borel_subcommand():
    code, text = run_cli("borel", "--taus", "1e-3,1e-2", "--format", "json")
    assert code == cli.EXIT_OK
    document = json.loads(text)
    assert document["summary"]["pade"] == "8,8"
    for tau, value, estimate, reference, diff in document["rows"]:
        assert diff <= estimate + 1e-9


@pytest.mark.slow
def test_verify_all_passes():
    code, text = run_cli("verify-all", "--t-max", "1e-2", "--format", "json")
    assert code == cli.EXIT_OK
    document = json.loads(text)
    assert document["summary"]["checks"] == len(verification.CHECKS)
    assert set(document["summary"]["modules"].split(",")) == set(verification.VERIFIED_MODULES)


def test_radius_below_majorant_exits_after_emitting(monkeypatch):
    def estimate(method, value):
        return lambda eps, *args: RadiusEstimate(float(eps), method, value, 200, 0.0)

    monkeypatch.setattr(analysis, "radius_root_test", estimate("root_test", 0.5))
    monkeypatch.setattr(analysis, "radius_ratio_test", estimate("ratio_test", 0.5))
    monkeypatch.setattr(analysis, "majorant_lower_bound", estimate("cauchy_majorant", 0.8))
    code, text = run_cli("radius", "--eps", "1")
    assert code == cli.EXIT_INVARIANT
    assert any(line.startswith("1,root_test,0.5,") for line in text.splitlines())


def test_harmonic_deviation_above_bound_fails(monkeypatch):
    table = pd.DataFrame([{"t": 1e-6, "ratio": 30.0, "deviation": 0.6, "error": ""}], columns=analysis.SCAN_COLUMNS)
    monkeypatch.setattr(analysis, "ratio_scan", lambda grid, cfg: analysis.RatioScan(table, 60.0, 1 / 3))
    code, text = run_cli("harmonic", "--t-grid", "1e-6")
    assert code == cli.EXIT_INVARIANT
    assert "leading_constant" in text
