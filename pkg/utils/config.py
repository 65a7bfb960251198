import dataclasses
import difflib
import hashlib
import json
import os
import re
import tomllib
from dataclasses import dataclass, field
from pathlib import Path

from core.errors import ConfigError

OUTPUT_DIR_ENV = "LOEWNER_OUTPUT_DIR"
FORMATS = ("csv", "json", "text")


@dataclass(frozen=True)
class SolverConfig:
    """
    Numerical knobs shared by every solver.

    Parameters:
    - rtol, atol: local error tolerances of the embedded Runge-Kutta pair
    - min_gap: smallest admissible |f - lambda| before an approach to the hull is reported
    - h_min, max_steps: step-size floor and step budget per integration phase
    - tau_switch: below tau = t^(1/3) = tau_switch the flow is integrated in tau
    - t_max: largest time any study may request
    - n_seed, seed_bound: order and target truncation size of singular-solution seeds
    - branch_delta_floor, branch_delta_rel: branch seeding offset max(floor, rel * t0)
    - seed_residual_tol: admissible relative residual of a branch seed in the ODE
    - trace_sigma0, trace_s_switch: start and end (relative to t) of the sqrt-substituted
      phase of the backward flow
    - trace_residual_tol: prime-end residual above which a trace point is flagged
    - precision: "double" or "mp" (mpmath arithmetic with mp_dps digits)
    - workers: process pool size for grid sweeps (1 runs serially)
    - n_max_cap: largest series order computed without an explicit override
    - small_t: the "t small enough" window of the asymptotic checks
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    min_gap: float = 1e-10
    h_min: float = 1e-18
    max_steps: int = 200000
    tau_switch: float = 1e-2
    t_max: float = 1e-1
    n_seed: int = 4
    seed_bound: float = 1e-12
    branch_delta_floor: float = 1e-8
    branch_delta_rel: float = 1e-4
    seed_residual_tol: float = 1e-8
    trace_sigma0: float = 1e-8
    trace_s_switch: float = 1e-2
    trace_residual_tol: float = 1e-6
    precision: str = "double"
    mp_dps: int = 30
    workers: int = 1
    n_max_cap: int = 500
    small_t: float = 1e-2

    def __post_init__(self):
        if self.rtol <= 0 or self.atol < 0:
            raise ConfigError(f"tolerances must be positive, got rtol={self.rtol}, atol={self.atol}")
        if self.precision not in ("double", "mp"):
            raise ConfigError(f"precision must be 'double' or 'mp', got {self.precision!r}")
        if self.n_seed < 1:
            raise ConfigError(f"n_seed must be at least 1, got {self.n_seed}")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def tolerance(self):
        """Scale used when comparing solver outputs: the looser of the two tolerances."""
        return max(self.rtol, self.atol)


SOLVER_KEYS = tuple(f.name for f in dataclasses.fields(SolverConfig))

# Documented parameter defaults of every subcommand (flat namespace)
PARAMETER_DEFAULTS = {
    "family": "plus",
    "n": 10,
    "t0": "1",
    "eps": "1",
    "taus": [1e-3, 1e-2],
    "pade": "8,8",
    "z": "1+1j",
    "t_start": 0.0,
    "t_end": 1e-2,
    "driving": "cube_root",
    "shift": 1e-3,
    "seed": "regular",
    "sign": "+",
    "t_lo": 1e-4,
    "t_hi": 1e-2,
    "points": 9,
    "t_grid": [1e-3, 1e-4, 1e-5, 1e-6],
    "t1": 1e-4,
    "t": 1e-2,
    "levels": 2,
    "n_max": 200,
}

RUN_KEYS = ("subcommand", "format", "output")
KNOWN_KEYS = RUN_KEYS + SOLVER_KEYS + tuple(PARAMETER_DEFAULTS)


def _canonical(value):
    if isinstance(value, tuple):
        return [_canonical(v) for v in value]
    if isinstance(value, list):
        return [_canonical(v) for v in value]
    return value


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved description of one CLI run; its digest identifies the artifact."""

    subcommand: str
    params: dict = field(default_factory=dict)
    solver: SolverConfig = field(default_factory=SolverConfig)
    format: str = "csv"
    output: str | None = None

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {', '.join(FORMATS)}, got {self.format!r}")

    def param(self, name):
        return self.params.get(name, PARAMETER_DEFAULTS[name])

    def to_dict(self):
        return {
            "subcommand": self.subcommand,
            "params": {k: _canonical(self.params[k]) for k in sorted(self.params)},
            "solver": dataclasses.asdict(self.solver),
            "format": self.format,
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - {"subcommand", "params", "solver", "format", "output"}
        if unknown:
            raise ConfigError(f"unknown run-config fields: {', '.join(sorted(unknown))}")
        return cls(
            subcommand=data["subcommand"],
            params=dict(data.get("params", {})),
            solver=SolverConfig(**data.get("solver", {})),
            format=data.get("format", "csv"),
            output=data.get("output"),
        )

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def output_path(self):
        """Resolve the output path, honouring the output-directory environment override."""
        if self.output is None:
            return None
        path = Path(self.output)
        base = os.environ.get(OUTPUT_DIR_ENV)
        if base and not path.is_absolute():
            path = Path(base) / path
        return path


def _reject_unknown(keys):
    for key in keys:
        if key not in KNOWN_KEYS:
            hint = difflib.get_close_matches(key, KNOWN_KEYS, n=1)
            suffix = f"; did you mean {hint[0]!r}?" if hint else ""
            raise ConfigError(f"unknown configuration key {key!r}{suffix}")


def parse_config_text(text):
    """Parse a flat key = value (TOML) document into a plain dict."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        match = re.search(r"line (\d+), column (\d+)", str(exc))
        line, column = (int(match.group(1)), int(match.group(2))) if match else (None, None)
        message = re.sub(r"\s*\(at line \d+, column \d+\)", "", str(exc))
        raise ConfigError(f"cannot parse configuration: {message}", line, column) from exc
    for key, value in data.items():
        if isinstance(value, dict):
            raise ConfigError(f"configuration must be flat; key {key!r} holds a table")
    _reject_unknown(data)
    return data


def build_run_config(values, subcommand=None):
    """Split a flat mapping into run fields, solver knobs and parameters."""
    _reject_unknown(values)
    solver_values = {k: v for k, v in values.items() if k in SOLVER_KEYS}
    params = {k: v for k, v in values.items() if k in PARAMETER_DEFAULTS}
    try:
        solver = SolverConfig(**solver_values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(
        subcommand=subcommand or values.get("subcommand", ""),
        params=params,
        solver=solver,
        format=values.get("format", "csv"),
        output=values.get("output"),
    )


def load_config(path, overrides=None, subcommand=None):
    """
    Load a flat configuration file and apply flag overrides.

    Parameters:
    - path: file to read, or None for documented defaults only
    - overrides: mapping of keys given on the command line; they win over file values
    - subcommand: subcommand name recorded in the resolved config

    Returns a RunConfig
    """
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read configuration file {path}: {exc}") from exc
        values.update(parse_config_text(text))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return build_run_config(values, subcommand=subcommand)
