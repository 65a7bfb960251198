import io
import json
import math
from pathlib import Path

import numpy as np
import pandas as pd

from core.errors import ArtifactError, PreconditionError

FLOAT_FORMAT = "%.17g"
ARTIFACT_FORMATS = ("csv", "json", "text")
HEADER_PREFIX = "# "
LOG_SPAN_DECADES = 2
RANGE_SLACK = 1e-9


def get_sample_studies():
    """
    Return the preset studies offered by the explorer.
    Each study names a CLI subcommand and the parameters it runs with.
    """
    return [
        {
            "name": "Singular coefficients",
            "description": "Exact a_n of the plus solution through the origin",
            "subcommand": "coeffs",
            "params": {"family": "plus", "n": 40},
        },
        {
            "name": "Borel sums",
            "description": "Borel-Pade sums against the singular ODE solution",
            "subcommand": "borel",
            "params": {"family": "plus", "n_max": 60, "taus": [1e-3, 1e-2, 5e-2]},
        },
        {
            "name": "Trace of the slit",
            "description": "gamma(t) on a geometric grid with prime-end residuals",
            "subcommand": "trace",
            "params": {"t_lo": 1e-4, "t_hi": 1e-2, "points": 9},
        },
        {
            "name": "Harmonic measures",
            "description": "m1 / m2**2 against 6 pi as t decreases",
            "subcommand": "harmonic",
            "params": {"t_grid": [1e-3, 1e-4, 1e-5, 1e-6]},
        },
        {
            "name": "Convergence radius",
            "description": "Root test, ratio test and majorant bound near eps",
            "subcommand": "radius",
            "params": {"eps": "1/1000", "n_max": 200},
        },
    ]


def _as_frame(rows, columns=None):
    if isinstance(rows, pd.DataFrame):
        return rows if columns is None else rows.reindex(columns=columns)
    rows = list(rows)
    if rows and columns is None:
        keys = list(rows[0])
        if any(list(row) != keys for row in rows):
            raise PreconditionError("table rows must share the same columns")
    return pd.DataFrame(rows, columns=columns)


def _json_value(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return value


def _header_lines(config, summary):
    lines = []
    if config is not None:
        lines.append(f"{HEADER_PREFIX}config_hash: {config.digest()}")
        lines.append(f"{HEADER_PREFIX}config: {config.canonical_json()}")
    for key in sorted(summary or {}):
        value = summary[key]
        if isinstance(value, float):
            value = FLOAT_FORMAT % value
        lines.append(f"{HEADER_PREFIX}{key}: {value}")
    return lines


def render_table(rows, fmt="csv", config=None, summary=None, columns=None):
    """
    Render a table as text.

    Parameters:
    - rows: DataFrame or list of homogeneous dicts
    - fmt: "csv", "json" or "text"
    - config: RunConfig echoed into the artifact (hash and resolved values)
    - summary: extra scalar results (fitted constants and such)
    - columns: column order, needed for an empty list of rows

    Returns the rendered string; identical inputs give identical bytes
    """
    if fmt not in ARTIFACT_FORMATS:
        raise PreconditionError(f"unknown format {fmt!r}; expected one of {', '.join(ARTIFACT_FORMATS)}")
    table = _as_frame(rows, columns)

    if fmt == "json":
        document = {
            "columns": [str(c) for c in table.columns],
            "rows": [[_json_value(v) for v in row] for row in table.itertuples(index=False, name=None)],
            "summary": {k: _json_value(v) for k, v in sorted((summary or {}).items())},
        }
        if config is not None:
            document["config"] = config.to_dict()
            document["config_hash"] = config.digest()
        return json.dumps(document, sort_keys=True, indent=2, allow_nan=False) + "\n"

    header = _header_lines(config, summary)
    if fmt == "csv":
        body = table.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    else:
        body = table.to_string(index=False, float_format=lambda v: FLOAT_FORMAT % v) + "\n"
    return "".join(line + "\n" for line in header) + body


def emit_table(rows, fmt="csv", path=None, config=None, summary=None, columns=None):
    """
    Render a table and write it to path (parent directories are created).

    Returns the rendered string; with path None nothing is written
    """
    text = render_table(rows, fmt, config, summary, columns)
    if path is not None:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8", newline="")
        except OSError as exc:
            raise ArtifactError(f"cannot write artifact ({exc.strerror or exc})", path) from exc
    return text


def parse_artifact(text, fmt):
    """
    Read an artifact produced by emit_table back.

    Returns (table, meta) where meta holds config, config_hash and summary values
    """
    if fmt == "json":
        document = json.loads(text)
        table = pd.DataFrame(document["rows"], columns=document["columns"])
        meta = {"summary": document.get("summary", {})}
        if "config" in document:
            meta["config"] = document["config"]
            meta["config_hash"] = document["config_hash"]
        return table, meta
    if fmt != "csv":
        raise PreconditionError(f"only csv and json artifacts can be loaded, got {fmt!r}")
    lines = text.splitlines(keepends=True)
    meta = {"summary": {}}
    body_start = 0
    for line in lines:
        if not line.startswith(HEADER_PREFIX):
            break
        body_start += 1
        key, _, value = line[len(HEADER_PREFIX):].rstrip("\n").partition(": ")
        if key == "config":
            meta["config"] = json.loads(value)
        elif key == "config_hash":
            meta["config_hash"] = value
        else:
            meta["summary"][key] = value
    table = pd.read_csv(io.StringIO("".join(lines[body_start:])), float_precision="round_trip")
    return table, meta


def load_table(path):
    """
    Load a CSV or JSON artifact from a local path.

    Returns (table, meta) or raises ArtifactError when the file can't be read
    """
    path = Path(path)
    fmt = "json" if path.suffix.lower() == ".json" else "csv"
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ArtifactError(f"cannot read artifact ({exc.strerror or exc})", path) from exc
    try:
        return parse_artifact(text, fmt)
    except (ValueError, KeyError, pd.errors.ParserError) as exc:
        raise ArtifactError(f"not a {fmt} artifact ({exc})", path) from exc


def handle_uploaded_file(name, payload):
    """
    Parse an uploaded artifact

    Parameters:
    - name: file name, its suffix picks the format
    - payload: raw bytes

    Returns (table, meta)
    """
    fmt = "json" if name.lower().endswith(".json") else "csv"
    if not name.lower().endswith((".csv", ".json")):
        raise ArtifactError("unsupported file type, upload a CSV or JSON artifact", name)
    try:
        return parse_artifact(payload.decode("utf-8"), fmt)
    except (UnicodeDecodeError, ValueError, KeyError, pd.errors.ParserError) as exc:
        raise ArtifactError(f"not a {fmt} artifact ({exc})", name) from exc


def is_log_scaled(values):
    """True for strictly positive columns spanning at least LOG_SPAN_DECADES decades, like t grids and tau ladders."""
    values = pd.Series(values, dtype=float).dropna()
    if values.empty or not (values > 0).all():
        return False
    return values.max() >= 10**LOG_SPAN_DECADES * values.min()


def filter_data(data, filters):
    """
    Keep the rows of a study table that fall inside the sidebar ranges

    Parameters:
    - data: DataFrame produced by one subcommand
    - filters: dict of column names and either an inclusive (low, high) range,
      a list of kept values, or a single kept value

    Range ends are widened by RANGE_SLACK relative to themselves so bounds read back
    from a log-scale slider keep the grid points they came from. Rows whose value is
    missing (failed trace points, absent ODE references) are kept.

    Returns filtered data
    """
    if data is None or not filters:
        return data

    keep = pd.Series(True, index=data.index)
    for col, filter_val in filters.items():
        if col not in data.columns:
            continue
        column = data[col]
        if isinstance(filter_val, tuple) and len(filter_val) == 2:
            low, high = filter_val
            inside = column.between(low - RANGE_SLACK * abs(low), high + RANGE_SLACK * abs(high))
            keep &= inside | column.isna()
        elif isinstance(filter_val, list):
            keep &= column.isin(filter_val)
        else:
            keep &= column == filter_val

    return data[keep]
