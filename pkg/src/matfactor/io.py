"""File formats: long-format panels, key = value configs, JSON results."""
from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import fields
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import __version__
from .core import KnownFactorSeries, MatfactorError, MatrixSeries
from .estimator import EstimationOptions
from .simulator import ConfigError, SimulationConfig

PANEL_HEADER = ("t", "row", "col", "value")
MISSING_TOKENS = {"", "na", "nan"}

PathLike = Union[str, os.PathLike]


class PanelError(MatfactorError, ValueError):
    pass


class DuplicateCellError(PanelError):
    def __init__(self, cell, line):
        self.cell, self.line = cell, line
        super().__init__(f"duplicate cell (t, row, col) = {cell} at line {line}")


class MissingCellError(PanelError):
    def __init__(self, cell):
        self.cell = cell
        super().__init__(f"missing cell (t, row, col) = {cell}")


class MalformedNumberError(PanelError):
    def __init__(self, text, line):
        self.text, self.line = text, line
        super().__init__(f"malformed number {text!r} at line {line}")


class ConfigParseError(MatfactorError, ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


def fmt(value: float) -> str:
    return format(float(value), ".17g")


# -- panels ---------------------------------------------------------------

def write_panel(path: PathLike, series) -> None:
    """Write a (T, rows, cols) series as ``t,row,col,value`` with 1-based indices."""
    data = np.asarray(series, dtype=float)
    T, n_rows, n_cols = data.shape
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(PANEL_HEADER) + "\n")
        for t in range(T):
            for i in range(n_rows):
                for j in range(n_cols):
                    fh.write(f"{t + 1},{i + 1},{j + 1},{fmt(data[t, i, j])}\n")


def read_panel_array(path: PathLike, allow_missing: bool = False) -> np.ndarray:
    """Dense (T, rows, cols) array from a panel file.

    With ``allow_missing`` empty/NA/NaN values become NaN; absent cells are
    always an error.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"panel file not found: {path}")
    cells = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != PANEL_HEADER:
            raise PanelError(f"{path}: header must be {','.join(PANEL_HEADER)}, got {header}")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise PanelError(f"{path}: line {line} has {len(row)} fields, expected 4")
            try:
                key = tuple(int(v) for v in row[:3])
            except ValueError:
                raise MalformedNumberError(",".join(row[:3]), line) from None
            if min(key) < 1:
                raise PanelError(f"{path}: line {line}: indices are 1-based, got {key}")
            text = row[3].strip()
            if text.lower() in MISSING_TOKENS and allow_missing:
                value = math.nan
            else:
                try:
                    value = float(text)
                except ValueError:
                    raise MalformedNumberError(text, line) from None
                if not math.isfinite(value) and not (allow_missing and math.isnan(value)):
                    raise MalformedNumberError(text, line)
            if key in cells:
                raise DuplicateCellError(key, line)
            cells[key] = value
    if not cells:
        raise PanelError(f"{path}: no data rows")
    dims = tuple(max(k[a] for k in cells) for a in range(3))
    if len(cells) != dims[0] * dims[1] * dims[2]:
        for key in np.ndindex(*dims):
            cell = tuple(i + 1 for i in key)
            if cell not in cells:
                raise MissingCellError(cell)
    out = np.empty(dims)
    for (t, i, j), value in cells.items():
        out[t - 1, i - 1, j - 1] = value
    return out


def load_panel(path: PathLike, kind: str = "matrix", role: str = ""):
    """Load a panel as a MatrixSeries (``kind="matrix"``) or KnownFactorSeries."""
    data = read_panel_array(path)
    if kind == "matrix":
        return MatrixSeries(data, role)
    if kind == "known":
        return KnownFactorSeries(data, role or "x")
    raise ValueError(f"kind must be 'matrix' or 'known', got {kind!r}")


def forward_fill(data: np.ndarray) -> np.ndarray:
    """Carry the last observed value forward in time for each cell."""
    out = np.array(data, dtype=float, copy=True)
    for t in range(1, out.shape[0]):
        gap = np.isnan(out[t])
        out[t][gap] = out[t - 1][gap]
    if np.isnan(out).any():
        t, i, j = np.argwhere(np.isnan(out))[0]
        raise PanelError(f"cannot forward-fill leading gap at (t, row, col) = {(t + 1, i + 1, j + 1)}")
    return out


def standardize(data: np.ndarray) -> np.ndarray:
    """Demean and scale each cell's time series to unit variance."""
    data = np.asarray(data, dtype=float)
    std = data.std(axis=0)
    if np.any(std == 0):
        t, i = np.argwhere(std == 0)[0]
        raise PanelError(f"cell (row, col) = {(t + 1, i + 1)} is constant; cannot standardize")
    return (data - data.mean(axis=0)) / std


# -- config files -----------------------------------------------------------

_SIM_FIELDS = {f.name for f in fields(SimulationConfig)}
_EST_FIELDS = {f.name for f in fields(EstimationOptions)}
_MATRIX_FIELDS = {"x_transition", "sigma1", "sigma2"}
_FLOAT_FIELDS = {"delta1", "delta2", "k_max_rule"}
_BOOL_FIELDS = {"fixed_parameters", "center"}


def _parse_value(name: str, text: str, line: int):
    try:
        if name in _MATRIX_FIELDS:
            rows = [r.replace(",", " ").split() for r in text.split(";") if r.strip()]
            return np.array([[float(v) for v in r] for r in rows])
        if name == "f_ar_coeffs":
            return np.array([float(v) for v in text.replace(",", " ").split()])
        if name == "fixed_dims":
            dims = tuple(int(v) for v in text.replace(",", " ").split())
            if len(dims) != 2:
                raise ValueError("expected two integers")
            return dims
        if name in _BOOL_FIELDS:
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError("expected true or false")
            return low in ("true", "1", "yes")
        if name == "k_max_rule" and text in ("half", "third"):
            return text
        if name in _FLOAT_FIELDS:
            return float(eval_fraction(text))
        return int(text)
    except ValueError as exc:
        raise ConfigParseError(line, f"bad value for {name!r}: {text!r} ({exc})") from None


def eval_fraction(text: str) -> float:
    """Parse ``0.5`` or ``1/2``."""
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(line_no, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _SIM_FIELDS and key not in _EST_FIELDS:
            raise ConfigParseError(line_no, f"unknown key {key!r}")
        if key in out:
            raise ConfigParseError(line_no, f"duplicate key {key!r}")
        out[key] = _parse_value(key, value, line_no)
    return out


def load_config(path: PathLike):
    """Read a config file into ``(SimulationConfig, EstimationOptions)``."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    values = parse_config_text(path.read_text(encoding="utf-8"))
    sim = {k: v for k, v in values.items() if k in _SIM_FIELDS}
    est = {k: v for k, v in values.items() if k in _EST_FIELDS}
    try:
        opts = EstimationOptions(**est)
    except ValueError as exc:
        raise ConfigError("estimation", str(exc)) from None
    return SimulationConfig(**sim), opts


def format_config(cfg: SimulationConfig, opts: Optional[EstimationOptions] = None) -> str:
    """Inverse of :func:`parse_config_text` for a resolved configuration."""
    lines = []
    for f in fields(SimulationConfig):
        value = getattr(cfg, f.name)
        if f.name in _MATRIX_FIELDS:
            text = "; ".join(" ".join(fmt(v) for v in row) for row in value)
        elif f.name == "f_ar_coeffs":
            text = " ".join(fmt(v) for v in value)
        elif isinstance(value, bool):
            text = str(value).lower()
        elif isinstance(value, float):
            text = fmt(value)
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    if opts is not None:
        lines.append(f"h0 = {opts.h0}")
        lines.append(f"k_max_rule = {fmt(opts.k_max_rule)}")
        if opts.fixed_dims is not None:
            lines.append(f"fixed_dims = {opts.fixed_dims[0]} {opts.fixed_dims[1]}")
        lines.append(f"center = {str(opts.center).lower()}")
    return "\n".join(lines) + "\n"


# -- results and manifests -------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_json(path: PathLike, payload: dict) -> None:
    # json emits the shortest repr that round-trips, so floats survive exactly.
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, indent=2, allow_nan=True)
        fh.write("\n")


def read_json(path: PathLike) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def estimate_to_dict(est) -> dict:
    return {
        "a_hat": None if est.a_hat is None else est.a_hat.values,
        "q1_hat": est.q1_hat.columns,
        "q2_hat": est.q2_hat.columns,
        "k_hat": est.k_hat,
        "r_hat": est.r_hat,
        "eigenvalues_row": est.spectrum_row.eigenvalues,
        "eigenvalues_col": est.spectrum_col.eigenvalues,
        "h0": est.h0,
        "center": est.center,
    }


class Manifest:
    """Collects the provenance written next to every result artifact."""

    def __init__(self, command: str, config: dict, seed: Optional[int] = None):
        self.command = command
        self.config = config
        self.seed = seed
        self._start = time.perf_counter()

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "version": __version__,
            "duration_seconds": round(time.perf_counter() - self._start, 6),
        }

    def write(self, path: PathLike) -> None:
        write_json(path, self.to_dict())
