"""CSV and run-metadata writers.

All numeric output uses 15 significant digits with '.' decimals and comma
separators, and every file carries the resolved configuration (and seed)
as '#'-prefixed header comments, so any artifact can be reproduced from
its own metadata. Formatting is deterministic: identical values yield
identical bytes. Writers deliberately never embed timestamps or absolute
paths.
"""

from __future__ import annotations

import configparser
from pathlib import Path

import numpy as np

from .cost import CostBreakdown, ObsKind, ObservationSet
from .errors import ConfigError
from .integrator import Trajectory
from .optimize import OptimizationResult
from .twin import TwinResult

__all__ = [
    "fmt",
    "write_csv",
    "read_csv",
    "write_run_meta",
    "write_trajectory",
    "write_probe",
    "write_errors",
    "write_summary",
    "write_opt_log",
    "write_states",
    "read_states",
    "write_observations",
    "read_observations",
    "write_cost_breakdown",
    "write_grad_check",
    "write_sweep_summary",
]


def fmt(value) -> str:
    """Format one cell: integers verbatim, floats with 15 significant digits."""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".15g")


def _meta_lines(meta: dict | None) -> list[str]:
    if not meta:
        return []
    lines = []
    for section, entries in meta.items():
        if isinstance(entries, dict):
            for key, val in entries.items():
                lines.append(f"# {section}.{key} = {fmt(val)}")
        else:
            lines.append(f"# {section} = {fmt(entries)}")
    return lines


def write_csv(path, header: list[str], rows, meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = _meta_lines(meta)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Read back a CSV written by write_csv: (header, value array).

    Non-numeric cells (label columns such as 'role' or 'window') come back
    as NaN; callers slice them off by position.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    header: list[str] | None = None
    rows = []
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append([_cell(v) for v in line.split(",")])
    if header is None:
        raise ConfigError(f"{path}: no header row found")
    return header, np.array(rows) if rows else np.zeros((0, len(header)))


def _cell(token: str) -> float:
    try:
        return float(token)
    except ValueError:
        return float("nan")


def write_run_meta(path, meta: dict) -> Path:
    """Resolved configuration as an INI-style key-value file."""
    parser = configparser.ConfigParser()
    for section, entries in meta.items():
        parser[section] = {k: fmt(v) for k, v in entries.items()}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        parser.write(fh)
    return path


def _mode_headers(n_modes: int) -> list[str]:
    u_cols = [f"u_mode_{j}" for j in range(1, n_modes + 1)]
    p_cols = [f"p_mode_{j}" for j in range(1, n_modes + 1)]
    return u_cols + p_cols


def write_trajectory(path, traj: Trajectory, x_m: float, meta: dict | None = None) -> Path:
    header = ["t"] + _mode_headers(traj.n_modes) + ["p_probe", "u_probe"]
    p = traj.pressure_series(x_m)
    u = traj.velocity_series(x_m)
    rows = (
        [traj.times[k], *traj.states[k], p[k], u[k]] for k in range(traj.n_nodes)
    )
    return write_csv(path, header, rows, meta)


def write_probe(path, traj: Trajectory, x_m: float, meta: dict | None = None) -> Path:
    header = ["t", "p_probe", "u_probe", "energy"]
    p = traj.pressure_series(x_m)
    u = traj.velocity_series(x_m)
    e = traj.energy_series()
    rows = zip(traj.times, p, u, e)
    return write_csv(path, header, rows, meta)


def write_errors(path, result: TwinResult, meta: dict | None = None) -> Path:
    header = ["t", "bg_error", "analysis_error"]
    rows = zip(result.times, result.bg_error, result.analysis_error)
    return write_csv(path, header, rows, meta)


def write_summary(path, result: TwinResult, meta: dict | None = None) -> Path:
    s = result.summary
    rows = [
        ["assimilation", s.assim_rms_bg, s.assim_rms_analysis],
        ["forecast", s.forecast_rms_bg, s.forecast_rms_analysis],
    ]
    return write_csv(path, ["window", "rms_bg", "rms_analysis"], rows, meta)


def write_opt_log(path, opt: OptimizationResult, meta: dict | None = None) -> Path:
    header = ["iteration", "j", "j_bg", "j_obs", "grad_norm", "step"]
    rows = (
        [k, opt.j_history[k], opt.j_bg_history[k], opt.j_obs_history[k],
         opt.grad_norm_history[k], opt.step_history[k]]
        for k in range(len(opt.j_history))
    )
    return write_csv(path, header, rows, meta)


def write_states(path, states: dict[str, np.ndarray], n_modes: int,
                 meta: dict | None = None) -> Path:
    header = ["role"] + _mode_headers(n_modes)
    rows = ([name, *vec] for name, vec in states.items())
    return write_csv(path, header, rows, meta)


def read_states(path) -> dict[str, np.ndarray]:
    """Load a state CSV written by write_states: role -> state vector."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    out: dict[str, np.ndarray] = {}
    header_seen = False
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if not line.startswith("role,"):
                raise ConfigError(f"{path}: expected a 'role,...' header, got {line!r}")
            header_seen = True
            continue
        cells = line.split(",")
        try:
            out[cells[0]] = np.array([float(v) for v in cells[1:]])
        except ValueError as exc:
            raise ConfigError(f"{path}: malformed state row {cells[0]!r} ({exc})") from exc
    if not out:
        raise ConfigError(f"{path}: no state rows found")
    return out


def write_observations(path, obs: ObservationSet, meta: dict | None = None) -> Path:
    if obs.kind is ObsKind.PRESSURE_POINT:
        header = ["t", "p_probe"]
        rows = zip(obs.times, obs.values)
    else:
        n = obs.values.shape[1]
        header = ["t"] + [f"p_mode_{j}" for j in range(1, n + 1)]
        rows = ([t, *row] for t, row in zip(obs.times, obs.values))
    return write_csv(path, header, rows, meta)


def read_observations(path, kind: ObsKind, x_m: float) -> ObservationSet:
    """Load an observation CSV (schema as written by write_observations)."""
    header, data = read_csv(path)
    if not header or header[0] != "t":
        raise ConfigError(f"{path}: first column must be 't', got {header[:1]}")
    if kind is ObsKind.PRESSURE_POINT:
        if header != ["t", "p_probe"]:
            raise ConfigError(f"{path}: pressure_point schema is t,p_probe; got {header}")
        return ObservationSet(kind, x_m, data[:, 0], data[:, 1])
    expected = ["t"] + [f"p_mode_{j}" for j in range(1, len(header))]
    if header != expected:
        raise ConfigError(f"{path}: pressure_modes schema is t,p_mode_1..N; got {header}")
    return ObservationSet(kind, x_m, data[:, 0], data[:, 1:])


def write_cost_breakdown(path, breakdown: CostBreakdown, obs_times: np.ndarray,
                         meta: dict | None = None) -> Path:
    header = ["term", "t", "value"]
    rows = [
        ["j_total", "", breakdown.j_total],
        ["j_bg", "", breakdown.j_bg],
        ["j_obs", "", breakdown.j_obs],
    ]
    rows.extend(["j_obs_term", t, v] for t, v in zip(obs_times, breakdown.per_obs))
    return write_csv(path, header, rows, meta)


def write_grad_check(path, grad: np.ndarray, fd: np.ndarray, rel: np.ndarray,
                     meta: dict | None = None) -> Path:
    header = ["component", "adjoint", "fd", "rel_error"]
    rows = ([k, grad[k], fd[k], rel[k]] for k in range(grad.size))
    return write_csv(path, header, rows, meta)


def write_sweep_summary(path, results, meta: dict | None = None) -> Path:
    header = [
        "n_obs",
        "assim_rms_bg",
        "assim_rms_analysis",
        "forecast_rms_bg",
        "forecast_rms_analysis",
    ]
    rows = (
        [r.config.n_obs, r.summary.assim_rms_bg, r.summary.assim_rms_analysis,
         r.summary.forecast_rms_bg, r.summary.forecast_rms_analysis]
        for r in results
    )
    return write_csv(path, header, rows, meta)
