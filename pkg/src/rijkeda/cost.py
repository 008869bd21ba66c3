"""Background and observation cost functionals for state estimation.

The total cost J(x0) = J_bg(x0) + J_obs(x0) blends the distance of the
initial state from a background estimate with the distance of the forward
trajectory from timed observations, each weighted by a scalar variance
(diagonal covariances). Three background flavours and two observation
flavours are supported:

  - ``pressure_point``: scalar acoustic pressure at the measurement
    location x_m,
  - ``pressure_modes``: the vector of scaled pressure amplitudes
    etadot_j/(j*pi), with each mode residual weighted by sin(j*pi*x_m)
    inside the square,
  - ``full_state`` (background only): plain squared distance over all
    2*n_modes components.

Note the weighting gives zero weight to any mode with sin(j*pi*x_m) = 0
(e.g. j = 5 and j = 10 at x_m = 0.8): such modes are invisible both to
pressure-mode observations and to the pressure-mode background term. This
observability hole is inherent to the functional, not a bug.

Observation times must lie on the integration grid; off-grid times raise
ConfigError rather than being silently interpolated.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .integrator import IntegratorConfig, Trajectory, integrate
from .model import ModelParams, split_state

__all__ = [
    "ObsKind",
    "BgKind",
    "CovarianceSpec",
    "ObservationSet",
    "BackgroundSpec",
    "AssimilationProblem",
    "pressure_weights",
    "measure",
    "eval_j_bg",
    "bg_gradient",
    "eval_j_obs",
    "per_observation_terms",
    "obs_adjoint_injections",
    "eval_total",
    "CostBreakdown",
    "cost_breakdown",
]


class ObsKind(str, enum.Enum):
    PRESSURE_POINT = "pressure_point"
    PRESSURE_MODES = "pressure_modes"


class BgKind(str, enum.Enum):
    PRESSURE_POINT = "pressure_point"
    PRESSURE_MODES = "pressure_modes"
    FULL_STATE = "full_state"


@dataclass(frozen=True)
class CovarianceSpec:
    """Diagonal background (b_var) and observation (r_var) variances."""

    b_var: float
    r_var: float

    def __post_init__(self):
        if not (self.b_var > 0.0 and self.r_var > 0.0):
            raise ConfigError(
                f"variances must be strictly positive, got b_var={self.b_var}, r_var={self.r_var}"
            )


@dataclass(frozen=True)
class ObservationSet:
    """Timed observations of one kind taken at measurement position x_m.

    values has shape (n_obs,) for pressure_point and (n_obs, n_modes) for
    pressure_modes. The set may be empty (background-only problems).
    """

    kind: ObsKind
    x_m: float
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if not 0.0 < self.x_m < 1.0:
            raise ConfigError(f"x_m must lie in (0, 1), got {self.x_m}")
        times = np.atleast_1d(np.asarray(self.times, dtype=float))
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1:
            raise ConfigError("observation times must be a 1-D array")
        if times.size and (np.any(times <= 0.0) or np.any(np.diff(times) <= 0.0)):
            raise ConfigError("observation times must be strictly increasing and > 0")
        if self.kind is ObsKind.PRESSURE_POINT:
            if values.shape != times.shape:
                raise ConfigError("pressure_point values must be one scalar per time")
        else:
            if values.ndim != 2 or values.shape[0] != times.size:
                raise ConfigError("pressure_modes values must be one mode row per time")
        times.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def n_obs(self) -> int:
        return self.times.size

    @staticmethod
    def empty(kind: ObsKind, x_m: float, n_modes: int = 1) -> "ObservationSet":
        """An observation set with no records (background-only problems)."""
        shape = (0,) if kind is ObsKind.PRESSURE_POINT else (0, n_modes)
        return ObservationSet(kind, x_m, np.zeros(0), np.zeros(shape))


@dataclass(frozen=True)
class BackgroundSpec:
    """Background initial condition and the functional used to anchor it."""

    kind: BgKind
    x0_bg: np.ndarray
    x_m: float = 0.8

    def __post_init__(self):
        x0 = np.asarray(self.x0_bg, dtype=float)
        if x0.ndim != 1 or x0.size % 2:
            raise ConfigError("x0_bg must be a 1-D state of even length")
        if not np.all(np.isfinite(x0)):
            raise ConfigError("x0_bg must be finite")
        if not 0.0 < self.x_m < 1.0:
            raise ConfigError(f"x_m must lie in (0, 1), got {self.x_m}")
        x0.flags.writeable = False
        object.__setattr__(self, "x0_bg", x0)


@dataclass(frozen=True)
class AssimilationProblem:
    """Everything needed to evaluate J over one assimilation window."""

    params: ModelParams
    integrator: IntegratorConfig
    background: BackgroundSpec
    observations: ObservationSet
    covariance: CovarianceSpec
    obs_nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.background.x0_bg.size != self.params.state_dim:
            raise ConfigError(
                f"background state has {self.background.x0_bg.size} entries, "
                f"model expects {self.params.state_dim}"
            )
        obs = self.observations
        if obs.kind is ObsKind.PRESSURE_MODES and obs.n_obs:
            if obs.values.shape[1] != self.params.n_modes:
                raise ConfigError(
                    f"pressure_modes values have {obs.values.shape[1]} modes, "
                    f"model expects {self.params.n_modes}"
                )
        self.integrator.delay_steps(self.params)  # fail fast on tau/dt mismatch
        nodes = _obs_node_indices(obs.times, self.integrator.dt, self.integrator.n_steps)
        nodes.flags.writeable = False
        object.__setattr__(self, "obs_nodes", nodes)

    @property
    def consistent_pairing(self) -> bool:
        """True for the like-with-like pairings (point/point, modes/modes)."""
        return self.background.kind.value == self.observations.kind.value


def _obs_node_indices(times: np.ndarray, dt: float, n_steps: int) -> np.ndarray:
    idx = np.rint(times / dt).astype(int)
    bad = (idx < 1) | (idx > n_steps) | (np.abs(idx * dt - times) > 1e-9 * np.maximum(1.0, times))
    if np.any(bad):
        raise ConfigError(
            f"observation times {times[bad]} are off the integration grid "
            f"(dt={dt}) or outside (0, {n_steps * dt}]"
        )
    return idx


def pressure_weights(n_modes: int, x_m: float) -> np.ndarray:
    """Mode weights sin(j*pi*x_m), j = 1..n_modes."""
    j = np.arange(1, n_modes + 1)
    return np.sin(j * np.pi * x_m)


def measure(state: np.ndarray, kind: ObsKind, x_m: float):
    """Apply the linear measurement operator to one state.

    pressure_point maps to the scalar p(x_m); pressure_modes maps to the
    vector of scaled pressure amplitudes (the sin(j*pi*x_m) weighting is
    applied inside the cost, not here).
    """
    _, mu = split_state(state)
    if kind is ObsKind.PRESSURE_POINT:
        return float(mu @ pressure_weights(mu.size, x_m))
    return mu.copy()


def eval_j_bg(x0: np.ndarray, bg: BackgroundSpec, cov: CovarianceSpec) -> float:
    """Background cost at the initial state."""
    x0 = np.asarray(x0, dtype=float)
    n = x0.size // 2
    d = x0 - bg.x0_bg
    if bg.kind is BgKind.FULL_STATE:
        return 0.5 * float(d @ d) / cov.b_var
    w = pressure_weights(n, bg.x_m)
    dmu = d[n:]
    if bg.kind is BgKind.PRESSURE_POINT:
        return 0.5 * float(dmu @ w) ** 2 / cov.b_var
    return 0.5 * float(np.sum((dmu * w) ** 2)) / cov.b_var


def bg_gradient(x0: np.ndarray, bg: BackgroundSpec, cov: CovarianceSpec) -> np.ndarray:
    """Gradient of the background cost with respect to x0."""
    x0 = np.asarray(x0, dtype=float)
    n = x0.size // 2
    d = x0 - bg.x0_bg
    if bg.kind is BgKind.FULL_STATE:
        return d / cov.b_var
    w = pressure_weights(n, bg.x_m)
    out = np.zeros_like(x0)
    if bg.kind is BgKind.PRESSURE_POINT:
        out[n:] = (float(d[n:] @ w) / cov.b_var) * w
    else:
        out[n:] = d[n:] * w**2 / cov.b_var
    return out


def _obs_residual_rows(traj: Trajectory, obs: ObservationSet, nodes: np.ndarray):
    """Weighted residuals per observation: (n_obs,) or (n_obs, n_modes)."""
    n = traj.n_modes
    mu = traj.states[nodes, n:]
    w = pressure_weights(n, obs.x_m)
    if obs.kind is ObsKind.PRESSURE_POINT:
        return mu @ w - obs.values
    return (mu - obs.values) * w


def per_observation_terms(
    traj: Trajectory, obs: ObservationSet, cov: CovarianceSpec
) -> np.ndarray:
    """Individual cost contributions, one per observation time."""
    if obs.n_obs == 0:
        return np.zeros(0)
    nodes = _obs_node_indices(obs.times, traj.dt, traj.n_nodes - 1)
    r = _obs_residual_rows(traj, obs, nodes)
    if r.ndim == 1:
        return 0.5 * r**2 / cov.r_var
    return 0.5 * np.sum(r**2, axis=1) / cov.r_var


def eval_j_obs(traj: Trajectory, obs: ObservationSet, cov: CovarianceSpec) -> float:
    """Observation cost of a trajectory (sum over observation times)."""
    return float(np.sum(per_observation_terms(traj, obs, cov)))


def obs_adjoint_injections(
    traj: Trajectory, obs: ObservationSet, cov: CovarianceSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Cost sensitivities d(J_obs,i)/d(state) at the observation nodes.

    Returns (node indices, one injection row per observation). Rows for
    repeated use must be *added* into a per-node accumulator.
    """
    n = traj.n_modes
    if obs.n_obs == 0:
        return np.zeros(0, dtype=int), np.zeros((0, 2 * n))
    nodes = _obs_node_indices(obs.times, traj.dt, traj.n_nodes - 1)
    w = pressure_weights(n, obs.x_m)
    r = _obs_residual_rows(traj, obs, nodes)
    rows = np.zeros((obs.n_obs, 2 * n))
    if obs.kind is ObsKind.PRESSURE_POINT:
        rows[:, n:] = np.outer(r / cov.r_var, w)
    else:
        rows[:, n:] = r * w / cov.r_var
    return nodes, rows


def eval_total(x0: np.ndarray, problem: AssimilationProblem) -> tuple[float, Trajectory]:
    """Total cost J = J_bg + J_obs and the forward trajectory it was read from."""
    traj = integrate(x0, problem.params, problem.integrator)
    j = eval_j_bg(x0, problem.background, problem.covariance) + eval_j_obs(
        traj, problem.observations, problem.covariance
    )
    return j, traj


@dataclass(frozen=True)
class CostBreakdown:
    j_total: float
    j_bg: float
    j_obs: float
    per_obs: np.ndarray
    trajectory: Trajectory


def cost_breakdown(x0: np.ndarray, problem: AssimilationProblem) -> CostBreakdown:
    """Total cost split into background, observation, and per-observation parts."""
    traj = integrate(x0, problem.params, problem.integrator)
    j_bg = eval_j_bg(x0, problem.background, problem.covariance)
    terms = per_observation_terms(traj, problem.observations, problem.covariance)
    j_obs = float(np.sum(terms))
    return CostBreakdown(j_bg + j_obs, j_bg, j_obs, terms, traj)
