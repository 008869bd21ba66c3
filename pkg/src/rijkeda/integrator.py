"""Fixed-step integration of the delayed Galerkin system with dense output.

The integrator advances the model with classical RK4 and keeps, per grid
node, both the state and its time derivative. That pair defines a cubic
Hermite continuous extension which serves two callers: the integrator
itself, which reads the delayed flame-base velocity from it, and the
adjoint sweep, which replays the same reads in reverse. Requiring tau and
t_end to be whole multiples of dt keeps every delayed stage time on a node
or an interval midpoint, so interpolation never straddles the forcing
switch-on at t = tau.

No initial history is needed: the delayed forcing is inactive on [0, tau),
so the model never looks at negative times.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, IntegrationDivergedError, OutOfWindowError
from .model import ModelParams

__all__ = ["IntegratorConfig", "Trajectory", "integrate"]


def _exact_multiple(value: float, dt: float, what: str) -> int:
    n = int(round(value / dt))
    if n < 1 or abs(n * dt - value) > 1e-9 * max(1.0, abs(value)):
        raise ConfigError(f"{what} ({value}) must be a positive whole multiple of dt ({dt})")
    return n


@dataclass(frozen=True)
class IntegratorConfig:
    """Step size and window length of a forward integration."""

    t_end: float
    dt: float = 1e-3

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if not self.t_end > 0.0:
            raise ConfigError(f"t_end must be > 0, got {self.t_end}")
        _exact_multiple(self.t_end, self.dt, "t_end")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def delay_steps(self, params: ModelParams) -> int:
        """Number of grid steps spanned by the delay; tau/dt must be integral."""
        return _exact_multiple(params.tau, self.dt, "tau")

    def grid_times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_steps + 1)


@dataclass(frozen=True)
class Trajectory:
    """Dense solution on [0, t_end]: node states plus node derivatives.

    Immutable after construction (the arrays are marked read-only), so a
    trajectory can be shared freely. `states[k]` is the state at
    `times[k]`; `derivs[k]` is the model right-hand side evaluated there,
    which makes `sample` a piecewise cubic Hermite interpolant that is
    exact at the nodes.
    """

    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    dt: float
    n_modes: int

    def __post_init__(self):
        for arr in (self.times, self.states, self.derivs):
            arr.flags.writeable = False

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def n_nodes(self) -> int:
        return self.states.shape[0]

    def node_index(self, t: float, tol: float = 1e-9) -> int:
        """Grid index of an on-grid time; ConfigError if t is off-grid."""
        k = int(round(t / self.dt))
        if k < 0 or k >= self.n_nodes or abs(self.times[k] - t) > tol * max(1.0, abs(t)):
            raise ConfigError(f"time {t} does not lie on the integration grid (dt={self.dt})")
        return k

    def sample(self, t: float) -> np.ndarray:
        """State at any t in [0, t_end] via cubic Hermite interpolation.

        Exact (bit-identical) at grid nodes; O(dt^4) in between for smooth
        solutions. Raises OutOfWindowError outside the window.
        """
        t_end = self.t_end
        slack = 1e-9 * max(1.0, t_end)
        if t < -slack or t > t_end + slack:
            raise OutOfWindowError(f"t={t} outside trajectory window [0, {t_end}]")
        t = min(max(t, 0.0), t_end)
        k = int(round(t / self.dt))
        if 0 <= k < self.n_nodes and abs(self.times[k] - t) <= 1e-12 * max(1.0, abs(t)):
            return self.states[k].copy()
        k = min(int(t / self.dt), self.n_nodes - 2)
        s = (t - self.times[k]) / self.dt
        h00 = (2.0 * s - 3.0) * s * s + 1.0
        h10 = ((s - 2.0) * s + 1.0) * s
        h01 = (3.0 - 2.0 * s) * s * s
        h11 = (s - 1.0) * s * s
        return (
            h00 * self.states[k]
            + h10 * self.dt * self.derivs[k]
            + h01 * self.states[k + 1]
            + h11 * self.dt * self.derivs[k + 1]
        )

    def pressure_series(self, x_m: float) -> np.ndarray:
        """Acoustic pressure at x_m for every grid node."""
        n = self.n_modes
        j = np.arange(1, n + 1)
        return self.states[:, n:] @ np.sin(j * np.pi * x_m)

    def velocity_series(self, x_m: float) -> np.ndarray:
        """Acoustic velocity at x_m for every grid node."""
        n = self.n_modes
        j = np.arange(1, n + 1)
        return self.states[:, :n] @ np.cos(j * np.pi * x_m)

    def energy_series(self) -> np.ndarray:
        """Total acoustic energy 0.5*|x|^2 at every grid node."""
        return 0.5 * np.sum(self.states**2, axis=1)


def integrate(x0: np.ndarray, params: ModelParams, config: IntegratorConfig) -> Trajectory:
    """Integrate the delayed system from x0 over [0, t_end].

    Classical RK4; the delayed flame-base velocity at each stage comes from
    the trajectory's own continuous extension (switched off for stage times
    before tau). Raises IntegrationDivergedError (carrying the step index)
    if the state overflows.
    """
    x0 = np.ascontiguousarray(x0, dtype=float)
    if x0.shape != (params.state_dim,):
        raise ValueError(f"x0 must have shape ({params.state_dim},), got {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    m_delay = config.delay_steps(params)
    coeffs = np.array(params.poly_coeffs)
    with np.errstate(over="ignore", invalid="ignore"):
        states, derivs, diverged = kernels.rk4_delay_forward(
            x0,
            config.dt,
            config.n_steps,
            m_delay,
            params.jpi,
            params.zeta,
            params.sin_xf,
            params.cos_xf,
            coeffs,
            params.beta,
        )
    if diverged >= 0:
        raise IntegrationDivergedError(diverged)
    return Trajectory(
        times=config.grid_times(),
        states=states,
        derivs=derivs,
        dt=config.dt,
        n_modes=params.n_modes,
    )
