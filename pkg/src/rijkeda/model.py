"""Galerkin reduced-order model of a horizontal Rijke tube.

The duct acoustics are expanded on the natural modes cos(j*pi*x) for
velocity and sin(j*pi*x) for pressure. The state of the discretized
system is the length-2*n_modes vector

    x = (eta_1, ..., eta_N, etadot_1/(1*pi), ..., etadot_N/(N*pi))

i.e. the velocity mode amplitudes followed by the *scaled* pressure mode
amplitudes etadot_j/(j*pi). All operations in this module are pure and
all parameter objects are immutable, so everything here is safe to share
across threads.

The heat source is a compact element at x_f whose release follows a
quintic polynomial of the delayed flame-base velocity u_f(t - tau). The
polynomial is a fit; for |u_f| well above 1 its evaluation is an
extrapolation and is deliberately not guarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelParams",
    "state_vector",
    "split_state",
    "heat_release",
    "damping",
    "rhs",
    "reconstruct_velocity",
    "reconstruct_pressure",
    "acoustic_energy",
]

# Grid-aligned switch-on of the delayed forcing: treat t >= tau within this
# relative slack so float round-off in grid times cannot flip the indicator.
_TIME_EPS = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Physical and numerical constants of the reduced-order model.

    Parameters
    ----------
    n_modes : int
        Number of Galerkin modes (>= 1).
    beta : float
        Heat-source strength.
    tau : float
        Time delay between the flame-base velocity and the heat release (> 0).
    c1, c2 : float
        Modal damping coefficients; mode j is damped with c1*j**2 + c2*sqrt(j).
    poly_coeffs : tuple of 5 floats
        Quintic heat-release polynomial (a1, ..., a5); a1 multiplies u**5 and
        a5 multiplies u. There is no constant term.
    x_f : float
        Heat-source location in (0, 1).

    The mode-wise arrays ``jpi`` (j*pi), ``sin_xf`` (sin(j*pi*x_f)),
    ``cos_xf`` (cos(j*pi*x_f)) and ``zeta`` (modal damping) are derived
    deterministically at construction and are read-only.
    """

    n_modes: int
    beta: float = 1.0
    tau: float = 0.02
    c1: float = 0.05
    c2: float = 0.01
    poly_coeffs: tuple[float, ...] = (-0.012, 0.059, -0.044, -0.108, 0.5)
    x_f: float = 0.3
    jpi: np.ndarray = field(init=False, repr=False, compare=False)
    sin_xf: np.ndarray = field(init=False, repr=False, compare=False)
    cos_xf: np.ndarray = field(init=False, repr=False, compare=False)
    zeta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise ValueError(f"n_modes must be a positive integer, got {self.n_modes}")
        if not (self.tau > 0.0):
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if not (0.0 < self.x_f < 1.0):
            raise ValueError(f"x_f must lie in (0, 1), got {self.x_f}")
        coeffs = tuple(float(a) for a in self.poly_coeffs)
        if len(coeffs) != 5:
            raise ValueError("poly_coeffs must have exactly 5 entries (a1..a5)")
        scalars = (self.beta, self.tau, self.c1, self.c2, self.x_f) + coeffs
        if not all(math.isfinite(v) for v in scalars):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "n_modes", int(self.n_modes))
        object.__setattr__(self, "poly_coeffs", coeffs)
        j = np.arange(1, self.n_modes + 1, dtype=float)
        for name, arr in (
            ("jpi", j * np.pi),
            ("sin_xf", np.sin(j * np.pi * self.x_f)),
            ("cos_xf", np.cos(j * np.pi * self.x_f)),
            ("zeta", self.c1 * j**2 + self.c2 * np.sqrt(j)),
        ):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def state_dim(self) -> int:
        return 2 * self.n_modes


def state_vector(eta, eta_dot) -> np.ndarray:
    """Assemble a state from velocity amplitudes and scaled pressure amplitudes."""
    eta = np.asarray(eta, dtype=float)
    eta_dot = np.asarray(eta_dot, dtype=float)
    if eta.shape != eta_dot.shape or eta.ndim != 1:
        raise ValueError("eta and eta_dot must be 1-D arrays of equal length")
    return np.concatenate([eta, eta_dot])


def split_state(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a state into (velocity amplitudes, scaled pressure amplitudes)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size % 2:
        raise ValueError(f"state must be 1-D of even length, got shape {x.shape}")
    n = x.size // 2
    return x[:n], x[n:]


def _poly(u: float, a: tuple[float, ...]) -> float:
    # Horner on a1*u^5 + ... + a5*u (no constant term).
    return ((((a[0] * u + a[1]) * u + a[2]) * u + a[3]) * u + a[4]) * u


def heat_release(u_f_delayed: float, params: ModelParams) -> float:
    """Heat release driven by the delayed flame-base velocity.

    Returns beta * (a1*u^5 + a2*u^4 + a3*u^3 + a4*u^2 + a5*u) with
    u = u_f_delayed. Total function: any finite u is accepted.
    """
    return params.beta * _poly(float(u_f_delayed), params.poly_coeffs)


def damping(j: int, params: ModelParams) -> float:
    """Modal damping zeta_j = c1*j**2 + c2*sqrt(j) for mode 1 <= j <= n_modes."""
    if not 1 <= j <= params.n_modes:
        raise ValueError(f"mode index {j} outside 1..{params.n_modes}")
    return float(params.zeta[j - 1])


def rhs(t: float, state: np.ndarray, u_f_delayed: float, params: ModelParams) -> np.ndarray:
    """Time derivative of the Galerkin state.

    For each mode j (with mu_j = etadot_j/(j*pi)):

        d(eta_j)/dt = j*pi * mu_j
        d(mu_j)/dt  = -j*pi * eta_j - zeta_j * mu_j
                      - [t >= tau] * 2 * sin(j*pi*x_f) * heat_release(u_f_delayed)

    The delayed velocity is supplied by the caller so this stays a pure
    function; it is ignored while the forcing is inactive (t < tau). The
    switch-on comparison carries a tiny relative slack so grid times that
    differ from tau by float round-off behave like t = tau.
    """
    eta, mu = split_state(state)
    if eta.size != params.n_modes:
        raise ValueError(
            f"state has {eta.size} modes, params expect {params.n_modes}"
        )
    deta = params.jpi * mu
    dmu = -params.jpi * eta - params.zeta * mu
    if t >= params.tau - _TIME_EPS * max(1.0, params.tau):
        dmu = dmu - 2.0 * params.sin_xf * heat_release(u_f_delayed, params)
    return np.concatenate([deta, dmu])


def reconstruct_velocity(state: np.ndarray, x: float) -> float:
    """Acoustic velocity u(x) = sum_j eta_j cos(j*pi*x) for x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    eta, _ = split_state(state)
    j = np.arange(1, eta.size + 1)
    return float(np.dot(eta, np.cos(j * np.pi * x)))


def reconstruct_pressure(state: np.ndarray, x: float) -> float:
    """Acoustic pressure p(x) = sum_j (etadot_j/(j*pi)) sin(j*pi*x) for x in [0, 1].

    Vanishes identically at the open ends x = 0 and x = 1.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    _, mu = split_state(state)
    j = np.arange(1, mu.size + 1)
    return float(np.dot(mu, np.sin(j * np.pi * x)))


def acoustic_energy(state: np.ndarray) -> float:
    """Discrete acoustic energy 0.5 * sum_j (eta_j^2 + mu_j^2)."""
    x = np.asarray(state, dtype=float)
    return 0.5 * float(np.dot(x, x))
