import numpy as np
import pytest

from rijkeda import (
    AssimilationProblem,
    BackgroundSpec,
    BgKind,
    CovarianceSpec,
    IntegratorConfig,
    ModelParams,
    ObsKind,
    ObservationSet,
    integrate,
    pressure_weights,
    state_vector,
)

X_M = 0.8


@pytest.fixture
def reference_params():
    """The standard 10-mode configuration used throughout the experiments."""
    return ModelParams(n_modes=10)


def make_twin_problem(
    n_modes=10,
    t_end=0.4,
    dt=1e-3,
    n_obs=100,
    obs_kind=ObsKind.PRESSURE_MODES,
    bg_kind=BgKind.PRESSURE_MODES,
    b_var=0.005**2,
    r_var=0.005**2,
    seed=0,
    tau=0.02,
    obs_noise=0.005,
    bg_noise=0.005,
    x_m=X_M,
):
    """Synthesize a ready-to-use assimilation problem from a truth run.

    Returns (problem, x0_true). Truth starts from the standard
    perturbed-origin state; observations are truth measurements plus
    Gaussian noise; the background is the truth plus Gaussian noise.
    """
    rng = np.random.default_rng(seed)
    params = ModelParams(n_modes=n_modes, tau=tau)
    window = IntegratorConfig(t_end=t_end, dt=dt)
    x0_true = state_vector(np.full(n_modes, 0.05), np.zeros(n_modes))
    truth = integrate(x0_true, params, window)
    k_end = window.n_steps
    nodes = np.rint(np.arange(1, n_obs + 1) * (k_end / n_obs)).astype(int)
    nodes = np.unique(nodes)
    if obs_kind is ObsKind.PRESSURE_POINT:
        clean = truth.states[nodes, n_modes:] @ pressure_weights(n_modes, x_m)
    else:
        clean = truth.states[nodes, n_modes:]
    obs = ObservationSet(
        obs_kind,
        x_m,
        truth.times[nodes],
        clean + obs_noise * rng.standard_normal(clean.shape),
    )
    x0_bg = x0_true + bg_noise * rng.standard_normal(x0_true.size)
    problem = AssimilationProblem(
        params=params,
        integrator=window,
        background=BackgroundSpec(kind=bg_kind, x0_bg=x0_bg, x_m=x_m),
        observations=obs,
        covariance=CovarianceSpec(b_var=b_var, r_var=r_var),
    )
    return problem, x0_true
