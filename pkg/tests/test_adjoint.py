import numpy as np
import pytest

from rijkeda import (
    AssimilationProblem,
    BackgroundSpec,
    BgKind,
    CovarianceSpec,
    IntegrationDivergedError,
    IntegratorConfig,
    ModelParams,
    ObsKind,
    ObservationSet,
    eval_total,
    fd_gradient,
    fd_relative_errors,
    gradient,
    integrate,
    state_vector,
)
from conftest import make_twin_problem

COV = CovarianceSpec(b_var=0.005**2, r_var=0.005**2)


def quadratic_only_problem(n_modes=4, seed=0):
    """No observations: J is the pure full-state background quadratic."""
    rng = np.random.default_rng(seed)
    params = ModelParams(n_modes=n_modes)
    return AssimilationProblem(
        params=params,
        integrator=IntegratorConfig(t_end=0.1, dt=1e-3),
        background=BackgroundSpec(
            BgKind.FULL_STATE, 0.02 * rng.standard_normal(2 * n_modes), 0.8
        ),
        observations=ObservationSet.empty(ObsKind.PRESSURE_MODES, 0.8, n_modes),
        covariance=COV,
    )


class TestAnalyticCases:
    def test_pure_quadratic_gradient_is_analytic(self):
        problem = quadratic_only_problem()
        rng = np.random.default_rng(1)
        x0 = 0.05 * rng.standard_normal(8)
        rep = gradient(x0, problem)
        expected = (x0 - problem.background.x0_bg) / COV.b_var
        np.testing.assert_allclose(rep.grad, expected, rtol=0, atol=1e-14 / COV.b_var)

    def test_gradient_beta_independent_before_delay(self):
        # window shorter than the delay: forcing never acts
        rng = np.random.default_rng(2)
        x0 = 0.05 * rng.standard_normal(4)
        reps = []
        for beta in (0.0, 1.0):
            params = ModelParams(n_modes=2, tau=0.2, beta=beta)
            window = IntegratorConfig(t_end=0.2, dt=1e-3)
            truth = integrate(np.full(4, 0.03), params, window)
            nodes = np.array([50, 150])
            obs = ObservationSet(
                ObsKind.PRESSURE_POINT,
                0.8,
                truth.times[nodes],
                truth.pressure_series(0.8)[nodes] + 0.01,
            )
            problem = AssimilationProblem(
                params=params,
                integrator=window,
                background=BackgroundSpec(BgKind.FULL_STATE, np.full(4, 0.03), 0.8),
                observations=obs,
                covariance=COV,
            )
            reps.append(gradient(x0, problem).grad)
        np.testing.assert_array_equal(reps[0], reps[1])


class TestAgainstFiniteDifferences:
    def test_reference_configuration(self):
        # the standard twin setup: 10 modes, T = 0.4, 100 mode observations
        problem, x0_true = make_twin_problem(seed=11)
        rng = np.random.default_rng(11)
        x0 = problem.background.x0_bg + 0.01 * rng.standard_normal(20)
        rep = gradient(x0, problem, fd_step=1e-6)
        assert rep.fd_check is not None
        assert rep.max_fd_error <= 1e-5

    @pytest.mark.parametrize("tau", [1e-3, 2e-3])
    def test_short_delays(self, tau):
        problem, _ = make_twin_problem(n_modes=3, t_end=0.2, n_obs=20, seed=12, tau=tau)
        rng = np.random.default_rng(12)
        x0 = problem.background.x0_bg + 0.01 * rng.standard_normal(6)
        rep = gradient(x0, problem, fd_step=1e-6)
        assert rep.max_fd_error <= 1e-5

    def test_fd_matches_analytic_on_quadratic(self):
        problem = quadratic_only_problem(seed=3)
        rng = np.random.default_rng(3)
        x0 = 0.05 * rng.standard_normal(8)
        fd = fd_gradient(x0, problem, step=1e-6)
        expected = (x0 - problem.background.x0_bg) / COV.b_var
        assert np.max(fd_relative_errors(expected, fd)) <= 1e-6

    def test_fd_truncation_error_contracts_quadratically(self):
        # on a problem with genuine nonlinearity the central-difference
        # error is O(step^2): halving the step contracts it ~4x
        params = ModelParams(n_modes=3, beta=5.0)
        window = IntegratorConfig(t_end=0.4, dt=1e-3)
        x0_true = state_vector([0.3, 0.2, 0.1], [0.0, 0.0, 0.0])
        truth = integrate(x0_true, params, window)
        nodes = np.arange(1, 21) * 20
        obs = ObservationSet(
            ObsKind.PRESSURE_POINT, 0.8, truth.times[nodes],
            truth.pressure_series(0.8)[nodes],
        )
        problem = AssimilationProblem(
            params=params,
            integrator=window,
            background=BackgroundSpec(BgKind.FULL_STATE, x0_true, 0.8),
            observations=obs,
            covariance=COV,
        )
        rng = np.random.default_rng(4)
        x0 = x0_true + 0.05 * rng.standard_normal(6)
        exact = gradient(x0, problem).grad
        err = [
            np.linalg.norm(fd_gradient(x0, problem, step) - exact)
            for step in (2e-3, 1e-3)
        ]
        assert 2.5 <= err[0] / err[1] <= 6.0

    def test_directional_derivative_consistency(self):
        problem, _ = make_twin_problem(n_modes=3, t_end=0.2, n_obs=20, seed=13)
        rng = np.random.default_rng(13)
        x0 = problem.background.x0_bg + 0.01 * rng.standard_normal(6)
        g = gradient(x0, problem).grad
        for _ in range(10):
            d = rng.standard_normal(6)
            d /= np.linalg.norm(d)
            eps = 1e-6
            jp, _ = eval_total(x0 + eps * d, problem)
            jm, _ = eval_total(x0 - eps * d, problem)
            fd_dir = (jp - jm) / (2.0 * eps)
            assert abs(fd_dir - g @ d) <= 1e-5 * max(1.0, abs(fd_dir))


class TestObservationSuperposition:
    def test_gradient_adds_over_observation_sets(self):
        # impulses from disjoint observation sets superpose linearly
        params = ModelParams(n_modes=3)
        window = IntegratorConfig(t_end=0.4, dt=1e-3)
        x0_true = state_vector(np.full(3, 0.05), np.zeros(3))
        truth = integrate(x0_true, params, window)
        rng = np.random.default_rng(14)
        n_a, n_b = np.array([80, 160]), np.array([240, 400])
        y_a = truth.pressure_series(0.8)[n_a] + 0.01 * rng.standard_normal(2)
        y_b = truth.pressure_series(0.8)[n_b] + 0.01 * rng.standard_normal(2)

        def problem_for(times, values):
            obs = ObservationSet(ObsKind.PRESSURE_POINT, 0.8, times, values)
            return AssimilationProblem(
                params=params,
                integrator=window,
                background=BackgroundSpec(BgKind.FULL_STATE, x0_true, 0.8),
                observations=obs,
                covariance=COV,
            )

        def empty_problem():
            return AssimilationProblem(
                params=params,
                integrator=window,
                background=BackgroundSpec(BgKind.FULL_STATE, x0_true, 0.8),
                observations=ObservationSet.empty(ObsKind.PRESSURE_POINT, 0.8, 3),
                covariance=COV,
            )

        x0 = x0_true + 0.01 * rng.standard_normal(6)
        g_a = gradient(x0, problem_for(truth.times[n_a], y_a)).grad
        g_b = gradient(x0, problem_for(truth.times[n_b], y_b)).grad
        g_none = gradient(x0, empty_problem()).grad
        g_both = gradient(
            x0,
            problem_for(
                np.concatenate([truth.times[n_a], truth.times[n_b]]),
                np.concatenate([y_a, y_b]),
            ),
        ).grad
        np.testing.assert_allclose(g_both, g_a + g_b - g_none, rtol=1e-12, atol=1e-9)


class TestErrorPaths:
    def test_forward_divergence_propagates(self):
        params = ModelParams(n_modes=2, beta=5e7)
        problem = AssimilationProblem(
            params=params,
            integrator=IntegratorConfig(t_end=2.0, dt=1e-3),
            background=BackgroundSpec(BgKind.FULL_STATE, np.full(4, 5.0), 0.8),
            observations=ObservationSet.empty(ObsKind.PRESSURE_POINT, 0.8, 2),
            covariance=COV,
        )
        with pytest.raises(IntegrationDivergedError):
            gradient(np.full(4, 5.0), problem)

    def test_fd_step_must_be_positive(self):
        problem = quadratic_only_problem()
        with pytest.raises(ValueError):
            fd_gradient(np.zeros(8), problem, step=0.0)
