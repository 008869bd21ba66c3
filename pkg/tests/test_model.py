import numpy as np
import pytest
from hypothesis import given, strategies as st

from rijkeda import (
    ModelParams,
    acoustic_energy,
    damping,
    heat_release,
    reconstruct_pressure,
    reconstruct_velocity,
    rhs,
    split_state,
    state_vector,
)

DEFAULT_COEFFS = (-0.012, 0.059, -0.044, -0.108, 0.5)

finite_floats = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


class TestModelParams:
    def test_derived_arrays(self):
        p = ModelParams(n_modes=4, x_f=0.3)
        j = np.arange(1, 5)
        np.testing.assert_allclose(p.jpi, j * np.pi)
        np.testing.assert_allclose(p.sin_xf, np.sin(j * np.pi * 0.3))
        np.testing.assert_allclose(p.cos_xf, np.cos(j * np.pi * 0.3))
        np.testing.assert_allclose(p.zeta, 0.05 * j**2 + 0.01 * np.sqrt(j))

    def test_derived_arrays_read_only(self):
        p = ModelParams(n_modes=3)
        with pytest.raises(ValueError):
            p.zeta[0] = 1.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n_modes=0),
            dict(n_modes=-2),
            dict(n_modes=3, tau=0.0),
            dict(n_modes=3, tau=-1.0),
            dict(n_modes=3, x_f=0.0),
            dict(n_modes=3, x_f=1.0),
            dict(n_modes=3, poly_coeffs=(1.0, 2.0)),
            dict(n_modes=3, beta=float("nan")),
        ],
    )
    def test_invalid_params_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ModelParams(**kwargs)


class TestHeatRelease:
    def test_zero_input(self):
        p = ModelParams(n_modes=1, beta=1.0)
        assert heat_release(0.0, p) == 0.0

    def test_unit_input_is_coefficient_sum(self):
        # sum of the five coefficients = 0.395
        p = ModelParams(n_modes=1, beta=1.0, poly_coeffs=DEFAULT_COEFFS)
        assert heat_release(1.0, p) == pytest.approx(0.395, rel=1e-12)

    def test_negative_unit_input(self):
        # a2 + a4 - (a1 + a3 + a5) = -0.493
        p = ModelParams(n_modes=1, beta=1.0, poly_coeffs=DEFAULT_COEFFS)
        assert heat_release(-1.0, p) == pytest.approx(-0.493, rel=1e-12)

    def test_beta_scaling(self):
        p1 = ModelParams(n_modes=1, beta=1.0)
        p2 = ModelParams(n_modes=1, beta=2.5)
        assert heat_release(0.7, p2) == pytest.approx(2.5 * heat_release(0.7, p1), rel=1e-14)

    @given(u=finite_floats)
    def test_even_part_identity(self, u):
        # q(u) + q(-u) isolates the even-power terms
        p = ModelParams(n_modes=1, beta=1.3, poly_coeffs=DEFAULT_COEFFS)
        a = DEFAULT_COEFFS
        even = 2.0 * 1.3 * (a[1] * u**4 + a[3] * u**2)
        assert heat_release(u, p) + heat_release(-u, p) == pytest.approx(even, abs=1e-12)


class TestDamping:
    def test_mode_one(self):
        p = ModelParams(n_modes=4, c1=0.05, c2=0.01)
        assert damping(1, p) == pytest.approx(0.06, rel=1e-12)

    def test_mode_four(self):
        p = ModelParams(n_modes=4, c1=0.05, c2=0.01)
        assert damping(4, p) == pytest.approx(0.82, rel=1e-12)

    def test_mode_ten(self):
        p = ModelParams(n_modes=10, c1=0.05, c2=0.01)
        assert damping(10, p) == pytest.approx(5.0316, abs=1e-4)

    def test_out_of_range_rejected(self):
        p = ModelParams(n_modes=4)
        with pytest.raises(ValueError):
            damping(0, p)
        with pytest.raises(ValueError):
            damping(5, p)


class TestRhs:
    def test_undamped_oscillator_component(self):
        p = ModelParams(n_modes=2, c1=0.0, c2=0.0)
        x = state_vector([1.0, 0.0], [0.0, 0.0])
        dx = rhs(0.0, x, 0.0, p)  # t < tau: no forcing
        assert dx[0] == 0.0
        assert dx[2] == pytest.approx(-np.pi, rel=1e-14)

    def test_velocity_rate_from_pressure_mode(self):
        p = ModelParams(n_modes=2)
        x = state_vector([0.0, 0.0], [1.0, 0.0])
        dx = rhs(0.0, x, 0.0, p)
        assert dx[0] == pytest.approx(np.pi, rel=1e-14)

    def test_forced_zero_state(self):
        # -2 sin(0.3 pi) * 0.395 with unit delayed velocity
        p = ModelParams(n_modes=1, beta=1.0, x_f=0.3)
        x = state_vector([0.0], [0.0])
        dx = rhs(p.tau, x, 1.0, p)
        assert dx[1] == pytest.approx(-2.0 * np.sin(0.3 * np.pi) * 0.395, rel=1e-12)

    def test_forcing_absent_before_delay(self):
        p = ModelParams(n_modes=1, beta=1.0)
        x = state_vector([0.0], [0.0])
        assert np.all(rhs(0.5 * p.tau, x, 1.0, p) == 0.0)

    def test_linearity_without_forcing(self):
        p = ModelParams(n_modes=3, beta=0.0)
        rng = np.random.default_rng(1)
        for _ in range(5):
            x1, x2 = rng.standard_normal((2, 6))
            alpha = rng.uniform(-2, 2)
            lhs = rhs(1.0, alpha * x1 + x2, 0.3, p)
            sep = alpha * rhs(1.0, x1, 0.3, p) + rhs(1.0, x2, 0.3, p)
            np.testing.assert_allclose(lhs, sep, atol=1e-13)

    def test_energy_conserved_by_unforced_undamped_field(self):
        # gradient of E dotted with the state rate vanishes identically
        p = ModelParams(n_modes=5, beta=0.0, c1=0.0, c2=0.0)
        rng = np.random.default_rng(2)
        for _ in range(10):
            x = rng.standard_normal(10)
            assert abs(x @ rhs(1.0, x, 0.0, p)) <= 1e-12

    def test_wrong_state_length_rejected(self):
        p = ModelParams(n_modes=3)
        with pytest.raises(ValueError):
            rhs(0.0, np.zeros(4), 0.0, p)


class TestReconstruction:
    def test_velocity_at_duct_entry(self):
        x = state_vector([1.0, 0.0], [0.0, 0.0])
        assert reconstruct_velocity(x, 0.0) == pytest.approx(1.0, rel=1e-14)

    def test_velocity_single_mode(self):
        x = state_vector([1.0, 0.0], [0.0, 0.0])
        assert reconstruct_velocity(x, 0.3) == pytest.approx(np.cos(0.3 * np.pi), rel=1e-12)

    def test_velocity_zero_state(self):
        x = np.zeros(6)
        for pos in (0.0, 0.37, 1.0):
            assert reconstruct_velocity(x, pos) == 0.0

    def test_pressure_single_mode(self):
        x = state_vector([0.0, 0.0], [1.0, 0.0])
        assert reconstruct_pressure(x, 0.8) == pytest.approx(np.sin(0.8 * np.pi), rel=1e-12)

    @given(st.lists(finite_floats, min_size=6, max_size=6))
    def test_pressure_vanishes_at_open_ends(self, values):
        x = np.array(values)
        assert reconstruct_pressure(x, 0.0) == pytest.approx(0.0, abs=1e-12)
        assert reconstruct_pressure(x, 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_position_out_of_range(self):
        x = np.zeros(4)
        with pytest.raises(ValueError):
            reconstruct_velocity(x, -0.1)
        with pytest.raises(ValueError):
            reconstruct_pressure(x, 1.1)


def test_state_vector_round_trip():
    eta = np.array([1.0, 2.0, 3.0])
    mu = np.array([-1.0, 0.5, 0.0])
    x = state_vector(eta, mu)
    e, m = split_state(x)
    np.testing.assert_array_equal(e, eta)
    np.testing.assert_array_equal(m, mu)
    assert acoustic_energy(x) == pytest.approx(0.5 * (np.sum(eta**2) + np.sum(mu**2)))
