"""Tests for Mackey-Glass generation, resampling, and noise corruption."""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from sresn.errors import ConfigError, OutOfDomainError
from sresn.mackey_glass import (
    DEFAULT_GRID_DT,
    MGParams,
    MGSeries,
    NoisySpec,
    SNR_DISABLED,
    add_awgn,
    canonical_series,
    integrate_mg,
    resample_to_grid,
    signal_power,
    write_series_csv,
)


class TestIntegrator:
    def test_initial_value(self):
        traj = integrate_mg(MGParams())
        assert traj.values[0] == 0.5

    def test_pure_decay_matches_analytic(self):
        # With a=0 the delay term vanishes and q(t) = 0.5*exp(-b*t).
        params = MGParams(a=0.0, t_end=20.0)
        traj = integrate_mg(params)
        idx = round(10.0 / params.integrator_step)
        assert abs(traj.values[idx] - 0.5 * math.exp(-0.1 * 10.0)) < 1e-8

    def test_step_halving_full_trajectory(self):
        # Self-convergence oracle: the default step against half the step.
        coarse = integrate_mg(MGParams())
        fine = integrate_mg(MGParams(integrator_step=0.005))
        assert len(fine.values) == 2 * (len(coarse.values) - 1) + 1
        diff = np.max(np.abs(coarse.values - fine.values[::2]))
        assert diff < 1e-6

    def test_fourth_order_convergence(self):
        # Error against a much finer reference must shrink >= 8x per halving.
        t_end = 300.0
        ref = integrate_mg(MGParams(t_end=t_end, integrator_step=0.005))

        def err(h, stride):
            traj = integrate_mg(MGParams(t_end=t_end, integrator_step=h))
            return np.max(np.abs(traj.values - ref.values[::stride]))

        e_coarse = err(0.04, 8)
        e_fine = err(0.02, 4)
        assert e_coarse / e_fine >= 8.0

    def test_delay_term_uses_history_before_tau(self):
        # For t < tau the delayed argument is negative, so the equation is the
        # plain ODE q' = a*c/(1+c^10) - b*q with c = history_value. Integrate
        # that ODE independently with a tight-tolerance adaptive solver.
        params = MGParams(t_end=17.0)
        traj = integrate_mg(params)
        c = params.history_value
        production = params.a * c / (1.0 + c**10)

        sol = solve_ivp(
            lambda t, y: production - params.b * y[0],
            (0.0, 17.0),
            [c],
            rtol=1e-12,
            atol=1e-14,
            dense_output=True,
        )
        probe_t = np.array([1.0, 5.0, 12.0, 16.99])
        ours = np.interp(probe_t, traj.times(), traj.values)
        np.testing.assert_allclose(ours, sol.sol(probe_t)[0], atol=1e-9)

    def test_invalid_params_rejected(self):
        with pytest.raises(ConfigError):
            MGParams(b=0.0)
        with pytest.raises(ConfigError):
            MGParams(integrator_step=20.0)  # larger than tau


class TestResampling:
    def test_default_grid(self):
        series = canonical_series()
        assert series.n_points == 3500
        assert series.dt == 2950.0 / 3500.0
        assert abs(series.dt - 0.8428571) < 1e-6
        assert series.t_start == 50.0

    def test_grid_point_on_integrator_sample_is_exact(self):
        # Dyadic steps make the grid times bit-equal to trajectory knots.
        traj = integrate_mg(MGParams(t_end=40.0, integrator_step=0.25))
        series = resample_to_grid(traj, t_start=2.0, n_points=50, dt=0.5)
        knots = traj.values[8 : 8 + 100 : 2]
        assert np.array_equal(series.values, knots)

    def test_step_halving_carries_through_resampling(self):
        fine = integrate_mg(MGParams(integrator_step=0.005))
        s_coarse = canonical_series()
        s_fine = resample_to_grid(fine)
        assert np.max(np.abs(s_coarse.values - s_fine.values)) < 1e-6

    def test_idempotent_on_own_grid(self):
        series = canonical_series()
        again = resample_to_grid(series, series.t_start, series.n_points, series.dt)
        assert np.max(np.abs(again.values - series.values)) < 1e-12

    def test_out_of_domain_rejected(self):
        traj = integrate_mg(MGParams(t_end=100.0))
        with pytest.raises(OutOfDomainError):
            resample_to_grid(traj, t_start=50.0, n_points=100, dt=1.0)


class TestAwgn:
    def test_disabled_snr_is_identity(self):
        series = canonical_series()
        out = add_awgn(series, NoisySpec(snr_db=SNR_DISABLED, noise_seed=3))
        assert out is series

    def test_empirical_snr_close_to_requested(self):
        series = canonical_series()
        out = add_awgn(series, NoisySpec(snr_db=20.0, noise_seed=7))
        noise = out.values - series.values
        realized = 10.0 * math.log10(signal_power(series) / np.var(noise))
        assert abs(realized - 20.0) < 0.5

    def test_noise_variance_matches_snr_formula(self):
        series = canonical_series()
        out = add_awgn(series, NoisySpec(snr_db=30.0, noise_seed=7))
        eta2 = signal_power(series) / 10.0**3
        # Scale out the known unit-variance draws to recover eta^2 exactly.
        noise = out.values - series.values
        draws_var = np.var(noise) / eta2
        assert 10.0 * math.log10(signal_power(series) / (eta2 * draws_var)) == (
            pytest.approx(30.0 - 10.0 * math.log10(draws_var), rel=1e-9)
        )

    def test_same_seed_bit_identical(self):
        series = canonical_series()
        spec = NoisySpec(snr_db=20.0, noise_seed=11)
        a = add_awgn(series, spec)
        b = add_awgn(series, spec)
        assert np.array_equal(a.values, b.values)

    def test_different_seed_differs(self):
        series = canonical_series()
        a = add_awgn(series, NoisySpec(snr_db=20.0, noise_seed=1))
        b = add_awgn(series, NoisySpec(snr_db=20.0, noise_seed=2))
        assert not np.array_equal(a.values, b.values)

    def test_rejects_nan_snr(self):
        with pytest.raises(ConfigError):
            NoisySpec(snr_db=float("nan"))


class TestSeriesCsv:
    def test_round_trip(self, tmp_path):
        series = canonical_series()
        path = tmp_path / "mg.csv"
        write_series_csv(path, series)
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape == (3500, 2)
        assert np.array_equal(data[:, 1], series.values)

    def test_noisy_column(self, tmp_path):
        series = canonical_series()
        noisy = add_awgn(series, NoisySpec(snr_db=20.0, noise_seed=5))
        path = tmp_path / "mg.csv"
        write_series_csv(path, series, noisy)
        with open(path) as fh:
            header = fh.readline().strip()
        assert header == "t,q,q_noisy"
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert np.array_equal(data[:, 2], noisy.values)

    def test_series_validation(self):
        with pytest.raises(ConfigError):
            MGSeries(values=np.array([1.0, np.nan]), t_start=0.0, dt=1.0)
