import dataclasses

import numpy as np
import pytest

import fastsel as fs
from fastsel import direct
from fastsel.errors import ConfigurationError
from fastsel.grid import TraitGrid
from fastsel.model import InitialDatum


def logistic_model():
    return fs.custom_model(
        lambda x, s, I: 1.0 - np.asarray(I) + 0.0 * np.asarray(s)
        + 0.0 * np.sum(np.asarray(x) ** 2, axis=-1))


@pytest.fixture(scope="module")
def fig1_coarse():
    """Cheap figure1 run shared by the observable tests."""
    m = fs.figure1_model()
    grid = TraitGrid(2.0, 512, 1)
    datum = InitialDatum(x0=np.array([1.0]), L=0.5, rho0=1.0)
    state = direct.run(m, datum, grid, 0.02, T=1.0, cadence=0.002)
    return m, grid, datum, state


class TestStep:
    def test_resource_integral_of_gaussian(self):
        m = logistic_model()
        grid = TraitGrid(2.0, 512, 1)
        datum = InitialDatum(x0=np.array([0.0]), L=0.5, rho0=0.7)
        u0, _ = fs.initial_field(datum, grid, 0.01, m)
        assert direct.resource_integral(u0, grid, 0.01, m) == pytest.approx(0.7, rel=1e-8)

    def test_cfl_guard(self):
        m = logistic_model()
        grid = TraitGrid(2.0, 128, 1)
        datum = InitialDatum(x0=np.array([0.0]), L=0.5, rho0=1.0)
        u0, _ = fs.initial_field(datum, grid, 0.05, m)
        state = direct.SimState(u=u0, t=0.0, eps=0.05, grid=grid)
        with pytest.raises(ConfigurationError, match="CFL"):
            direct.step(state, m, dt=1.0)

    def test_zero_rate_hamiltonian_is_nonnegative(self):
        # with R = 0 the only negative contribution is the eps-diffusion of
        # a strict maximum: u_t >= eps * Lap u pointwise
        m = fs.custom_model(lambda x, s, I: 0.0 * np.asarray(I) + 0.0 * np.asarray(s)
                            + 0.0 * np.sum(np.asarray(x) ** 2, axis=-1))
        grid = TraitGrid(2.0, 256, 1)
        datum = InitialDatum(x0=np.array([0.3]), L=0.5, rho0=1.0)
        eps = 1e-3
        u0, _ = fs.initial_field(datum, grid, eps, m)
        state = direct.SimState(u=u0, t=0.0, eps=eps, grid=grid)
        dt = 1e-5
        stepped = direct.step(state, m, dt)
        from fastsel.grid import laplacian
        floor = u0 + dt * eps * laplacian(u0, grid.h)
        assert np.all(stepped.u >= floor - 1e-15)


class TestRun:
    def test_logistic_resource_oracle(self):
        # x-independent rate: dI/dt = I (1 - I) / eps exactly, so the
        # resource follows the closed-form logistic curve
        m = logistic_model()
        grid = TraitGrid(2.0, 256, 1)
        datum = InitialDatum(x0=np.array([0.0]), L=0.5, rho0=0.5)
        eps = 0.02
        state = direct.run(m, datum, grid, eps, T=0.5, cadence=0.002)
        h = state.history
        exact = 1.0 / (1.0 + (1.0 / 0.5 - 1.0) * np.exp(-h.t / eps))
        assert np.max(np.abs(h.I - exact)) < 0.01
        assert direct.monotone_dips(h.I) == 0.0
        assert abs(h.max_u[-1]) < 5 * eps

    def test_symmetric_start_stays_centered(self, fig1_coarse):
        m, grid, _, _ = fig1_coarse
        datum = InitialDatum(x0=np.array([0.0]), L=0.5, rho0=1.0)
        state = direct.run(m, datum, grid, 0.02, T=0.3)
        assert np.max(np.abs(state.history.xbar)) < grid.h

    def test_oscillation_locked_to_environment(self, fig1_coarse):
        m, grid, datum, state = fig1_coarse
        h = state.history
        sel = h.t >= 0.4
        f, df = direct.oscillation_peak(h.t[sel], h.I[sel], detrend_window=0.2)
        assert abs(f - 1.0 / state.eps) <= df + 1e-9

    def test_resource_bounds(self, fig1_coarse):
        m, _, _, state = fig1_coarse
        h = state.history
        assert np.min(h.I) > 0.0
        assert np.max(h.I) <= m.constants["I_M"] + 1.0 * state.eps

    def test_concavity_band_persists(self, fig1_coarse):
        m, grid, datum, state = fig1_coarse
        h = state.history
        ell = 2.0 * datum.L
        l_hi = max(ell, np.sqrt(m.constants["K1"] / 2.0))
        l_lo = min(ell, np.sqrt(m.constants["K2"] / 2.0))
        tol = 10 * grid.h
        assert np.min(h.d2_min) >= -l_hi - tol
        assert np.max(h.d2_max) <= -l_lo + tol

    def test_trait_moves_toward_fittest(self, fig1_coarse):
        _, _, _, state = fig1_coarse
        x = state.history.xbar[:, 0]
        assert x[0] == pytest.approx(1.0, abs=1e-6)
        assert x[-1] < 0.5  # decays toward 0 on the e-folding scale

    def test_mesh_refinement_stability(self):
        m = fs.figure1_model()
        datum = InitialDatum(x0=np.array([1.0]), L=0.5, rho0=1.0)
        vals = []
        for n in (512, 1024):
            grid = TraitGrid(2.0, n, 1)
            state = direct.run(m, datum, grid, 0.02, T=1.0, cadence=0.01)
            vals.append(state.history.I[-1])
        assert abs(vals[1] - vals[0]) / vals[1] < 0.01


class TestObservables:
    def test_running_average_of_constant(self):
        t = np.linspace(0, 1, 201)
        out = direct.running_average(t, np.full_like(t, 3.3), 0.1)
        assert np.allclose(out, 3.3, atol=1e-13)

    def test_running_average_kills_full_periods(self):
        eps = 0.01
        t = np.arange(0, 2, eps / 10.0)
        v = 2.0 + np.sin(2 * np.pi * t / eps)
        out = direct.running_average(t, v, 10 * eps)
        k = 50
        assert np.max(np.abs(out[k:-k] - 2.0)) < 1e-10

    def test_window_below_cadence_rejected(self):
        t = np.linspace(0, 1, 11)
        with pytest.raises(ConfigurationError):
            direct.running_average(t, t, 0.01)

    def test_monotone_dips(self):
        assert direct.monotone_dips(np.array([0.0, 1.0, 0.4, 2.0])) == pytest.approx(0.6)
        assert direct.monotone_dips(np.array([0.0, 1.0, 2.0])) == 0.0


class TestSeparableRatio:
    def test_constant_b_gives_constant_ratio(self):
        m = fs.separable_model()
        flat = dataclasses.replace(
            m, b=lambda x: np.full(np.asarray(x).shape[:-1], 1.7))
        grid = TraitGrid(2.0, 256, 1)
        datum = InitialDatum(x0=np.array([0.5]), L=0.5, rho0=0.3)
        u0, _ = fs.initial_field(datum, grid, 0.02, m)
        assert direct.fitness_ratio(u0, grid, 0.02, flat) == pytest.approx(1.7, abs=1e-12)

    def test_ratio_recorded_and_drifts_up(self):
        m = fs.separable_model()
        grid = TraitGrid(2.0, 256, 1)
        datum = InitialDatum(x0=np.array([1.0]), L=0.5, rho0=0.3)
        state = direct.run(m, datum, grid, 0.02, T=1.5, cadence=0.01)
        F = state.history.F
        assert F is not None
        assert direct.monotone_dips(F) <= 5 * state.eps
        assert F[-1] > F[0]

    def test_wrong_family_rejected(self):
        m = fs.figure1_model()
        grid = TraitGrid(2.0, 256, 1)
        datum = InitialDatum(x0=np.array([1.0]), L=0.5, rho0=1.0)
        with pytest.raises(fs.DomainError):
            direct.run(m, datum, grid, 0.02, T=0.1, record_f=True)


class TestResidual:
    def test_log_residual_matches_direct_computation(self, fig1_coarse):
        m, _, _, state = fig1_coarse
        h = state.history
        r = direct.log_resource_residual(m, h, state.eps, 0.5, 1.0, ms=2048)
        sel = (h.t >= 0.5) & (h.t <= 1.0)
        worst = 0.0
        for t, I_val, xb in zip(h.t[sel][::25], h.I[sel][::25], h.xbar[sel][::25]):
            orb = fs.solve_orbit(m, xb)
            worst = max(worst, abs(np.log(I_val) - np.log(orb.at_phase(t / state.eps))))
        assert r >= worst - 1e-12
        assert r < 0.5
