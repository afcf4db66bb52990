import numpy as np
import pytest

import fastsel as fs
from fastsel import hjlimit
from fastsel.errors import SolverError
from fastsel.grid import TraitGrid
from fastsel.model import InitialDatum

from test_cell import autonomous_quadratic


class TestCounterexampleFitness:
    def setup_method(self):
        self.ef, self.exact_xbar, self.exact_u = hjlimit.rotation_counterexample()

    def test_vanishes_on_diagonal(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            y = rng.uniform(-1.5, 1.5, size=2)
            assert self.ef.value(y, y) == 0.0

    def test_direct_substitution(self):
        # F = 1, G = (-x2, x1), y = (1,0), x = (1,1): -4 + 2 (0,1).(0,1) = -2
        assert self.ef.value([1.0, 1.0], [1.0, 0.0]) == pytest.approx(-2.0, abs=1e-14)

    def test_selection_gradient_on_diagonal(self):
        y = np.array([0.4, -0.9])
        expect = 2.0 * np.array([-y[1], y[0]])
        assert np.allclose(self.ef.d1(y, y), expect, atol=1e-14)

    def test_mutant_hessian_is_negative_definite(self):
        H = self.ef.hessian1([0.3, 0.7])
        assert np.allclose(H, -8.0 * np.eye(2))


class TestCanonicalStep:
    def test_stationary_point(self):
        ef = fs.EffectiveFitness(autonomous_quadratic())
        out = hjlimit.canonical_step(ef, [0.0], np.array([[-2.0]]), 0.1)
        assert np.allclose(out, 0.0, atol=1e-14)

    def test_exponential_decay_closed_form(self):
        # R_eff = y^2 - x^2, M = -2: dx/dt = -x
        ef = fs.EffectiveFitness(autonomous_quadratic())
        x = np.array([0.8])
        dt = 0.05
        for _ in range(40):
            x = hjlimit.canonical_step(ef, x, np.array([[-2.0]]), dt)
        assert x[0] == pytest.approx(0.8 * np.exp(-2.0), rel=1e-6)

    def test_ansatz_mode_reproduces_rotation(self):
        ef, exact_xbar, _ = hjlimit.rotation_counterexample()
        x = np.array([1.0, 0.0])
        dt = 0.01
        for k in range(200):
            x = hjlimit.canonical_step(ef, x, None, dt, mode="ansatz", F=ef.F)
        assert np.linalg.norm(x - exact_xbar(2.0)) < 1e-8

    def test_indefinite_curvature_rejected(self):
        ef = fs.EffectiveFitness(autonomous_quadratic())
        with pytest.raises(SolverError):
            hjlimit.canonical_step(ef, [0.1], np.array([[2.0]]), 0.1)


class TestHjRun:
    def test_symmetric_fixed_point(self):
        ef = fs.EffectiveFitness(autonomous_quadratic())
        grid = TraitGrid(2.0, 256, 1)
        datum = InitialDatum(x0=np.array([0.0]), L=0.5, rho0=1.0)
        res = hjlimit.hj_run(ef, datum, grid, T=1.0)
        assert np.max(np.abs(res.xbar)) < grid.h
        assert res.drift_max < 1e-6

    def test_figure1_trait_descends_monotonically(self):
        ef = fs.EffectiveFitness(fs.figure1_model())
        grid = TraitGrid(2.0, 256, 1)
        datum = InitialDatum(x0=np.array([1.0]), L=0.5, rho0=1.0)
        res = hjlimit.hj_run(ef, datum, grid, T=1.0)
        x = res.xbar[:, 0]
        assert np.all(np.diff(x) <= 1e-10)
        assert 0.0 < x[-1] < x[0]
        gap = np.max(np.abs(res.xbar - res.xbar_ode))
        assert gap <= 5 * grid.h

    def test_counterexample_exact_solution_short(self):
        ef, exact_xbar, exact_u = hjlimit.rotation_counterexample()
        grid = TraitGrid(2.2, 96, 2)
        datum = InitialDatum(x0=np.array([1.0, 0.0]), L=1.0, rho0=1.0)
        T = 1.5
        res = hjlimit.hj_run(ef, datum, grid, T, canonical_mode="ansatz",
                             canonical_F=ef.F, cfl=0.3)
        assert res.drift_max <= 1e-3
        sup_u = np.max(np.abs(res.u - exact_u(grid.coords(), res.t[-1])))
        assert sup_u <= 5 * grid.h
        traj_err = max(np.linalg.norm(res.xbar[i] - exact_xbar(t))
                       for i, t in enumerate(res.t))
        assert traj_err <= 2 * grid.h

    def test_broken_fitness_trips_drift_guard(self):
        class Broken:
            dim = 1

            def surface(self, X, y, s_stride=None):
                return np.full(np.asarray(X).shape[:-1], 0.5)

            def d1(self, x, y):
                return np.zeros(1)

        grid = TraitGrid(2.0, 128, 1)
        datum = InitialDatum(x0=np.array([0.0]), L=0.5, rho0=1.0)
        with pytest.raises(SolverError, match="drift"):
            hjlimit.hj_run(Broken(), datum, grid, T=1.0, drift_fail=1e-2)

    def test_start_outside_viability_rejected(self):
        ef = fs.EffectiveFitness(fs.figure1_model())
        grid = TraitGrid(2.5, 256, 1)
        datum = InitialDatum(x0=np.array([1.8]), L=0.5, rho0=1.0)
        with pytest.raises(fs.DomainError):
            hjlimit.hj_run(ef, datum, grid, T=0.5)
