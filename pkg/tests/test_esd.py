import dataclasses

import numpy as np
import pytest

import fastsel as fs
from fastsel import esd, hjlimit
from fastsel.errors import DomainError
from fastsel.grid import TraitGrid
from fastsel.model import InitialDatum

from test_cell import autonomous_quadratic
from _oracles import RHO_STAR_FLUCT_08


class TestBestResponse:
    def test_autonomous_map_is_origin(self):
        ef = fs.EffectiveFitness(autonomous_quadratic())
        grid = TraitGrid(0.9, 129, 1)
        for x in (-0.5, 0.0, 0.7):
            z, info = esd.a_map(ef, [x], grid)
            assert info["converged"]
            assert abs(z[0]) < 1e-8

    def test_figure1_map_is_origin(self):
        ef = fs.EffectiveFitness(fs.figure1_model())
        grid = TraitGrid(1.3, 129, 1)
        z, info = esd.a_map(ef, [0.8], grid)
        assert info["converged"] and abs(z[0]) < 1e-8

    def test_separable_map_is_argmax_b(self):
        m = fs.separable_model(xb=0.2)
        ef = fs.EffectiveFitness(m)
        grid = TraitGrid(m.validation_half_width, 129, 1)
        for x in (-0.3, 0.5):
            z, _ = esd.a_map(ef, [x], grid)
            assert z[0] == pytest.approx(0.2, abs=1e-7)


class TestFixedPoint:
    def test_autonomous_limit_state(self):
        ef = fs.EffectiveFitness(autonomous_quadratic())
        grid = TraitGrid(0.9, 129, 1)
        res = esd.esd_fixed_point(ef, [0.6], grid)
        assert res.converged
        assert abs(res.xbar_inf[0]) < 1e-8
        assert res.rho_inf == pytest.approx(1.0, abs=1e-8)
        assert res.residuals["diag_fitness"] <= 1e-8
        assert res.residuals["grid_max_fitness"] <= 1e-6

    def test_figure1_limit_state(self):
        ef = fs.EffectiveFitness(fs.figure1_model())
        grid = TraitGrid(1.3, 257, 1)
        res = esd.esd_fixed_point(ef, [1.0], grid)
        assert res.converged
        assert abs(res.xbar_inf[0]) < 1e-6
        # exact cycle-mean identity of the family: 4 (2 - 0) - 0.5
        assert res.rho_inf == pytest.approx(7.5, abs=1e-6)

    def test_rotating_fitness_never_settles(self):
        ef, _, _ = hjlimit.rotation_counterexample()
        grid = TraitGrid(2.0, 65, 2)
        res = esd.esd_fixed_point(ef, [0.3, 0.0], grid, max_iter=60)
        assert not res.converged


class TestSeparableLimit:
    def test_quadratic_b_maximizer(self):
        x_star, f_star, rho_star = esd.separable_limit(fs.separable_model())
        assert abs(x_star[0]) < 1e-8
        assert f_star == pytest.approx(2.0, abs=1e-10)
        assert rho_star > 0

    def test_autonomous_rates_reduce_to_scalar_root(self):
        # aB = aD = 0: the orbit is the constant I with F B(I) = D(I),
        # here
        # 2/(1+I) = (1+I), so rho* = sqrt(2) - 1
        m = fs.separable_model(aB=0.0, aD=0.0)
        _, _, rho_star = esd.separable_limit(m)
        assert rho_star == pytest.approx(np.sqrt(2.0) - 1.0, abs=1e-9)

    def test_two_maxima_rejected(self):
        m = fs.separable_model()
        double = dataclasses.replace(
            m, b=lambda x: 1.5 - (np.sum(np.square(np.asarray(x)), axis=-1) - 0.25) ** 2)
        with pytest.raises(DomainError, match="non-unique"):
            esd.separable_limit(double)


class TestFluctuationBenefit:
    def test_linear_d2_reference_numbers(self):
        rep = esd.fluctuation_compare(fs.fluctuation_model(a=0.8))
        assert rep.rho_av == pytest.approx(2.0, abs=1e-9)
        assert rep.rho_star == pytest.approx(RHO_STAR_FLUCT_08, abs=1e-9)
        assert rep.gap > 0.05
        assert max(rep.identity_residuals) <= 1e-8
        assert rep.d1_av == pytest.approx(1.0, abs=1e-12)
        # with D2(I) = I the Cauchy-Schwarz slack is exactly the mass gap
        assert rep.cs_slack == pytest.approx(rep.gap, abs=1e-9)

    def test_constant_oscillation_closes_the_gap(self):
        rep = esd.fluctuation_compare(fs.fluctuation_model(a=0.0))
        assert abs(rep.rho_star - rep.rho_av) <= 1e-6

    def test_concave_power_keeps_benefit(self):
        rep = esd.fluctuation_compare(fs.fluctuation_model(a=0.8, power=0.7))
        assert rep.gap > 0.0
        assert max(rep.identity_residuals) <= 1e-8

    def test_wrong_family_rejected(self):
        with pytest.raises(DomainError):
            esd.fluctuation_compare(fs.separable_model())


class TestLongTimeConsistency:
    def test_separable_fitness_ratio_is_a_lyapunov_function(self):
        # b(xbar(t)) must increase along the limit dynamics
        m = fs.separable_model()
        ef = fs.EffectiveFitness(m)
        grid = TraitGrid(1.5, 257, 1)
        datum = InitialDatum(x0=np.array([0.7]), L=0.5, rho0=0.3)
        res = hjlimit.hj_run(ef, datum, grid, T=2.0)
        lyap = m.b(res.xbar)
        from fastsel.direct import monotone_dips
        assert monotone_dips(lyap) <= 1e-6

    def test_trajectory_endpoint_approaches_fixed_point(self):
        ef = fs.EffectiveFitness(fs.figure1_model())
        grid = TraitGrid(2.0, 256, 1)
        datum = InitialDatum(x0=np.array([1.0]), L=0.5, rho0=1.0)
        res = hjlimit.hj_run(ef, datum, grid, T=6.0)
        fixed = esd.esd_fixed_point(ef, [1.0], TraitGrid(1.3, 257, 1))
        assert abs(res.xbar[-1, 0] - fixed.xbar_inf[0]) <= 2 * grid.h
