import numpy as np
import pytest

import fastsel as fs
from fastsel import cell
from fastsel.errors import ConfigurationError, DomainError

from _oracles import ALPHA_FIG1_AT_0, ALPHA_FIG1_AT_07, orbit_oracle


def autonomous_quadratic(dim=1):
    """R = 1 - |x|^2 - I: orbit at y is the constant 1 - |y|^2."""
    def rate(x, s, I):
        return 1.0 - np.sum(np.square(np.asarray(x, dtype=float)), axis=-1) \
            - np.asarray(I) + 0.0 * np.asarray(s)

    def rate_dx(x, s, I):
        x = np.asarray(x, dtype=float)
        lead = np.broadcast(np.asarray(s), np.asarray(I)).shape
        coef = np.full(lead, -2.0) if lead else np.asarray(-2.0)
        return np.asarray(coef)[..., None] * x

    def rate_dI(x, s, I):
        return -np.ones(np.broadcast(np.asarray(s), np.asarray(I)).shape)

    return fs.custom_model(rate, dim=dim, rate_dx=rate_dx, rate_dI=rate_dI)


class TestViability:
    def test_figure1_center(self):
        label, mu = fs.in_x(fs.figure1_model(), 0.0)
        assert label == "inside"
        assert mu == pytest.approx(7.5, abs=1e-10)

    def test_figure1_boundary(self):
        # 4 (2 - x^2) = 0.5  =>  x = sqrt(15/8)
        label, mu = fs.in_x(fs.figure1_model(), np.sqrt(1.875))
        assert label == "boundary"
        assert abs(mu) <= 1e-9

    def test_outside(self):
        label, _ = fs.in_x(fs.figure1_model(), 1.5)
        assert label == "outside"


class TestOrbits:
    def test_autonomous_constant_orbit(self):
        orb = fs.solve_orbit(autonomous_quadratic(), 0.0)
        assert np.allclose(orb.I, 1.0, atol=1e-12)
        assert orb.mean == pytest.approx(1.0, abs=1e-12)
        assert orb.alpha == pytest.approx(0.0, abs=1e-12)

    def test_oscillator_mean_forced_by_periodicity(self):
        osc = fs.custom_model(
            lambda x, s, I: (2.0 + np.sin(2 * np.pi * np.asarray(s))) - np.asarray(I)
            + 0.0 * np.sum(np.asarray(x) ** 2, axis=-1))
        orb = fs.solve_orbit(osc, 0.0)
        assert orb.mean == pytest.approx(2.0, abs=1e-8)
        assert orb.residual <= 1e-10

    def test_figure1_against_adaptive_oracle(self):
        orb = fs.solve_orbit(fs.figure1_model(), 0.0)
        assert orb.alpha == pytest.approx(ALPHA_FIG1_AT_0, abs=1e-9)
        assert orb.mean == pytest.approx(7.5, abs=1e-8)
        orb7 = fs.solve_orbit(fs.figure1_model(), 0.7)
        assert orb7.alpha == pytest.approx(ALPHA_FIG1_AT_07, abs=1e-9)

    def test_concave_family_mean_identity(self):
        # multiply the cycle ODE by (I + gamma)/I and integrate:
        # mean = 2 (a - x^2)/delta - gamma, exactly
        m = fs.concave_quadratic_model(a=1.5, gamma=0.8, delta=0.3)
        for x in (0.0, 0.4, 0.8):
            orb = fs.solve_orbit(m, x)
            assert orb.mean == pytest.approx(2 * (1.5 - x * x) / 0.3 - 0.8, abs=1e-8)

    def test_boundary_anchor_is_zero_orbit(self):
        orb = fs.solve_orbit(fs.figure1_model(), np.sqrt(1.875))
        assert np.all(orb.I == 0.0)
        assert orb.mean == 0.0

    def test_outside_anchor_rejected(self):
        with pytest.raises(DomainError):
            fs.solve_orbit(fs.figure1_model(), 1.6)

    def test_picard_iterates_contract(self):
        trace = cell.picard_trace(fs.figure1_model(), 0.2)
        steps = np.abs(np.diff(trace))
        steps = steps[steps > 1e-13]
        ratios = steps[1:] / steps[:-1]
        assert np.all(ratios < 1.0)

    def test_warm_start_cuts_iterations(self):
        m = fs.figure1_model()
        cold = fs.solve_orbit(m, 0.5)
        warm = fs.solve_orbit(m, 0.5001, seed_hint=cold.alpha)
        assert warm.iterations < cold.iterations

    def test_orbit_phase_interpolation(self):
        orb = fs.solve_orbit(fs.figure1_model(), 0.0)
        assert orb.at_phase(0.0) == pytest.approx(orb.I[0], abs=1e-12)
        assert orb.at_phase(2.25) == pytest.approx(orb.at_phase(0.25), abs=1e-12)


class TestBoundaryDecay:
    def test_monotone_decay_along_path(self):
        m = fs.figure1_model()
        x_edge = np.sqrt(1.875)
        anchors = [x_edge * (1.0 - 2.0 ** (-j)) for j in range(1, 7)]
        peaks = fs.boundary_decay_check(m, anchors)
        assert all(b < a for a, b in zip(peaks, peaks[1:]))
        assert peaks[-1] < peaks[0] / 10.0

    def test_linear_decay_for_autonomous_family(self):
        # R = (1 - x^2) - I has constant orbit exactly at the margin value
        m = fs.custom_model(
            lambda x, s, I: 1.0 - np.sum(np.square(np.asarray(x)), axis=-1)
            - np.asarray(I) + 0.0 * np.asarray(s))
        anchors = [0.2, 0.6, 0.9]
        peaks = fs.boundary_decay_check(m, anchors)
        for a, p in zip(anchors, peaks):
            assert p == pytest.approx(1.0 - a * a, abs=1e-9)

    def test_unordered_path_rejected(self):
        with pytest.raises(ConfigurationError):
            fs.boundary_decay_check(fs.figure1_model(), [0.9, 0.2])


class TestEffectiveFitness:
    def test_autonomous_closed_form(self):
        for dim in (1, 2):
            ef = fs.EffectiveFitness(autonomous_quadratic(dim))
            rng = np.random.default_rng(11)
            for _ in range(20):
                x = rng.uniform(-0.6, 0.6, size=dim)
                y = rng.uniform(-0.6, 0.6, size=dim)
                expect = float(np.sum(y**2) - np.sum(x**2))
                assert ef.value(x, y) == pytest.approx(expect, abs=1e-10)

    def test_diagonal_vanishes_across_presets(self):
        rng = np.random.default_rng(23)
        presets = [fs.figure1_model(), fs.concave_quadratic_model(a=1.5, gamma=0.8, delta=0.3),
                   fs.separable_model(), fs.fluctuation_model(a=0.8)]
        for m in presets:
            ef = fs.EffectiveFitness(m)
            for _ in range(10):
                x = rng.uniform(-0.5, 0.5, size=m.dim) * m.validation_half_width
                assert abs(ef.value(x, x)) <= 1e-8

    def test_boundary_resident_uses_zero_resource(self):
        m = fs.figure1_model()
        ef = fs.EffectiveFitness(m)
        y = np.sqrt(1.875)
        assert ef.value(0.3, y) == pytest.approx(fs.viability_margin(m, 0.3), abs=1e-10)

    def test_quadrature_convergence(self):
        m = fs.figure1_model()
        v1 = fs.EffectiveFitness(m, ms=4096).value(0.3, 0.8)
        v2 = fs.EffectiveFitness(m, ms=8192).value(0.3, 0.8)
        assert abs(v1 - v2) < 1e-8

    def test_surface_matches_pointwise_values(self):
        for m in (fs.figure1_model(), fs.separable_model()):
            ef = fs.EffectiveFitness(m)
            X = np.linspace(-0.7, 0.7, 31)[:, None]
            fast = ef.surface(X, [0.25])
            slow = np.array([ef.value(x, [0.25]) for x in X])
            assert np.max(np.abs(fast - slow)) < 1e-12

    def test_mutant_concavity_chord(self):
        m = fs.figure1_model()
        ef = fs.EffectiveFitness(m)
        k2 = m.constants["K2"]
        rng = np.random.default_rng(5)
        for _ in range(25):
            x, y = rng.uniform(-1.2, 1.2, size=2)
            mid = ef.value([(x + y) / 2], [0.4])
            chord = 0.5 * (ef.value([x], [0.4]) + ef.value([y], [0.4]))
            assert mid >= chord + (k2 / 8.0) * (x - y) ** 2 - 1e-10

    def test_separable_ratio_structure(self):
        # R_eff(x, y) = <D along the orbit> (b(x)/b(y) - 1)
        m = fs.separable_model()
        ef = fs.EffectiveFitness(m)
        y = np.array([0.3])
        orb = ef.orbit(y)
        d_avg = float(cell.simpson_weights(ef.ms) @ m.D(orb.s, orb.I))
        for xv in (-0.4, 0.0, 0.5):
            expect = d_avg * (float(m.b(np.array([xv]))) / float(m.b(y)) - 1.0)
            assert ef.value([xv], y) == pytest.approx(expect, abs=1e-8)

    def test_gradient_closed_form_and_stationarity(self):
        ef = fs.EffectiveFitness(autonomous_quadratic())
        assert ef.d1([0.3], [0.5])[0] == pytest.approx(-0.6, abs=1e-10)
        ef1 = fs.EffectiveFitness(fs.figure1_model())
        assert abs(ef1.d1([0.0], [0.6])[0]) <= 1e-6  # maximizer of the mutant map

    def test_cache_bounded_and_warm(self):
        ef = fs.EffectiveFitness(fs.figure1_model(), cache_size=16)
        for y in np.linspace(-0.5, 0.5, 64):
            ef.orbit([y])
        assert len(ef._cache) <= 16


class TestFOrbits:
    def test_band_and_residual(self):
        m = fs.separable_model()
        c = m.constants
        for F in np.linspace(c["b_m"] + 0.05, c["b_M"], 5):
            orb = fs.solve_f_orbit(m, F)
            assert orb.residual <= 1e-10
            assert c["Itilde_m"] - 1e-6 <= np.min(orb.I)
            assert np.max(orb.I) <= c["Itilde_M"] + 1e-6

    def test_oracle_value(self):
        m = fs.fluctuation_model(a=0.8)
        orb = fs.solve_f_orbit(m, 2.0)
        _, mean = orbit_oracle(lambda s, I: 2.0 - (1 + 0.8 * np.sin(2 * np.pi * s)) * I)
        assert orb.mean == pytest.approx(mean, abs=1e-9)

    def test_wrong_family_rejected(self):
        with pytest.raises(DomainError):
            fs.solve_f_orbit(fs.figure1_model(), 1.0)

    def test_out_of_band_rejected(self):
        m = fs.separable_model()
        with pytest.raises(DomainError):
            fs.solve_f_orbit(m, m.constants["b_M"] + 0.5)
