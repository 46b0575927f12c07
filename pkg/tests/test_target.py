import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randfeat import target as tg
from randfeat.errors import BarronNormDivergent, UnsupportedDerivativeOrder


class TestEval:
    def test_unit_bump_at_origin(self):
        g = tg.gaussian_target(2)
        assert g.eval((0, 0), np.array([[0.0, 0.0]]))[0] == pytest.approx(1.0)

    def test_gradient_vanishes_at_center(self):
        g = tg.gaussian_target(2)
        assert g.eval((1, 0), np.array([[0.0, 0.0]]))[0] == pytest.approx(0.0)

    def test_atomic_cosine_value(self):
        ct = tg.cosine_target([2.0, 0.0])
        val = ct.eval((0, 0), np.array([[math.pi / 4.0, 1.0]]))[0]
        assert val == pytest.approx(0.0, abs=1e-12)

    def test_second_derivative_of_unit_bump(self):
        g = tg.gaussian_target(1)
        assert g.eval((2,), np.array([0.0])) == pytest.approx(-1.0)

    def test_order_above_m_max_raises(self):
        g = tg.gaussian_target(1)
        with pytest.raises(UnsupportedDerivativeOrder):
            g.eval((7,), np.array([0.0]))

    def test_derivatives_match_finite_differences(self):
        mix = tg.mixture_target(2, [(1.0, 1.0, [0.0, 0.0]), (-0.4, 0.6, [0.5, -0.2])])
        h = 1e-5
        x = np.array([0.3, -0.7])
        for j, alpha in enumerate([(1, 0), (0, 1)]):
            step = np.zeros(2)
            step[j] = h
            numeric = (mix.eval((0, 0), (x + step)[None, :])[0]
                       - mix.eval((0, 0), (x - step)[None, :])[0]) / (2 * h)
            assert mix.eval(alpha, x[None, :])[0] == pytest.approx(numeric, abs=1e-8)


class TestBarronNorm:
    def test_unit_bump_b0_is_one(self):
        assert tg.gaussian_target(1).barron_norm(0.0) == pytest.approx(1.0, abs=1e-9)
        assert tg.gaussian_target(2).barron_norm(0.0) == pytest.approx(1.0, abs=1e-9)

    def test_unit_bump_b1(self):
        expected = 1.0 + math.sqrt(2.0 / math.pi)
        assert tg.gaussian_target(1).barron_norm(1.0) == pytest.approx(expected, abs=1e-9)

    def test_atomic_norms_are_finite_sums(self):
        ct = tg.cosine_target([1.0])
        assert ct.barron_norm(0.0) == pytest.approx(1.0)
        assert ct.barron_norm(2.0) == pytest.approx(4.0)

    def test_radial_and_tensor_paths_agree(self):
        # A zero-amplitude second bump at a different center forces the
        # tensor-quadrature path without changing the spectrum.
        radial = tg.gaussian_target(1, scale=0.9)
        forced = tg.mixture_target(1, [(1.0, 0.9, [0.0]), (0.0, 0.9, [0.4])])
        assert radial.is_radial and not forced.is_radial
        for s in (0.0, 1.0, 2.0):
            assert forced.barron_norm(s) == pytest.approx(radial.barron_norm(s), rel=1e-7)

    def test_cancellation_reduces_mass_below_envelope(self):
        moved = tg.mixture_target(1, [(1.0, 1.0, [0.2]), (-0.5, 0.7, [-0.1])])
        env_norm = sum(abs(b.amplitude) for b in moved.bumps)
        assert moved.barron_norm(0.0) <= env_norm + 1e-9

    def test_divergence_guard_trips_on_flat_tail(self):
        with pytest.raises(BarronNormDivergent):
            tg._divergence_guard(lambda r: 1.0, 10.0, 1e-9)


class TestSpectralStructure:
    def test_atoms_closed_under_conjugation(self):
        t = tg.atomic_target(1, [((2.0,), 0.3 + 0.4j)])
        omegas = {a.omega for a in t.atoms}
        assert (2.0,) in omegas and (-2.0,) in omegas
        coeffs = {a.omega: a.coeff for a in t.atoms}
        assert coeffs[(-2.0,)] == np.conj(coeffs[(2.0,)])

    def test_magnitude_even_phase_odd(self):
        t = tg.mixture_target(2, [(1.0, 1.0, [0.3, -0.1]), (0.5, 0.8, [0.0, 0.4])])
        rng = np.random.default_rng(0)
        w = rng.normal(size=(1000, 2))
        fw = t.f_hat(w)
        fw_neg = t.f_hat(-w)
        assert np.allclose(fw_neg, np.conj(fw), atol=1e-14)

    def test_translation_preserves_barron_norms(self):
        t = tg.gaussian_target(1, scale=0.9, center=[0.2])
        shifted = t.translated([0.7])
        for s in (0.0, 1.0, 2.0):
            assert shifted.barron_norm(s) == pytest.approx(t.barron_norm(s), abs=1e-10)

    def test_translation_multiplies_f_hat_by_phase(self):
        t = tg.gaussian_target(1)
        s = t.translated([0.7])
        w = np.array([[1.3]])
        assert s.f_hat(w)[0] == pytest.approx(t.f_hat(w)[0] * np.exp(1j * 1.3 * 0.7))

    def test_space_eval_matches_inverse_fourier_quadrature(self):
        mix = tg.mixture_target(1, [(1.0, 1.0, [0.0]), (-0.4, 0.6, [0.5])])
        w = np.linspace(-50.0, 50.0, 120001)[:, None]
        fh = mix.f_hat(w)
        rng = np.random.default_rng(3)
        for x in rng.uniform(-1.5, 1.5, size=10):
            quad_val = np.trapezoid((fh * np.exp(1j * w[:, 0] * x)).real, w[:, 0])
            assert mix.eval((0,), np.array([x])) == pytest.approx(quad_val, abs=1e-6)


class TestWeightedDensity:
    def test_unweighted_integral_is_b0(self):
        g = tg.gaussian_target(1)
        wsd = tg.spectral_density_weighted(g, 0)
        assert wsd.integral == pytest.approx(1.0, abs=1e-9)

    def test_first_weight_matches_b1(self):
        g = tg.gaussian_target(1)
        wsd = tg.spectral_density_weighted(g, 1)
        assert wsd.integral == pytest.approx(1.0 + math.sqrt(2.0 / math.pi), abs=1e-9)

    def test_atomic_weights_are_discrete(self):
        ct = tg.cosine_target([1.0])
        wsd = tg.spectral_density_weighted(ct, 2)
        assert wsd.integral == pytest.approx(4.0)
        assert wsd.mixture_weights == ()

    def test_weight_function_values(self):
        g = tg.gaussian_target(1)
        wsd = tg.spectral_density_weighted(g, 1)
        w = np.array([[1.0]])
        expected = 2.0 * g.magnitude(w)[0]
        assert wsd.weight(w)[0] == pytest.approx(expected)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-1.0, 1.0))
def test_bump_transform_integrates_to_value_at_zero(scale, center):
    t = tg.gaussian_target(1, scale=scale, center=[center])
    assert t.barron_norm(0.0) >= abs(t.eval((0,), np.array([0.0]))) - 1e-9
    w = np.linspace(-80.0 / scale, 80.0 / scale, 40001)[:, None]
    integral = np.trapezoid(t.f_hat(w).real, w[:, 0])
    assert integral == pytest.approx(t.eval((0,), np.array([0.0])), abs=1e-7)
