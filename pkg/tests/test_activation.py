import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randfeat import activation as act
from randfeat.errors import (
    DecayCertificateViolation,
    DegenerateActivation,
    NoUsableFrequency,
    NotAbsolutelyIntegrable,
    UnknownFamily,
    UnsupportedDerivativeOrder,
)

SQRT_PI = math.sqrt(math.pi)


def central_diff(fn, t, h=1e-5):
    return (fn(np.array([t + h]))[0] - fn(np.array([t - h]))[0]) / (2.0 * h)


class TestDerivatives:
    def test_gaussian_value_at_zero(self, registry):
        assert act.eval_derivative(registry["gaussian"], 0, 0.0) == pytest.approx(1.0)

    def test_gaussian_first_derivative_at_zero(self, registry):
        assert act.eval_derivative(registry["gaussian"], 1, 0.0) == pytest.approx(0.0)

    def test_logistic_derivative_at_zero(self):
        logistic = act._logistic_model()
        assert act.eval_derivative(logistic, 1, np.array([0.0]))[0] == pytest.approx(0.25)

    def test_order_beyond_m_max_raises(self, registry):
        with pytest.raises(UnsupportedDerivativeOrder):
            act.eval_derivative(registry["gaussian"], 9, 0.0)

    @pytest.mark.parametrize("label", ["gaussian", "logistic-diff", "cos"])
    def test_closed_forms_match_central_differences(self, registry, label):
        model = registry[label]
        pts = np.linspace(-3.0, 3.0, 11)
        for k in range(1, min(model.m_max, 2) + 1):
            for t in pts:
                numeric = central_diff(model.derivs[k - 1], t)
                assert model.derivs[k](np.array([t]))[0] == pytest.approx(
                    numeric, abs=1e-6, rel=1e-5
                )

    def test_arctan_and_tanh_and_softplus_derivatives(self):
        for derivs in (act.arctan_derivs(3), act.tanh_derivs(3), act.softplus_derivs(3)):
            for k in range(1, 3):
                for t in (-1.3, 0.0, 0.7):
                    numeric = central_diff(derivs[k - 1], t)
                    assert derivs[k](np.array([t]))[0] == pytest.approx(
                        numeric, abs=1e-6, rel=1e-5
                    )


class TestComposites:
    def test_logistic_stencil(self):
        stencil = act.stencil_for_family("logistic")
        assert stencil.offsets == (1.0, 0.0)
        assert stencil.weights == (1.0, -1.0)
        assert stencil.n0 == 2

    def test_relu_stencil(self):
        stencil = act.stencil_for_family("relu")
        assert stencil.offsets == (1.0, -1.0, 0.0)
        assert stencil.weights == (1.0, 1.0, -2.0)
        assert stencil.n0 == 3

    def test_relu_squared_stencil(self):
        stencil = act.stencil_for_family("relu^k", k=2)
        assert stencil.n0 == 4
        assert stencil.weights == tuple(
            float((-1) ** i * math.comb(3, i)) for i in range(4)
        )

    def test_unknown_family_raises(self):
        with pytest.raises(UnknownFamily):
            act.stencil_for_family("swish")

    @pytest.mark.parametrize("label", ["logistic-diff", "relu-dd", "relu2-ddd"])
    def test_composite_matches_direct_formula(self, registry, label):
        model = registry[label]
        base, stencil = model.composite
        t = np.linspace(-6.0, 6.0, 301)
        direct = sum(
            w * base.derivs[0](t + off)
            for off, w in zip(stencil.offsets, stencil.weights)
        )
        assert np.max(np.abs(direct - model(t))) < 1e-12

    def test_too_small_certificate_rejected(self):
        with pytest.raises(DecayCertificateViolation):
            act.composite_from_table(
                act._logistic_model(), "logistic", certificate=(1e-3, 2.0), m_max=1
            )

    def test_registry_certificates_validate(self, registry):
        for label, model in registry.items():
            if isinstance(model.kind, act.Decaying):
                act.validate_decay(model)


class TestFirstDifference:
    def test_heaviside_difference_is_unit_indicator(self, registry):
        tau = registry["heaviside-diff"]
        grid = np.linspace(-3.0, 3.0, 60001)
        vals = tau(grid)
        assert np.trapezoid(np.abs(vals), grid) == pytest.approx(1.0, abs=1e-3)
        assert tau(np.array([-0.5]))[0] == 1.0
        assert tau(np.array([0.5]))[0] == 0.0

    def test_logistic_difference_has_unit_l1_mass(self, registry):
        tau = registry["logistic-diff"]
        grid = np.linspace(-60.0, 60.0, 240001)
        assert np.trapezoid(np.abs(tau(grid)), grid) == pytest.approx(1.0, abs=1e-8)

    def test_constant_base_raises(self):
        const = act.ActivationModel(
            label="one",
            kind=act.Bounded(ess_sup=1.0, fourier_interval=(0.0, 0.0)),
            derivs=(lambda t: np.ones_like(np.asarray(t, dtype=float)),),
        )
        with pytest.raises(DegenerateActivation):
            act.bv_first_difference(const)


class TestFourierValue:
    def test_gaussian_at_zero(self, registry):
        val = act.fourier_value(registry["gaussian"], 0.0, 1e-10)
        assert val.real == pytest.approx(SQRT_PI / (2.0 * math.pi), abs=1e-9)
        assert val.imag == pytest.approx(0.0, abs=1e-9)

    def test_gaussian_at_one(self, registry):
        val = act.fourier_value(registry["gaussian"], 1.0, 1e-10)
        expected = SQRT_PI / (2.0 * math.pi) * math.exp(-0.25)
        assert val.real == pytest.approx(expected, abs=1e-9)

    def test_odd_activation_vanishes_at_zero(self):
        herm = act.gaussian_derivs(1)
        odd = act.ActivationModel(
            label="odd",
            kind=act.Decaying(c_p=3.0, p=2.0, m_max=0),
            derivs=(lambda t: np.asarray(t, dtype=float) * np.exp(-np.asarray(t) ** 2),),
        )
        assert abs(act.fourier_value(odd, 0.0, 1e-10)) < 1e-9

    def test_periodic_model_rejected(self, registry):
        with pytest.raises(NotAbsolutelyIntegrable):
            act.fourier_value(registry["cos"], 1.0)

    def test_linearity(self, registry):
        gauss = registry["gaussian"]
        tau = registry["logistic-diff"]
        combo = act.ActivationModel(
            label="combo",
            kind=act.Decaying(c_p=30.0, p=2.0, m_max=0),
            derivs=(lambda t: 2.0 * gauss.derivs[0](t) - 0.5 * tau.derivs[0](t),),
        )
        a = 0.7
        lhs = act.fourier_value(combo, a, 1e-10)
        rhs = 2.0 * act.fourier_value(gauss, a, 1e-10) - 0.5 * act.fourier_value(tau, a, 1e-10)
        assert abs(lhs - rhs) < 1e-8


class TestSelectFrequency:
    def test_gaussian_prefers_smallest_magnitude(self, registry):
        a, val = act.select_frequency(registry["gaussian"], (0.5, 1.0, 1.5))
        assert a == 0.5
        assert abs(val) == pytest.approx(SQRT_PI / (2 * math.pi) * math.exp(-0.5 ** 2 / 4), abs=1e-8)

    def test_sinc_uses_closed_form(self, registry):
        a, val = act.select_frequency(registry["sinc"], (0.5,))
        assert (a, val) == (0.5, 0.5 + 0j)

    def test_symmetric_tie_breaks_positive(self, registry):
        a, _ = act.select_frequency(registry["gaussian"], (-0.5, 0.5, 1.0))
        assert a == 0.5

    def test_zero_activation_has_no_frequency(self):
        zero = act.ActivationModel(
            label="zero",
            kind=act.Decaying(c_p=1.0, p=2.0, m_max=0),
            derivs=(lambda t: np.zeros_like(np.asarray(t, dtype=float)),),
        )
        with pytest.raises(NoUsableFrequency):
            act.select_frequency(zero, (0.5, 1.0))


def square_wave():
    return act.ActivationModel(
        label="square",
        kind=act.Periodic(period=2.0 * math.pi, m_max=0),
        derivs=(
            lambda t: np.where((np.asarray(t, dtype=float) % (2 * math.pi)) < math.pi, 1.0, -1.0),
        ),
        breakpoints=(0.0, math.pi),
    )


class TestPeriodicCoefficient:
    def test_cosine_fundamental(self, registry):
        assert act.periodic_coefficient(registry["cos"], 1) == pytest.approx(0.5, abs=1e-12)

    def test_cosine_second_harmonic_vanishes(self, registry):
        assert abs(act.periodic_coefficient(registry["cos"], 2)) < 1e-12

    def test_square_wave_magnitude(self):
        coeff = act.periodic_coefficient(square_wave(), 1)
        assert abs(coeff) == pytest.approx(2.0 / math.pi, abs=1e-10)

    def test_shift_modulates_coefficient(self, registry):
        cos = registry["cos"]
        t0 = 0.8
        shifted = act.ActivationModel(
            label="cos-shift",
            kind=act.Periodic(period=2 * math.pi, m_max=0),
            derivs=(lambda t: np.cos(np.asarray(t, dtype=float) + t0),),
        )
        i = 1
        base = act.periodic_coefficient(cos, i)
        moved = act.periodic_coefficient(shifted, i)
        assert moved == pytest.approx(base * np.exp(1j * i * t0), abs=1e-10)

    def test_rescale_to_2pi(self):
        fast = act.ActivationModel(
            label="cos3",
            kind=act.Periodic(period=2 * math.pi / 3.0, m_max=1),
            derivs=(lambda t: np.cos(3.0 * np.asarray(t, dtype=float)),
                    lambda t: -3.0 * np.sin(3.0 * np.asarray(t, dtype=float))),
        )
        scaled = act.rescale_to_2pi(fast)
        assert scaled.kind.period == pytest.approx(2 * math.pi)
        t = np.linspace(0.0, 2 * math.pi, 17)
        assert np.allclose(scaled(t), np.cos(t))
        assert act.periodic_coefficient(scaled, 1) == pytest.approx(0.5, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(-50.0, 50.0))
def test_decay_certificate_pointwise_gaussian(t):
    model = act.build_registry()["gaussian"]
    bound = model.kind.c_p * (1.0 + abs(t)) ** (-model.kind.p)
    for k in range(model.kind.m_max + 1):
        assert abs(model.derivs[k](np.array([t]))[0]) <= bound


def test_periodicity_of_cos_model(registry):
    cos = registry["cos"]
    t = np.linspace(-9.0, 9.0, 301)
    assert np.max(np.abs(cos(t + 2 * math.pi) - cos(t))) < 1e-12


def test_bounded_models_respect_ess_sup(registry):
    t = np.linspace(-200.0, 200.0, 40001)
    for label in ("sinc", "sinc2"):
        model = registry[label]
        assert np.max(np.abs(model(t))) <= model.kind.ess_sup + 1e-12
