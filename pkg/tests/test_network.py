import math

import numpy as np
import pytest

from randfeat import network as nw
from randfeat import representation as rep
from randfeat import sampler as smp
from randfeat import target as tg
from randfeat.activation import build_registry
from randfeat.domain import symmetric_box
from randfeat.errors import PlanSampleMismatch, UnsupportedDerivativeOrder

TWO_PI = 2.0 * math.pi


def single_neuron(registry, label, w, b, beta, dim=None):
    w = np.atleast_1d(np.asarray(w, dtype=float))
    return nw.TwoLayerNetwork(
        weights=w[None, :], biases=np.array([float(b)]),
        coeffs=np.array([float(beta)]), activation=registry[label],
        dim=dim or len(w),
    )


class TestEvaluate:
    def test_empty_network_is_zero(self):
        net = nw.empty_network(2)
        assert nw.evaluate(net, (0, 0), np.array([[0.3, -0.4]]))[0] == 0.0

    def test_single_cosine_neuron(self, registry):
        net = single_neuron(registry, "cos", [1.0], 0.0, 2.0)
        assert nw.evaluate(net, (0,), np.array([0.0])) == pytest.approx(2.0)

    def test_chain_rule_factor(self, registry):
        # d/dx1 of beta cos(w.x + b) at w.x + b = pi/2 is -beta w1
        net = single_neuron(registry, "cos", [3.0, 0.0], math.pi / 2.0, 0.7)
        val = nw.evaluate(net, (1, 0), np.array([[0.0, 0.0]]))[0]
        assert val == pytest.approx(0.7 * 3.0 * (-1.0))

    def test_derivatives_match_finite_differences(self, registry):
        rng = np.random.default_rng(0)
        net = nw.TwoLayerNetwork(
            weights=rng.normal(size=(20, 2)), biases=rng.normal(size=20),
            coeffs=rng.normal(size=20) / 20.0, activation=registry["gaussian"], dim=2,
        )
        xs = rng.uniform(-1.0, 1.0, size=(100, 2))
        h = 1e-5
        for j, alpha in enumerate([(1, 0), (0, 1)]):
            step = np.zeros(2)
            step[j] = h
            numeric = (nw.evaluate(net, (0, 0), xs + step)
                       - nw.evaluate(net, (0, 0), xs - step)) / (2.0 * h)
            exact = nw.evaluate(net, alpha, xs)
            scale = np.maximum(np.abs(exact), 1e-3)
            assert np.max(np.abs(exact - numeric) / scale) < 1e-5

    def test_order_above_m_max_raises(self, registry):
        net = single_neuron(registry, "sinc", [1.0], 0.0, 1.0)
        with pytest.raises(UnsupportedDerivativeOrder):
            nw.evaluate(net, (1,), np.array([0.0]))


@pytest.fixture(scope="module")
def plain_pieces():
    registry = build_registry()
    target = tg.gaussian_target(1)
    activation = registry["gaussian"]
    kernel = rep.plain_kernel(activation, target, symmetric_box(1), m=0)
    return registry, target, activation, kernel


class TestAssemblePlain:
    def test_single_sample_network(self, plain_pieces):
        _, target, activation, kernel = plain_pieces
        samples = smp.draw_plain(target, kernel, 1, seed=3)
        net = nw.assemble_plain(samples, kernel, target, activation)
        s = samples[0]
        j = float(rep.coefficient_j(s.omega[None, :], s.b, kernel)[0])
        chi = float(rep.phase_chi(s.omega[None, :], s.b, kernel, target)[0])
        x = np.array([0.4])
        expected = j * chi * activation(np.array([s.omega[0] / kernel.a * 0.4 + s.b]))[0]
        assert nw.evaluate(net, (0,), x) == pytest.approx(expected)

    def test_coefficient_identity(self, plain_pieces):
        _, target, activation, kernel = plain_pieces
        n = 200
        samples = smp.draw_plain(target, kernel, n, seed=4)
        net = nw.assemble_plain(samples, kernel, target, activation)
        for i, s in enumerate(samples):
            h = float(rep.envelope_h(s.b, abs(s.omega[0]), kernel.R, kernel.a, kernel.p))
            chi = (net.coeffs[i] * n * h * (1.0 + abs(s.omega[0])) ** kernel.m
                   * TWO_PI * abs(kernel.sigma_hat_a) / kernel.normalizer)
            assert -1.0 - 1e-12 <= chi <= 1.0 + 1e-12

    def test_sup_norm_of_coefficients(self, plain_pieces):
        _, target, activation, kernel = plain_pieces
        n = 200
        samples = smp.draw_plain(target, kernel, n, seed=5)
        net = nw.assemble_plain(samples, kernel, target, activation)
        bound = kernel.normalizer / (TWO_PI * abs(kernel.sigma_hat_a))
        for i, s in enumerate(samples):
            h = float(rep.envelope_h(s.b, abs(s.omega[0]), kernel.R, kernel.a, kernel.p))
            assert abs(net.coeffs[i]) * n * h <= bound * (1.0 + 1e-12)

    def test_unbiasedness_at_fixed_points(self, plain_pieces):
        _, target, activation, kernel = plain_pieces
        xs = np.array([[-0.9], [-0.4], [0.0], [0.5], [0.8]])
        n, reps = 64, 200
        vals = np.empty((reps, len(xs)))
        for seed in range(reps):
            samples = smp.draw_plain(target, kernel, n, seed=seed)
            net = nw.assemble_plain(samples, kernel, target, activation)
            vals[seed] = nw.evaluate(net, (0,), xs)
        mean = vals.mean(axis=0)
        stderr = vals.std(axis=0, ddof=1) / math.sqrt(reps)
        truth = target.eval((0,), xs)
        assert np.all(np.abs(mean - truth) <= 4.0 * stderr)


class TestAssemblePeriodic:
    def test_trig_identity_recovers_target(self, registry):
        # 2 E_b[cos(b) cos(w0 x + b)] = cos(w0 x): exact under b-quadrature
        ct = tg.cosine_target([1.3])
        kernel = rep.periodic_kernel(registry["cos"], ct, m=0)
        bs = (np.arange(256) + 0.5) * TWO_PI / 256
        samples = [smp.FeatureSample(omega=np.array([1.3]), b=float(b)) for b in bs]
        net = nw.assemble_periodic(samples, kernel, ct, registry["cos"])
        xs = np.linspace(-1.0, 1.0, 7)[:, None]
        # atoms at +-w0 are drawn evenly in expectation; using only +w0 samples
        # still recovers cos by symmetry of the coefficient formula
        assert np.allclose(nw.evaluate(net, (0,), xs), np.cos(1.3 * xs[:, 0]), atol=1e-12)

    def test_zero_phase_draws_give_zero_network(self, registry):
        ct = tg.cosine_target([1.0])
        kernel = rep.periodic_kernel(registry["cos"], ct, m=0)
        samples = [smp.FeatureSample(omega=np.array([1.0]), b=math.pi / 2.0)]
        net = nw.assemble_periodic(samples, kernel, ct, registry["cos"])
        assert np.allclose(net.coeffs, 0.0, atol=1e-15)

    def test_unbiasedness(self, registry):
        target = tg.gaussian_target(1)
        kernel = rep.periodic_kernel(registry["cos"], target, m=0)
        xs = np.array([[-0.7], [0.0], [0.6]])
        n, reps = 64, 200
        vals = np.empty((reps, len(xs)))
        for seed in range(reps):
            samples = smp.draw_periodic(target, kernel, n, seed=seed)
            net = nw.assemble_periodic(samples, kernel, target, registry["cos"])
            vals[seed] = nw.evaluate(net, (0,), xs)
        mean = vals.mean(axis=0)
        stderr = vals.std(axis=0, ddof=1) / math.sqrt(reps)
        truth = target.eval((0,), xs)
        assert np.all(np.abs(mean - truth) <= 4.0 * stderr)


class TestAssembleApprox:
    def test_coefficient_magnitude_bound(self, registry, mollifier):
        target = tg.gaussian_target(1)
        n = 256
        eps = float(n) ** -0.25
        kernel = rep.approx_kernel(registry["sinc"], mollifier, eps)
        samples = smp.draw_approx(target, mollifier, eps, n, seed=2)
        net = nw.assemble_approx(samples, kernel, target, registry["sinc"], n)
        k_bound = (target.barron_norm(0.0) * mollifier.phi_l1 / eps
                   / (TWO_PI * abs(kernel.mode.c_eps)))
        assert np.all(np.abs(net.coeffs) * n <= k_bound * (1.0 + 1e-12))

    def test_scaled_window_l1_at_n_256(self, mollifier):
        # eps = 256^(-1/4) = 1/4, so ||phi(eps .)||_1 = 4 ||phi||_1
        eps = 256.0 ** -0.25
        assert mollifier.phi_l1 / eps == pytest.approx(4.0 * mollifier.phi_l1)

    def test_bias_vanishes_at_origin_and_scales_quadratically(self, registry, mollifier):
        # The localization bias of the exact-expectation estimator is zero at
        # x = 0 and, with an even window, quadratic (not linear) in eps:
        # halving eps divides the deviation by ~4.
        target = tg.gaussian_target(1)
        sinc = registry["sinc"]
        a = 0.5
        wn = np.linspace(-8.0, 8.0, 1601)

        def expected_value(x, eps):
            c_eps = rep.approx_constant_c(eps, sinc, mollifier, a)
            nodes, weights = np.polynomial.legendre.leggauss(200)
            fh = target.f_hat(wn[:, None])
            vals = []
            for w in wn:
                c = w / a * x
                sig = np.array([sinc.fourier(a + eps * u) for u in nodes])
                cx = np.sum(weights * sig * mollifier.phi_hat(nodes)
                            * np.exp(1j * c * eps * nodes))
                vals.append(cx / c_eps)
            integrand = fh * np.exp(1j * wn * x) * np.array(vals)
            return float(np.trapezoid(integrand, wn).real)

        f0 = float(target.eval((0,), np.array([0.0])))
        assert expected_value(0.0, 0.1) == pytest.approx(f0, abs=1e-9)
        x = 0.8
        fx = float(target.eval((0,), np.array([x])))
        bias_1 = abs(expected_value(x, 0.2) - fx)
        bias_2 = abs(expected_value(x, 0.1) - fx)
        assert bias_1 / bias_2 == pytest.approx(4.0, abs=0.5)


class TestAssembleStratified:
    def test_single_covering_cell_reduces_to_signed_plain(self, plain_pieces):
        _, target, activation, kernel = plain_pieces
        n = 16
        cell = smp.StratifiedCell(
            key=(0, 0, 1), b_lo=-1e6, b_hi=1e6, w_lo=(-1e6,), w_hi=(1e6,),
            eta=1, measure=1.0, count=n,
        )
        plan = smp.StratifiedPlan(
            A=1.0, bins_b=1, bins_w_per_axis=1, cells=(cell,),
            tail_measure=0.0, tail_count=0,
            b_edges=np.array([-1e6, 1e6]), w_edges=np.array([-1e6, 1e6]),
            pilot_size=0,
        )
        draws = smp.draw_plain(target, kernel, n, seed=8)
        signed = [smp.FeatureSample(omega=s.omega, b=s.b, eta=1) for s in draws]
        net = nw.assemble_stratified(plan, [signed, []], kernel, target, activation)
        omegas = np.stack([s.omega for s in draws])
        bs = np.array([s.b for s in draws])
        expected = rep.coefficient_j(omegas, bs, kernel) / n
        assert np.allclose(net.coeffs, expected)

    def test_cell_weight_sum_bound(self, plain_pieces):
        _, target, activation, kernel = plain_pieces
        plan = smp.build_stratified_plan(target, kernel, 48, eps_smooth=0.25, seed=6)
        groups = smp.draw_stratified(plan, target, kernel, seed=6)
        net = nw.assemble_stratified(plan, groups, kernel, target, activation)
        offset = 0
        for cell, group in zip(plan.cells, groups[:-1]):
            block = net.coeffs[offset:offset + len(group)]
            offset += len(group)
            js = [float(rep.coefficient_j(s.omega[None, :], s.b, kernel)[0]) for s in group]
            assert np.sum(np.abs(block)) <= cell.measure * max(js) * (1.0 + 1e-12)

    def test_count_mismatch_raises(self, plain_pieces):
        _, target, activation, kernel = plain_pieces
        plan = smp.build_stratified_plan(target, kernel, 32, eps_smooth=0.25, seed=7)
        groups = smp.draw_stratified(plan, target, kernel, seed=7)
        groups[0] = groups[0][:-1]
        with pytest.raises(PlanSampleMismatch):
            nw.assemble_stratified(plan, groups, kernel, target, activation)

    def test_total_neurons_within_budget(self, plain_pieces):
        _, target, activation, kernel = plain_pieces
        n = 64
        plan = smp.build_stratified_plan(target, kernel, n, eps_smooth=0.25, seed=9)
        groups = smp.draw_stratified(plan, target, kernel, seed=9)
        net = nw.assemble_stratified(plan, groups, kernel, target, activation)
        assert net.n_neurons <= 3 * n + 1


class TestCompositeExpansion:
    def test_logical_neurons_expand_by_stencil_size(self, registry):
        target = tg.gaussian_target(1)
        activation = registry["logistic-diff"]
        kernel = rep.plain_kernel(activation, target, symmetric_box(1), m=0)
        samples = smp.draw_plain(target, kernel, 10, seed=1)
        net = nw.assemble_plain(samples, kernel, target, activation)
        assert net.n_neurons == 10 * activation.composite[1].n0
        assert net.activation.label == "logistic"

    def test_expanded_network_equals_logical_sum(self, registry):
        target = tg.gaussian_target(1)
        activation = registry["logistic-diff"]
        kernel = rep.plain_kernel(activation, target, symmetric_box(1), m=0)
        samples = smp.draw_plain(target, kernel, 10, seed=2)
        net = nw.assemble_plain(samples, kernel, target, activation)
        omegas = np.stack([s.omega for s in samples])
        bs = np.array([s.b for s in samples])
        j = rep.coefficient_j(omegas, bs, kernel)
        chi = rep.phase_chi(omegas, bs, kernel, target)
        xs = np.linspace(-1.0, 1.0, 9)[:, None]
        logical = np.zeros(len(xs))
        for i in range(10):
            arg = omegas[i, 0] / kernel.a * xs[:, 0] + bs[i]
            logical += j[i] * chi[i] / 10.0 * activation(arg)
        assert np.allclose(nw.evaluate(net, (0,), xs), logical, atol=1e-12)


class TestSerialization:
    def test_roundtrip(self, registry, tmp_path):
        target = tg.gaussian_target(1)
        activation = registry["gaussian"]
        kernel = rep.plain_kernel(activation, target, symmetric_box(1), m=0)
        samples = smp.draw_plain(target, kernel, 7, seed=1)
        net = nw.assemble_plain(samples, kernel, target, activation)
        path = tmp_path / "net.csv"
        nw.save_network(net, path, metadata={"construction": "plain", "seed": 1})
        loaded = nw.load_network(path, registry)
        assert np.allclose(loaded.weights, net.weights)
        assert np.allclose(loaded.biases, net.biases)
        assert np.allclose(loaded.coeffs, net.coeffs)
        assert loaded.activation.label == "gaussian"
        header = path.read_text().splitlines()[0]
        assert header == "w_1,b,beta"

    def test_empty_roundtrip(self, registry, tmp_path):
        net = nw.empty_network(2, registry["cos"])
        path = tmp_path / "empty.csv"
        nw.save_network(net, path)
        loaded = nw.load_network(path, registry)
        assert loaded.n_neurons == 0 and loaded.dim == 2
