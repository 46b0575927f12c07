"""Two-layer networks assembled from feature samples.

Each construction turns samples (omega_i, b_i, eta_i) into neurons
beta_i sigma(w_i . x + b_i) whose coefficients make the network an
unbiased estimator of the target:

* plain / periodic:  beta = J(omega, b) chi(omega, b) / n,  w = omega / a
* approx (no decay): beta = Re[K u_C u_f u_phi e^{-iab}] / n, w = omega / a
* stratified:        beta = lambda_i eta J(omega, b) / c_i  per cell

Composite activations expand each logical neuron into n0 physical neurons
(stencil offsets added to the bias, stencil weights folded into beta).
Evaluation uses a fixed neuron order with compensated summation so results
are reproducible bit-for-bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .activation import ActivationModel, eval_derivative
from .errors import PlanSampleMismatch, UnsupportedDerivativeOrder
from .representation import (
    ApproxMode,
    RepresentationKernel,
    coefficient_j,
    phase_chi,
)
from .rng import kahan_sum
from .sampler import PeriodicStratifiedPlan, StratifiedPlan
from .target import SpectralTarget


@dataclass(frozen=True)
class TwoLayerNetwork:
    weights: np.ndarray        # (n, d)
    biases: np.ndarray         # (n,)
    coeffs: np.ndarray         # (n,)
    activation: Optional[ActivationModel]
    dim: int

    def __post_init__(self):
        for arr in (self.weights, self.biases, self.coeffs):
            if arr.size and not np.all(np.isfinite(arr)):
                raise ValueError("network parameters must be finite")

    @property
    def n_neurons(self) -> int:
        return len(self.coeffs)

    def __call__(self, x):
        return evaluate(self, (0,) * self.dim, x)


def empty_network(dim: int, activation: Optional[ActivationModel] = None) -> TwoLayerNetwork:
    return TwoLayerNetwork(
        weights=np.zeros((0, dim)), biases=np.zeros(0), coeffs=np.zeros(0),
        activation=activation, dim=dim,
    )


def evaluate(net: TwoLayerNetwork, alpha, x):
    """sum_i beta_i w_i^alpha sigma^(|alpha|)(w_i . x + b_i)."""
    alpha = tuple(int(a) for a in np.atleast_1d(alpha))
    if len(alpha) != net.dim:
        raise ValueError(f"multi-index length {len(alpha)} != dim {net.dim}")
    order = sum(alpha)
    scalar_in = np.ndim(x) == 1
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if net.n_neurons == 0:
        out = np.zeros(pts.shape[0])
        return float(out[0]) if scalar_in and pts.shape[0] == 1 else out
    if net.activation is None or order > net.activation.m_max:
        if net.activation is None:
            raise UnsupportedDerivativeOrder("network has no activation model")
        raise UnsupportedDerivativeOrder(
            f"derivative order {order} exceeds activation m_max {net.activation.m_max}"
        )
    arg = pts @ net.weights.T + net.biases[None, :]
    vals = eval_derivative(net.activation, order, arg)
    w_alpha = np.ones(net.n_neurons)
    for j, aj in enumerate(alpha):
        if aj:
            w_alpha = w_alpha * net.weights[:, j] ** aj
    terms = vals * (net.coeffs * w_alpha)[None, :]
    out = kahan_sum(terms, axis=1)
    return float(out[0]) if scalar_in and pts.shape[0] == 1 else out


def _expand_composite(activation, weights, biases, coeffs):
    """Unfold stencil composites into physical base-activation neurons."""
    if activation.composite is None:
        return activation, weights, biases, coeffs
    base, stencil = activation.composite
    n, d = weights.shape
    n0 = stencil.n0
    w_out = np.repeat(weights, n0, axis=0)
    b_out = (biases[:, None] + np.asarray(stencil.offsets)[None, :]).ravel()
    c_out = (coeffs[:, None] * np.asarray(stencil.weights)[None, :]).ravel()
    return base, w_out, b_out, c_out


def _build(activation, weights, biases, coeffs, dim) -> TwoLayerNetwork:
    activation, weights, biases, coeffs = _expand_composite(
        activation, weights, biases, coeffs
    )
    return TwoLayerNetwork(
        weights=weights, biases=biases, coeffs=coeffs,
        activation=activation, dim=dim,
    )


def _assemble_mean(samples, kernel, target, activation) -> TwoLayerNetwork:
    n = len(samples)
    d = target.dim
    if n == 0:
        return empty_network(d, activation)
    omegas = np.stack([s.omega for s in samples])
    bs = np.array([s.b for s in samples])
    j_vals = coefficient_j(omegas, bs, kernel)
    chi = phase_chi(omegas, bs, kernel, target)
    coeffs = j_vals * chi / n
    weights = omegas / kernel.a
    return _build(activation, weights, bs, coeffs, d)


def assemble_plain(samples, kernel: RepresentationKernel, target: SpectralTarget,
                   activation: ActivationModel) -> TwoLayerNetwork:
    """Monte-Carlo average of J chi sigma(omega/a . x + b); unbiased for f."""
    if not kernel.is_decaying:
        raise ValueError("assemble_plain requires a plain-mode kernel")
    return _assemble_mean(samples, kernel, target, activation)


def assemble_periodic(samples, kernel: RepresentationKernel, target: SpectralTarget,
                      activation: ActivationModel) -> TwoLayerNetwork:
    """Periodic-path average; J degenerates to ||f||_Bm |a_i|^-1 (1+|omega|)^-m."""
    if not kernel.is_periodic:
        raise ValueError("assemble_periodic requires a periodic-mode kernel")
    return _assemble_mean(samples, kernel, target, activation)


def assemble_approx(samples, kernel: RepresentationKernel, target: SpectralTarget,
                    activation: ActivationModel, n: Optional[int] = None) -> TwoLayerNetwork:
    """No-decay path: realified per-sample coefficients with the C(eps) phase."""
    mode = kernel.mode
    if not isinstance(mode, ApproxMode):
        raise ValueError("assemble_approx requires an approx-mode kernel")
    n = len(samples) if n is None else n
    d = target.dim
    if len(samples) == 0:
        return empty_network(d, activation)
    eps = mode.eps
    barron0 = target.barron_norm(0.0)
    phi_l1_scaled = mode.mollifier.phi_l1 / eps
    k_mag = barron0 * phi_l1_scaled / (2.0 * math.pi * abs(mode.c_eps))
    omegas = np.stack([s.omega for s in samples])
    bs = np.array([s.b for s in samples])
    phases = target.phase(omegas)
    phi_vals = mode.mollifier.phi(eps * bs)
    signs = np.sign(phi_vals)
    coeffs = (
        k_mag * signs
        * np.cos(phases - kernel.a * bs - np.angle(mode.c_eps))
        / n
    )
    weights = omegas / kernel.a
    return _build(activation, weights, bs, coeffs, d)


def assemble_stratified(plan, groups, kernel: RepresentationKernel,
                        target: SpectralTarget, activation: ActivationModel) -> TwoLayerNetwork:
    """Per-cell weighted estimator: beta = lambda_i eta J / c_i (tail included)."""
    if not isinstance(plan, (StratifiedPlan, PeriodicStratifiedPlan)):
        raise ValueError("unknown plan type")
    expected = len(plan.cells) + 1
    if len(groups) != expected:
        raise PlanSampleMismatch(
            f"{len(groups)} sample groups for {expected} strata"
        )
    cells = list(plan.cells) + [None]
    counts = [c.count for c in plan.cells] + [plan.tail_count]
    measures = [c.measure for c in plan.cells] + [plan.tail_measure]
    w_rows, b_rows, c_rows = [], [], []
    d = target.dim
    for cell, cnt, lam, group in zip(cells, counts, measures, groups):
        if len(group) != cnt:
            name = "tail" if cell is None else f"cell {cell.key}"
            raise PlanSampleMismatch(f"{name}: {len(group)} samples, expected {cnt}")
        if cnt == 0:
            continue
        omegas = np.stack([s.omega for s in group])
        bs = np.array([s.b for s in group])
        etas = np.array([s.eta for s in group], dtype=float)
        j_vals = coefficient_j(omegas, bs, kernel)
        w_rows.append(omegas / kernel.a)
        b_rows.append(bs)
        c_rows.append(lam * etas * j_vals / cnt)
    if not w_rows:
        return empty_network(d, activation)
    weights = np.concatenate(w_rows)
    biases = np.concatenate(b_rows)
    coeffs = np.concatenate(c_rows)
    return _build(activation, weights, biases, coeffs, d)


# -- serialization -----------------------------------------------------------

NETWORK_FORMAT_VERSION = 1


def save_network(net: TwoLayerNetwork, path, metadata: Optional[dict] = None):
    """Versioned CSV (w_1..w_d, b, beta) plus a JSON sidecar."""
    path = str(path)
    header = [f"w_{j + 1}" for j in range(net.dim)] + ["b", "beta"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(net.n_neurons):
            row = [repr(float(v)) for v in net.weights[i]]
            row += [repr(float(net.biases[i])), repr(float(net.coeffs[i]))]
            fh.write(",".join(row) + "\n")
    side = {
        "version": NETWORK_FORMAT_VERSION,
        "activation": net.activation.label if net.activation else None,
        "d": net.dim,
    }
    side.update(metadata or {})
    with open(path + ".meta.json", "w") as fh:
        json.dump(side, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_network(path, registry: dict) -> TwoLayerNetwork:
    path = str(path)
    with open(path + ".meta.json") as fh:
        side = json.load(fh)
    if side.get("version") != NETWORK_FORMAT_VERSION:
        raise ValueError(f"unsupported network format version {side.get('version')}")
    d = side["d"]
    with open(path) as fh:
        lines = fh.read().splitlines()[1:]
    if lines:
        data = np.array([[float(tok) for tok in line.split(",")] for line in lines])
    else:
        data = np.zeros((0, d + 2))
    activation = registry[side["activation"]] if side.get("activation") else None
    return TwoLayerNetwork(
        weights=data[:, :d], biases=data[:, d], coeffs=data[:, d + 1],
        activation=activation, dim=d,
    )
