"""Brute-force verifiers for the integral representations.

These compute the representation integrals by direct tensor quadrature,
independently of the samplers and assemblers, and report the worst
deviation from the exact target values.  They are test-time tools: slow,
but trustworthy, and restricted to d <= 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .activation import ActivationModel
from .errors import QuadratureBudgetExceeded
from .representation import (
    MollifierPair,
    RepresentationKernel,
    approx_constant_c,
)
from .target import SpectralTarget

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class QuadratureSpec:
    scheme: str = "tensor-2d"
    tol: float = 1e-6
    budget: int = 40_000_000

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.budget < 1000:
            raise ValueError("budget must be at least 1e3")


def _panel_rule(lo: float, hi: float, width: float, order: int = 8):
    """Composite Gauss-Legendre nodes/weights with panels of at most `width`."""
    n_panels = max(1, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, n_panels + 1)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return x, w


def _omega_cutoff(target: SpectralTarget, m: int, tol: float) -> float:
    for w in (8.0, 12.0, 16.0, 24.0, 32.0, 48.0):
        tail = (1.0 + w) ** (m + 2) * target.magnitude_envelope(np.array([w]))[0]
        if tail < tol * 1e-3:
            return w
    return 64.0


def representation_identity_check(
    target: SpectralTarget,
    kernel: RepresentationKernel,
    activation: ActivationModel,
    x_points,
    spec: QuadratureSpec = QuadratureSpec(),
) -> float:
    """max_x | (2pi |sig_hat|)^-1 int int chi sigma(omega x/a + b) |f_hat| - f(x) |.

    d = 1 only; the b-range grows adaptively until the integral stabilizes
    to spec.tol / 4, and the budget caps the total node count.
    """
    if target.dim != 1:
        raise ValueError("representation oracle is restricted to d = 1")
    xs = np.atleast_1d(np.asarray(x_points, dtype=float))
    max_abs_x = float(np.max(np.abs(xs))) if len(xs) else 1.0
    a = kernel.a
    theta_a = float(np.angle(kernel.sigma_hat_a))
    pref = 1.0 / (TWO_PI * abs(kernel.sigma_hat_a))
    sigma = activation.derivs[0]

    def integral_at(x: float, b_half: float) -> float:
        total = 0.0
        if target.bumps:
            w_cut = _omega_cutoff(target, kernel.m, spec.tol)
            d_omega = min(0.4, 0.35 * abs(a) / max(max_abs_x, 0.1))
            wn, ww = _panel_rule(-w_cut, w_cut, d_omega)
            bn, bw = _panel_rule(-b_half, b_half, 0.4)
            if len(wn) * len(bn) > spec.budget:
                raise QuadratureBudgetExceeded(
                    f"{len(wn)}x{len(bn)} tensor grid exceeds budget"
                )
            theta_f = target.phase(wn[:, None])
            mags = target.magnitude(wn[:, None])
            chi = np.cos(theta_f[:, None] - theta_a - a * bn[None, :])
            sig = sigma(wn[:, None] * (x / a) + bn[None, :])
            total += float(ww @ (chi * sig * mags[:, None]) @ bw)
        for atom in target.atoms:
            wj = float(np.asarray(atom.omega)[0])
            bn, bw = _panel_rule(-b_half, b_half, 0.4)
            chi = np.cos(np.angle(atom.coeff) - theta_a - a * bn)
            total += abs(atom.coeff) * float(np.sum(bw * chi * sigma(wj * x / a + bn)))
        return pref * total

    deviations = []
    for x in xs:
        w_cut = _omega_cutoff(target, kernel.m, spec.tol) if target.bumps else max(
            float(np.linalg.norm(atom.omega)) for atom in target.atoms
        )
        b_half = kernel.R * w_cut / abs(a) + 16.0
        val = integral_at(float(x), b_half)
        while True:
            wider = integral_at(float(x), 2.0 * b_half)
            if abs(wider - val) < spec.tol / 4.0:
                val = wider
                break
            b_half *= 2.0
            val = wider
            if b_half > 1e5:
                raise QuadratureBudgetExceeded("b-range grew beyond 1e5")
        deviations.append(abs(val - float(target.eval((0,), np.array([float(x)])))))
    return float(np.max(deviations))


def periodic_identity_check(
    target: SpectralTarget,
    kernel: RepresentationKernel,
    activation: ActivationModel,
    x_points,
    spec: QuadratureSpec = QuadratureSpec(),
) -> float:
    """Atomic-target periodic representation against exact f, b on [0, 2pi]."""
    if target.bumps:
        raise ValueError("periodic oracle expects an atomic target")
    xs = np.atleast_2d(np.asarray(x_points, dtype=float))
    if xs.shape[1] != target.dim:
        xs = xs.reshape(-1, target.dim)
    idx = kernel.a
    theta_a = float(np.angle(kernel.sigma_hat_a))
    pref = 1.0 / (TWO_PI * abs(kernel.sigma_hat_a))
    sigma = activation.derivs[0]
    deviations = []
    for x in xs:
        total = 0.0
        for atom in target.atoms:
            shift = float(np.dot(np.asarray(atom.omega), x)) / idx
            edges = {0.0, TWO_PI}
            for bp in activation.breakpoints:
                edges.add((bp - shift) % TWO_PI)
            edges = sorted(edges)
            for lo, hi in zip(edges[:-1], edges[1:]):
                bn, bw = _panel_rule(lo, hi, (hi - lo) / 48.0 + 1e-12)
                chi = np.cos(np.angle(atom.coeff) - theta_a - idx * bn)
                total += abs(atom.coeff) * float(np.sum(bw * chi * sigma(shift + bn)))
        f_val = float(target.eval((0,) * target.dim, x[None, :])[0])
        deviations.append(abs(pref * total - f_val))
    return float(np.max(deviations))


def approx_identity_check(
    activation: ActivationModel,
    mollifier: MollifierPair,
    a: float,
    eps_list,
    omega,
    x_points,
    spec: QuadratureSpec = QuadratureSpec(),
) -> list[float]:
    """| (2pi C(eps))^-1 int sigma(omega.x + b) phi(eps b) e^{-iab} db - e^{ia omega.x} |.

    Returns the max deviation over x_points for each eps, in order.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    xs = np.atleast_2d(np.asarray(x_points, dtype=float))
    cs = xs @ omega
    sigma = activation.derivs[0]
    grid = mollifier.grid
    phi_vals = mollifier.values
    out = []
    for eps in eps_list:
        c_eps = approx_constant_c(eps, activation, mollifier, a)
        worst = 0.0
        for c in cs:
            b = grid / eps
            integrand = sigma(c + b) * phi_vals * np.exp(-1j * a * b)
            integral = np.trapezoid(integrand, b)
            lhs = integral / (TWO_PI * c_eps)
            worst = max(worst, abs(lhs - np.exp(1j * a * c)))
        out.append(float(worst))
    return out
