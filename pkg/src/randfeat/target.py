"""Spectral targets: Barron-class functions with exact Fourier data.

The zoo consists of Gaussian bumps (possibly shifted, scaled, mixed) and
atomic (trigonometric) spectra, chosen so that f, its derivatives, f_hat,
and the Barron norms all have closed forms or cheap 1D quadratures.

Fourier conventions (fixed throughout the package):

    f(x)        = int e^{i omega.x} f_hat(omega) d omega
    sigma_hat(a) = (1/2pi) int sigma(t) e^{-iat} dt

so a unit-amplitude bump exp(-|x|^2/2) has f_hat >= 0 with integral 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import BarronNormDivergent, UnsupportedDerivativeOrder


@dataclass(frozen=True)
class GaussianBump:
    """amplitude * exp(-|x - center|^2 / (2 scale^2))."""

    amplitude: float
    scale: float
    center: tuple[float, ...]

    @property
    def spectral_amplitude(self) -> float:
        # f_hat prefactor: A s^d / (2pi)^{d/2}
        d = len(self.center)
        return self.amplitude * self.scale ** d / (2.0 * math.pi) ** (d / 2.0)


@dataclass(frozen=True)
class SpectralAtom:
    omega: tuple[float, ...]
    coeff: complex


@dataclass(frozen=True)
class SpectralTarget:
    dim: int
    bumps: tuple[GaussianBump, ...]
    atoms: tuple[SpectralAtom, ...]
    label: str
    m_max: int = 6

    # -- spectral side ----------------------------------------------------

    def f_hat(self, omega):
        """f_hat on the density part; omega is (..., d)."""
        w = np.atleast_2d(np.asarray(omega, dtype=float))
        out = np.zeros(w.shape[0], dtype=complex)
        r2 = np.sum(w * w, axis=1)
        for b in self.bumps:
            phase = w @ np.asarray(b.center)
            out += b.spectral_amplitude * np.exp(-b.scale ** 2 * r2 / 2.0) * np.exp(-1j * phase)
        return out

    def magnitude(self, omega):
        return np.abs(self.f_hat(omega))

    def phase(self, omega):
        return np.angle(self.f_hat(omega))

    def magnitude_envelope(self, r):
        """Radial majorant of |f_hat|: sum of component magnitudes."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for b in self.bumps:
            out += abs(b.spectral_amplitude) * np.exp(-b.scale ** 2 * r * r / 2.0)
        return out

    @property
    def is_radial(self) -> bool:
        """True when |f_hat| depends only on |omega| (common-center bumps)."""
        if not self.bumps:
            return True
        centers = {b.center for b in self.bumps}
        return len(centers) == 1

    def magnitude_radial(self, r):
        """|f_hat| as a function of r; valid only when is_radial."""
        r = np.asarray(r, dtype=float)
        acc = np.zeros_like(r)
        for b in self.bumps:
            acc += b.spectral_amplitude * np.exp(-b.scale ** 2 * r * r / 2.0)
        return np.abs(acc)

    # -- space side --------------------------------------------------------

    def eval(self, alpha, x):
        """Exact D^alpha f at x; x is (d,) or (k, d)."""
        alpha = tuple(int(a) for a in np.atleast_1d(alpha))
        if len(alpha) == 1 and self.dim > 1 and alpha[0] == 0:
            alpha = (0,) * self.dim
        if len(alpha) != self.dim:
            raise ValueError(f"multi-index length {len(alpha)} != dim {self.dim}")
        if sum(alpha) > self.m_max:
            raise UnsupportedDerivativeOrder(
                f"{self.label}: |alpha|={sum(alpha)} exceeds m_max {self.m_max}"
            )
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(pts.shape[0])
        for b in self.bumps:
            term = np.full(pts.shape[0], b.amplitude)
            for j, aj in enumerate(alpha):
                u = pts[:, j] - b.center[j]
                term = term * _gauss_factor(aj, b.scale, u)
            out += term
        if self.atoms:
            acc = np.zeros(pts.shape[0], dtype=complex)
            for atom in self.atoms:
                w = np.asarray(atom.omega)
                fac = np.prod([(1j * w[j]) ** aj for j, aj in enumerate(alpha)])
                acc += atom.coeff * fac * np.exp(1j * (pts @ w))
            out += acc.real
        if np.isscalar(x[0]) and np.ndim(x) == 1 and pts.shape[0] == 1:
            return float(out[0])
        return out

    def translated(self, shift) -> "SpectralTarget":
        """Target g(x) = f(x + shift); multiplies f_hat by e^{i omega.shift}."""
        shift = np.asarray(shift, dtype=float)
        bumps = tuple(
            GaussianBump(b.amplitude, b.scale, tuple(np.asarray(b.center) - shift))
            for b in self.bumps
        )
        atoms = tuple(
            SpectralAtom(a.omega, a.coeff * np.exp(1j * float(np.dot(a.omega, shift))))
            for a in self.atoms
        )
        return SpectralTarget(self.dim, bumps, atoms, self.label + "~shifted", self.m_max)

    # -- norms ---------------------------------------------------------------

    def barron_norm(self, s: float, tol: float = 1e-9) -> float:
        """int (1+|omega|)^s |f_hat| d omega + sum (1+|omega_j|)^s |c_j|."""
        total = sum((1.0 + _norm(a.omega)) ** s * abs(a.coeff) for a in self.atoms)
        if self.bumps:
            total += _density_moment(self, s, tol)
        return float(total)


def _gauss_factor(k, scale, u):
    """d^k/du^k exp(-u^2/(2 s^2)) = (-1)^k s^-k He_k(u/s) exp(-u^2/(2 s^2))."""
    v = u / scale
    he_prev, he = np.ones_like(v), v.copy()
    if k == 0:
        poly = he_prev
    elif k == 1:
        poly = he
    else:
        for j in range(1, k):
            he_prev, he = he, v * he - j * he_prev
        poly = he
    return ((-1.0) ** k) * scale ** (-k) * poly * np.exp(-v * v / 2.0)


def _norm(vec) -> float:
    return float(np.linalg.norm(np.asarray(vec, dtype=float)))


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1}."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _density_moment(target: SpectralTarget, s: float, tol: float) -> float:
    """int (1+|omega|)^s |f_hat(omega)| d omega over the density part."""
    d = target.dim
    if target.is_radial:
        area = sphere_area(d)

        def integrand(r):
            return (1.0 + r) ** s * target.magnitude_radial(np.array([r]))[0] * r ** (d - 1)

        s_min = min(b.scale for b in target.bumps)
        cut = 40.0 / s_min
        _divergence_guard(integrand, cut, tol)
        val = quad(integrand, 0.0, cut, epsabs=tol / max(area, 1.0), limit=400)[0]
        return area * val
    pts, wts = tensor_rule(target)
    r = np.linalg.norm(pts, axis=1)
    vals = (1.0 + r) ** s * target.magnitude(pts)
    return float(np.sum(wts * vals))


def tensor_rule(target: SpectralTarget):
    """Tensor quadrature over the spectral box, panels split at 0 per axis."""
    d = target.dim
    if d > 3:
        raise BarronNormDivergent(
            "tensor quadrature for non-radial targets limited to d <= 3"
        )
    s_min = min(b.scale for b in target.bumps)
    s_max = max(b.scale for b in target.bumps)
    cut = 40.0 / s_min
    width = 0.35 / s_max
    half_panels = max(8, int(math.ceil(cut / width)))
    edges_pos = np.linspace(0.0, cut, half_panels + 1)
    edges = np.concatenate([-edges_pos[::-1], edges_pos[1:]])
    nodes, weights = np.polynomial.legendre.leggauss(6)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    x1 = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w1 = (half[:, None] * weights[None, :]).ravel()
    grids = np.meshgrid(*([x1] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wts = np.ones(pts.shape[0])
    for j in range(d):
        wts *= np.meshgrid(*([w1] * d), indexing="ij")[j].ravel()
    return pts, wts


def _divergence_guard(integrand, cut, tol):
    """Flag integrals whose tail fails to decay (contract safety net)."""
    inner = quad(integrand, cut / 2.0, cut, epsabs=tol, limit=200)[0]
    outer = quad(integrand, cut, 2.0 * cut, epsabs=tol, limit=200)[0]
    if outer > max(inner, tol) and outer > 1e-6:
        raise BarronNormDivergent("spectral tail is not decaying")


# -- weighted density descriptor (sampling support) -----------------------

@dataclass(frozen=True)
class WeightedSpectralDensity:
    """(1+|omega|)^m-weighted density part: weight, its total mass, proposal recipe."""

    target: SpectralTarget
    m: int
    integral: float
    # proposal recipe: per-(bump, power) gamma mixture for the radial part
    mixture_weights: tuple[float, ...]
    mixture_shapes: tuple[float, ...]
    mixture_scales: tuple[float, ...]

    def weight(self, omega):
        w = np.atleast_2d(np.asarray(omega, dtype=float))
        r = np.linalg.norm(w, axis=1)
        return (1.0 + r) ** self.m * self.target.magnitude(w)


def spectral_density_weighted(target: SpectralTarget, m: int, tol: float = 1e-9):
    """Weight w_m = (1+|omega|)^m M(omega), its integral, and a sampling recipe."""
    if not target.bumps:
        weights = tuple(
            (1.0 + _norm(a.omega)) ** m * abs(a.coeff) for a in target.atoms
        )
        return WeightedSpectralDensity(target, m, float(sum(weights)), (), (), ())
    integral = _density_moment(target, float(m), tol)
    poly = _binomial_poly(m)
    mix_w, mix_shape, mix_scale = _gamma_mixture(target, poly)
    return WeightedSpectralDensity(
        target, m, integral, tuple(mix_w), tuple(mix_shape), tuple(mix_scale)
    )


def _binomial_poly(m: int):
    """Ascending coefficients of (1+r)^m."""
    return np.array([math.comb(m, j) for j in range(m + 1)], dtype=float)


def _gamma_mixture(target: SpectralTarget, poly):
    """Mixture decomposition of sum_k env_k(r) * poly(r) * r^{d-1} dr.

    Each term |A_k| gamma_k beta_j r^{j+d-1} exp(-s_k^2 r^2/2) is sampled by
    r = sqrt(2 y)/s_k with y ~ Gamma((j+d)/2).
    """
    d = target.dim
    weights, shapes, scales = [], [], []
    for b in target.bumps:
        amp = abs(b.spectral_amplitude)
        for j, beta in enumerate(poly):
            if beta == 0.0:
                continue
            q = j + d - 1
            mass = amp * beta * 2.0 ** ((q - 1) / 2.0) * math.gamma((q + 1) / 2.0) / b.scale ** (q + 1)
            weights.append(mass * sphere_area(d))
            shapes.append((q + 1) / 2.0)
            scales.append(b.scale)
    weights = np.asarray(weights)
    return weights / weights.sum(), shapes, scales


# -- constructors ----------------------------------------------------------

def gaussian_target(dim, scale=1.0, center=None, amplitude=1.0, label=None):
    center = tuple([0.0] * dim) if center is None else tuple(float(c) for c in np.atleast_1d(center))
    if len(center) != dim:
        raise ValueError("center length must equal dim")
    return SpectralTarget(
        dim=dim,
        bumps=(GaussianBump(float(amplitude), float(scale), center),),
        atoms=(),
        label=label or f"gaussian({scale},{center})",
    )


def mixture_target(dim, components, label=None):
    """components: iterable of (amplitude, scale, center)."""
    bumps = tuple(
        GaussianBump(float(a), float(s), tuple(float(c) for c in np.atleast_1d(ctr)))
        for a, s, ctr in components
    )
    for b in bumps:
        if len(b.center) != dim:
            raise ValueError("component center length must equal dim")
        if b.scale <= 0:
            raise ValueError("component scale must be positive")
    return SpectralTarget(dim=dim, bumps=bumps, atoms=(), label=label or "mixture")


def atomic_target(dim, atoms, label=None):
    """atoms: iterable of (omega, coeff); closed under conjugation automatically."""
    seen = {}
    for omega, coeff in atoms:
        key = tuple(float(w) for w in np.atleast_1d(omega))
        if len(key) != dim:
            raise ValueError("atom frequency length must equal dim")
        seen[key] = seen.get(key, 0.0 + 0.0j) + complex(coeff)
    closed = dict(seen)
    for key, coeff in seen.items():
        neg = tuple(-w for w in key)
        if neg not in seen:
            closed[neg] = np.conj(coeff)
        elif not np.isclose(abs(seen[neg] - np.conj(coeff)), 0.0, atol=1e-12):
            raise ValueError("atom list violates f_hat(-w) = conj f_hat(w)")
    ordered = tuple(
        SpectralAtom(key, closed[key]) for key in sorted(closed.keys())
    )
    return SpectralTarget(dim=dim, bumps=(), atoms=ordered, label=label or "atoms")


def cosine_target(omega0, amplitude=1.0, label=None):
    """amplitude * cos(omega0 . x) as an atomic target."""
    omega0 = np.atleast_1d(np.asarray(omega0, dtype=float))
    return atomic_target(
        len(omega0),
        [(tuple(omega0), amplitude / 2.0), (tuple(-omega0), amplitude / 2.0)],
        label=label or f"cos({tuple(omega0)})",
    )


@lru_cache(maxsize=None)
def target_zoo(dim: int) -> tuple[SpectralTarget, ...]:
    """Reference targets used by verification suites."""
    zoo = [
        gaussian_target(dim, label="gauss-unit"),
        gaussian_target(dim, scale=0.8, center=[0.3] * dim, amplitude=1.5, label="gauss-shifted"),
        mixture_target(
            dim,
            [(1.0, 1.0, [0.0] * dim), (-0.4, 0.6, [0.5] + [0.0] * (dim - 1))],
            label="gauss-mix",
        ),
        cosine_target([2.0] + [0.0] * (dim - 1), label="cos-2e1"),
    ]
    return tuple(zoo)
