"""Analytical core of the integral representations.

Assembles the per-experiment constants that turn a spectral target and an
activation into an expectation of single-neuron functions:

* envelope h(b, omega) and its closed-form b-integral,
* normalizer I (total mass of the representation measure),
* coefficient J(omega, b) and real phase chi(omega, b),
* periodic Fourier index and coefficient,
* mollifier pair (phi, phi_hat) and the localization constant C(eps)
  for activations without decay.

The periodic path reuses the decaying-path algebra with h == 1 and the
Fourier index playing the role of the frequency a, so coefficient_j and
phase_chi dispatch on the kernel mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .activation import (
    ActivationModel,
    Bounded,
    Decaying,
    Periodic,
    DEFAULT_FREQ_GRID,
    periodic_coefficient,
    select_frequency,
    transform_at,
)
from .domain import DomainBox
from .errors import (
    DegenerateNormalization,
    EpsilonTooLarge,
    PhaseUndefined,
    ResolutionTooLow,
)
from .target import SpectralTarget, sphere_area, tensor_rule

TWO_PI = 2.0 * math.pi


# -- envelope -------------------------------------------------------------

def envelope_h(b, omega_norm, R: float, a: float, p: float):
    """h(b, omega) = (1 + max(0, |b| - R|omega|/|a|))^(-p)."""
    b = np.asarray(b, dtype=float)
    core = R * np.asarray(omega_norm, dtype=float) / abs(a)
    excess = np.maximum(0.0, np.abs(b) - core)
    return (1.0 + excess) ** (-p)


def envelope_b_integral(omega_norm, R: float, a: float, p: float):
    """int_R h(b, omega) db = 2R|omega|/|a| + 2/(p-1)."""
    return 2.0 * R * np.asarray(omega_norm, dtype=float) / abs(a) + 2.0 / (p - 1.0)


def envelope_cdf(b, core: float, p: float):
    """CDF of the normalized density proportional to h(., omega)."""
    b = np.asarray(b, dtype=float)
    total = 2.0 * core + 2.0 / (p - 1.0)
    with np.errstate(invalid="ignore"):
        left = np.where(
            b < -core,
            (1.0 + np.abs(-core - b)) ** (1.0 - p) / (p - 1.0),
            0.0,
        )
        mid = np.where(
            (b >= -core) & (b <= core),
            1.0 / (p - 1.0) + (b + core),
            0.0,
        )
        right = np.where(
            b > core,
            1.0 / (p - 1.0) + 2.0 * core
            + (1.0 - (1.0 + np.abs(b - core)) ** (1.0 - p)) / (p - 1.0),
            0.0,
        )
    return (left + mid + right) / total


def envelope_ppf(u, core: float, p: float):
    """Inverse CDF of the density proportional to h(., omega)."""
    u = np.asarray(u, dtype=float)
    total = 2.0 * core + 2.0 / (p - 1.0)
    mass = u * total
    tail = 1.0 / (p - 1.0)
    out = np.empty_like(mass)
    lo = mass < tail
    # left tail: mass = (1+y)^(1-p)/(p-1) at b = -core - y
    y = ((p - 1.0) * np.maximum(mass[lo], 1e-300)) ** (1.0 / (1.0 - p)) - 1.0
    out[lo] = -core - y
    mid = (~lo) & (mass <= tail + 2.0 * core)
    out[mid] = mass[mid] - tail - core
    hi = mass > tail + 2.0 * core
    rem = np.maximum(2.0 * tail + 2.0 * core - mass[hi], 1e-300)
    y = ((p - 1.0) * rem) ** (1.0 / (1.0 - p)) - 1.0
    out[hi] = core + y
    return out


# -- kernels ----------------------------------------------------------------

@dataclass(frozen=True)
class PlainMode:
    pass


@dataclass(frozen=True)
class PeriodicMode:
    index: int
    coeff: complex


@dataclass(frozen=True)
class ApproxMode:
    eps: float
    c_eps: complex
    mollifier: "MollifierPair"


@dataclass(frozen=True)
class RepresentationKernel:
    """Frozen per-experiment constants defining the representation measure.

    For the periodic mode, `a` holds the Fourier index and `sigma_hat_a`
    the coefficient a_i; the envelope degenerates to h == 1.
    """

    a: float
    sigma_hat_a: complex
    R: float
    p: float
    c_p: float
    m: int
    normalizer: float
    mode: PlainMode | PeriodicMode | ApproxMode

    def __post_init__(self):
        if self.normalizer <= 0.0:
            raise DegenerateNormalization("normalizer must be positive")
        if abs(self.sigma_hat_a) <= 0.0 and not isinstance(self.mode, ApproxMode):
            raise DegenerateNormalization("sigma_hat(a) must be nonzero")

    @property
    def is_decaying(self) -> bool:
        return isinstance(self.mode, PlainMode)

    @property
    def is_periodic(self) -> bool:
        return isinstance(self.mode, PeriodicMode)


def normalizer_i(
    target: SpectralTarget, R: float, a: float, p: float, m: int, tol: float = 1e-10
) -> float:
    """I = int (1+|omega|)^m h(b,omega) |f_hat| db d omega via the closed b-integral."""
    total = 0.0
    for atom in target.atoms:
        r = float(np.linalg.norm(atom.omega))
        total += (1.0 + r) ** m * float(envelope_b_integral(r, R, a, p)) * abs(atom.coeff)
    if target.bumps:
        d = target.dim
        if target.is_radial:
            area = sphere_area(d)

            def integrand(r):
                return (
                    (1.0 + r) ** m
                    * float(envelope_b_integral(r, R, a, p))
                    * target.magnitude_radial(np.array([r]))[0]
                    * r ** (d - 1)
                )

            cut = 40.0 / min(b.scale for b in target.bumps)
            total += area * quad(integrand, 0.0, cut, epsabs=tol, limit=400)[0]
        else:
            pts, wts = tensor_rule(target)
            r = np.linalg.norm(pts, axis=1)
            vals = (1.0 + r) ** m * envelope_b_integral(r, R, a, p) * target.magnitude(pts)
            total += float(np.sum(wts * vals))
    # Paper's bound: I <= max(2R/|a|, 2/(p-1)) ||f||_{B^{m+1}}.
    c1 = max(2.0 * R / abs(a), 2.0 / (p - 1.0))
    bound = c1 * target.barron_norm(m + 1.0)
    if total > bound * (1.0 + 1e-8):
        raise DegenerateNormalization(
            f"normalizer {total:.6g} exceeds its theoretical bound {bound:.6g}"
        )
    return float(total)


def coefficient_j(omega, b, kernel: RepresentationKernel):
    """J(omega, b): magnitude factor of the single-neuron representation."""
    omega = np.atleast_2d(np.asarray(omega, dtype=float))
    r = np.linalg.norm(omega, axis=1)
    if kernel.is_periodic:
        h = 1.0
    else:
        h = envelope_h(b, r, kernel.R, kernel.a, kernel.p)
    return (
        kernel.normalizer
        / (TWO_PI * abs(kernel.sigma_hat_a))
        * (1.0 + r) ** (-kernel.m)
        / h
    )


def phase_chi(omega, b, kernel: RepresentationKernel, target: SpectralTarget):
    """chi(omega, b) = cos(theta_f(omega) - arg sigma_hat(a) - a b)."""
    omega = np.atleast_2d(np.asarray(omega, dtype=float))
    b = np.asarray(b, dtype=float)
    fh = target.f_hat(omega)
    if target.bumps:
        r = np.linalg.norm(omega, axis=1)
        floor = 1e-14 * target.magnitude_envelope(r)
        if np.any(np.abs(fh) <= floor):
            raise PhaseUndefined(
                "spectral phase requested where the magnitude vanishes"
            )
    theta = np.angle(fh)
    return np.cos(theta - np.angle(kernel.sigma_hat_a) - kernel.a * b)


def plain_kernel(
    activation: ActivationModel,
    target: SpectralTarget,
    box: DomainBox,
    m: int,
    *,
    a: Optional[float] = None,
    freq_grid=DEFAULT_FREQ_GRID,
    tol: float = 1e-10,
) -> RepresentationKernel:
    """Kernel for the decaying-activation path on a (recentered) box."""
    if not isinstance(activation.kind, Decaying):
        raise ValueError("plain kernel requires a Decaying activation")
    if m > activation.kind.m_max:
        raise ValueError(f"m={m} exceeds activation m_max={activation.kind.m_max}")
    if a is None:
        a, sig = select_frequency(activation, freq_grid, tol)
    else:
        sig = transform_at(activation, a, tol)
        if abs(sig) < 1e-6:
            raise DegenerateNormalization(f"|sigma_hat({a})| below floor")
    R = box.radius
    p = activation.kind.p
    i_val = normalizer_i(target, R, a, p, m, tol)
    return RepresentationKernel(
        a=a, sigma_hat_a=sig, R=R, p=p, c_p=activation.kind.c_p,
        m=m, normalizer=i_val, mode=PlainMode(),
    )


def periodic_kernel(
    activation: ActivationModel,
    target: SpectralTarget,
    m: int,
    *,
    index_limit: int = 8,
    floor: float = 1e-6,
    tol: float = 1e-10,
) -> RepresentationKernel:
    """Kernel for the periodic path: smallest Fourier index with |a_i| >= floor."""
    if not isinstance(activation.kind, Periodic):
        raise ValueError("periodic kernel requires a Periodic activation")
    if m > activation.kind.m_max:
        raise ValueError(f"m={m} exceeds activation m_max={activation.kind.m_max}")
    chosen = None
    for i in range(1, index_limit + 1):
        coeff = periodic_coefficient(activation, i, tol)
        if abs(coeff) >= floor:
            chosen = (i, coeff)
            break
    if chosen is None:
        raise DegenerateNormalization(
            f"{activation.label}: no Fourier coefficient above {floor:g} up to index {index_limit}"
        )
    i, coeff = chosen
    norm = TWO_PI * target.barron_norm(float(m))
    sup = max(
        float(np.max(np.abs(activation.derivs[k](np.linspace(0.0, TWO_PI, 4097)))))
        for k in range(m + 1)
    )
    return RepresentationKernel(
        a=float(i), sigma_hat_a=coeff, R=0.0, p=math.inf, c_p=sup,
        m=m, normalizer=norm, mode=PeriodicMode(index=i, coeff=coeff),
    )


# -- mollifier ---------------------------------------------------------------

@dataclass(frozen=True)
class MollifierPair:
    """phi with phi_hat supported in [-1,1], == 1 on [-1/2,1/2], 0 <= phi_hat <= 1."""

    phi_hat: Callable
    grid: np.ndarray
    values: np.ndarray
    phi_l1: float
    phi_hat_integral: float
    phi_integral: float

    def phi(self, b):
        """Tabulated phi with linear interpolation (0 outside the table)."""
        return np.interp(np.asarray(b, dtype=float), self.grid, self.values,
                         left=0.0, right=0.0)

    @property
    def half_width(self) -> float:
        return float(self.grid[-1])


def _smooth_step(x):
    """C^inf step: exactly 0 for x <= 0, exactly 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        g = np.where(xc > 0.0, np.exp(-1.0 / np.where(xc > 0.0, xc, 1.0)), 0.0)
        g1 = np.where(xc < 1.0, np.exp(-1.0 / np.where(xc < 1.0, 1.0 - xc, 1.0)), 0.0)
    return g / (g + g1)


def mollifier_hat(t):
    """Plateau 1 on [-1/2, 1/2], support [-1, 1], C^inf transition.

    A closed smoothstep stand-in for the indicator-convolved-with-bump
    construction; it meets the same three constraints exactly (to machine
    precision rather than 1e-10) and keeps results bit-reproducible.  The
    transition occupies the whole allowed band [1/2, 1], which maximizes
    smoothness and hence the decay of phi.
    """
    t = np.abs(np.asarray(t, dtype=float))
    return _smooth_step((1.0 - t) * 2.0)


def build_mollifier(grid_half_width: float = 200.0, grid_points: int = 1 << 17) -> MollifierPair:
    """Tabulate phi = inverse transform of the smoothstep plateau window.

    Under the package conventions phi(b) = int phi_hat(t) e^{itb} dt
    = 2 int_0^1 phi_hat(t) cos(tb) dt, so int phi db = 2 pi phi_hat(0).
    """
    if grid_points < 4096:
        raise ResolutionTooLow("mollifier table needs at least 4096 points")
    checks = np.array([0.0, 0.25, 0.5])
    if np.max(np.abs(mollifier_hat(checks) - 1.0)) > 1e-10:
        raise ResolutionTooLow("phi_hat plateau violated")
    if np.max(np.abs(mollifier_hat(np.array([1.0, 1.5, 2.0])))) > 1e-10:
        raise ResolutionTooLow("phi_hat support violated")
    if grid_points % 2 == 0:
        grid_points += 1  # keep b = 0 on the grid
    nodes, weights = np.polynomial.legendre.leggauss(768)
    t = 0.5 * (nodes + 1.0)
    wt = 0.5 * weights
    ph = mollifier_hat(t)
    grid = np.linspace(-grid_half_width, grid_half_width, grid_points)
    # phi is even: transform the nonnegative half in chunks, then mirror.
    half = grid[grid_points // 2:]
    coef = 2.0 * wt * ph
    vals_half = np.empty_like(half)
    step = 8192
    for lo in range(0, len(half), step):
        block = half[lo:lo + step]
        vals_half[lo:lo + step] = coef @ np.cos(np.outer(t, block))
    values = np.concatenate([vals_half[:0:-1], vals_half])
    phi_l1 = float(np.trapezoid(np.abs(values), grid))
    phi_int = float(np.trapezoid(values, grid))
    c_phi = float(np.sum(wt * ph) * 2.0)
    if abs(phi_int - TWO_PI) > 1e-5:
        raise ResolutionTooLow(
            f"int phi = {phi_int:.8f} deviates from 2 pi; table too small"
        )
    return MollifierPair(
        phi_hat=mollifier_hat,
        grid=grid,
        values=values,
        phi_l1=phi_l1,
        phi_hat_integral=c_phi,
        phi_integral=phi_int,
    )


def mollifier_to_csv(pair: MollifierPair, path):
    """Two-column (t, phi(t)) dump for inspection."""
    with open(path, "w") as fh:
        fh.write("t,phi\n")
        for t, v in zip(pair.grid, pair.values):
            fh.write(f"{float(t)!r},{float(v)!r}\n")


def approx_constant_c(
    eps: float,
    activation: ActivationModel,
    mollifier: MollifierPair,
    a: float,
    tol: float = 1e-12,
    floor: float = 1e-6,
) -> complex:
    """C(eps) = (1/eps) int_{-eps}^{eps} sigma_hat(a+t) phi_hat(t/eps) dt."""
    if not isinstance(activation.kind, Bounded):
        raise ValueError("approx path expects a Bounded activation")
    lo, hi = activation.kind.fourier_interval
    if not (lo < a - eps and a + eps < hi):
        raise EpsilonTooLarge(
            f"(a-eps, a+eps) = ({a - eps:.4g}, {a + eps:.4g}) not inside ({lo}, {hi})"
        )
    if activation.fourier is None:
        raise ValueError(f"{activation.label}: no sigma_hat available on the interval")
    nodes, weights = np.polynomial.legendre.leggauss(400)
    sig = np.array([activation.fourier(a + eps * u) for u in nodes])
    val = complex(np.sum(weights * sig * mollifier.phi_hat(nodes)))
    if abs(val) < floor:
        raise DegenerateNormalization(f"|C(eps)| = {abs(val):.2e} below floor")
    return val


def approx_kernel(
    activation: ActivationModel,
    mollifier: MollifierPair,
    eps: float,
    *,
    a: Optional[float] = None,
    floor: float = 1e-6,
) -> RepresentationKernel:
    """Kernel for the no-decay path; a defaults to the interval midpoint."""
    if not isinstance(activation.kind, Bounded):
        raise ValueError("approx kernel requires a Bounded activation")
    lo, hi = activation.kind.fourier_interval
    if a is None:
        a = 0.5 * (lo + hi)
    c_eps = approx_constant_c(eps, activation, mollifier, a, floor=floor)
    return RepresentationKernel(
        a=float(a), sigma_hat_a=c_eps, R=0.0, p=math.inf,
        c_p=activation.kind.ess_sup, m=0, normalizer=1.0,
        mode=ApproxMode(eps=float(eps), c_eps=c_eps, mollifier=mollifier),
    )
