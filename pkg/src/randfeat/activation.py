"""Activation models: derivative access, decay certificates, composites.

An ActivationModel bundles vectorized evaluators for sigma and its
derivatives together with a classification that the samplers rely on:

* Decaying(c_p, p, m_max): |sigma^(k)(t)| <= c_p (1+|t|)^(-p) for k <= m_max.
* Periodic(period, m_max): sigma(t + period) = sigma(t).
* Bounded(ess_sup, fourier_interval): merely bounded, with a known
  transform on an open interval.

Decay certificates are numbers frozen in the registry below; they were
measured once on a dense grid and are re-validated by sampling in the test
suite.  Derivatives are closed-form (no numerical differentiation in the
sampling loop).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import (
    DecayCertificateViolation,
    DegenerateActivation,
    NoUsableFrequency,
    NotAbsolutelyIntegrable,
    QuadratureBudgetExceeded,
    UnknownFamily,
    UnsupportedDerivativeOrder,
)

TWO_PI = 2.0 * math.pi

# Frequency grid scanned by select_frequency: +-0.25, +-0.5, ..., +-4.
DEFAULT_FREQ_GRID = tuple(
    s * 0.25 * k for k in range(1, 17) for s in (1.0, -1.0)
)


@dataclass(frozen=True)
class Decaying:
    c_p: float
    p: float
    m_max: int


@dataclass(frozen=True)
class Periodic:
    period: float
    m_max: int


@dataclass(frozen=True)
class Bounded:
    ess_sup: float
    fourier_interval: tuple[float, float]


@dataclass(frozen=True)
class CompositeStencil:
    """Finite-difference stencil: nu(t) = sum_j weights[j] * sigma(t + offsets[j])."""

    offsets: tuple[float, ...]
    weights: tuple[float, ...]
    n0: int

    def __post_init__(self):
        if len(self.offsets) != self.n0 or len(self.weights) != self.n0:
            raise ValueError("stencil offsets/weights must have length n0")
        if not any(w != 0.0 for w in self.weights):
            raise ValueError("stencil weights must not all vanish")


@dataclass(frozen=True)
class ActivationModel:
    label: str
    kind: Decaying | Periodic | Bounded
    derivs: tuple[Callable, ...]
    # Closed-form transform sigma_hat(a) = (1/2pi) int sigma(t) e^{-iat} dt,
    # supplied for Bounded models whose transform quadrature is unavailable.
    fourier: Optional[Callable] = None
    # (base model, stencil) when this model is a finite-difference composite.
    composite: Optional[tuple["ActivationModel", CompositeStencil]] = None
    # Kink/jump locations, used to split quadrature panels.
    breakpoints: tuple[float, ...] = ()

    @property
    def m_max(self) -> int:
        if isinstance(self.kind, Bounded):
            return len(self.derivs) - 1
        return self.kind.m_max

    def __call__(self, t):
        return self.derivs[0](np.asarray(t, dtype=float))


def eval_derivative(model: ActivationModel, k: int, t):
    """sigma^(k)(t) from the model's closed-form evaluators."""
    if k < 0 or k > model.m_max or k >= len(model.derivs):
        raise UnsupportedDerivativeOrder(
            f"{model.label}: derivative order {k} > m_max {model.m_max}"
        )
    return model.derivs[k](np.asarray(t, dtype=float))


# -- elementary families -------------------------------------------------

def _hermite_coeffs(order):
    """Coefficients (ascending) of physicists' Hermite H_0..H_order."""
    polys = [np.array([1.0]), np.array([0.0, 2.0])]
    while len(polys) <= order:
        k = len(polys) - 1
        nxt = np.zeros(len(polys[-1]) + 1)
        nxt[1:] += 2.0 * polys[-1]
        nxt[: len(polys[-2])] -= 2.0 * k * polys[-2]
        polys.append(nxt)
    return polys[: order + 1]


def gaussian_derivs(order=4):
    """d^k/dt^k exp(-t^2) = (-1)^k H_k(t) exp(-t^2)."""
    herm = _hermite_coeffs(order)

    def make(k):
        coeffs = ((-1.0) ** k) * herm[k]

        def dk(t):
            return np.polynomial.polynomial.polyval(t, coeffs) * np.exp(-t * t)

        return dk

    return tuple(make(k) for k in range(order + 1))


def _logistic(t):
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logistic_derivs(order=4):
    """Derivatives of the logistic via the polynomial recursion p' = p'(y)(y - y^2)."""
    # p_0(y) = y; p_{k+1}(y) = p_k'(y) * (y - y^2), with y = logistic(t).
    polys = [np.array([0.0, 1.0])]
    for _ in range(order):
        dp = np.polynomial.polynomial.polyder(polys[-1])
        polys.append(np.polynomial.polynomial.polymul(dp, np.array([0.0, 1.0, -1.0])))

    def make(k):
        coeffs = polys[k]

        def dk(t):
            y = _logistic(np.asarray(t, dtype=float))
            return np.polynomial.polynomial.polyval(y, coeffs)

        return dk

    return tuple(make(k) for k in range(order + 1))


def tanh_derivs(order=4):
    polys = [np.array([0.0, 1.0])]
    for _ in range(order):
        dp = np.polynomial.polynomial.polyder(polys[-1])
        polys.append(np.polynomial.polynomial.polymul(dp, np.array([1.0, 0.0, -1.0])))

    def make(k):
        coeffs = polys[k]

        def dk(t):
            return np.polynomial.polynomial.polyval(np.tanh(t), coeffs)

        return dk

    return tuple(make(k) for k in range(order + 1))


def arctan_derivs(order=4):
    """d^k/dt^k arctan(t) = (k-1)! cos^k(theta) sin(k(theta + pi/2)), theta = arctan t."""

    def make(k):
        if k == 0:
            return np.arctan
        fact = math.factorial(k - 1)

        def dk(t):
            theta = np.arctan(t)
            return fact * np.cos(theta) ** k * np.sin(k * (theta + math.pi / 2.0))

        return dk

    return tuple(make(k) for k in range(order + 1))


def softplus_derivs(order=4):
    inner = logistic_derivs(max(order - 1, 0))

    def sp(t):
        return np.logaddexp(0.0, t)

    return (sp,) + inner[:order]


def relu_derivs():
    return (
        lambda t: np.maximum(t, 0.0),
        lambda t: (t > 0).astype(float),
    )


def leaky_relu_derivs(alpha=0.01):
    return (
        lambda t: alpha * t + (1.0 - alpha) * np.maximum(t, 0.0),
        lambda t: alpha + (1.0 - alpha) * (t > 0),
    )


def relu_power_derivs(k):
    """max(0,t)^k and its derivatives up to order k."""

    def make(j):
        fact = math.factorial(k) / math.factorial(k - j)
        if j == k:
            return lambda t: fact * (t > 0)
        return lambda t: fact * np.maximum(t, 0.0) ** (k - j)

    return tuple(make(j) for j in range(k + 1))


def cos_derivs(order=6):
    def make(k):
        shift = k * math.pi / 2.0
        return lambda t: np.cos(t + shift)

    return tuple(make(k) for k in range(order + 1))


def _sinc(t):
    return np.sinc(np.asarray(t, dtype=float) / math.pi)


def _fejer(t):
    half = np.asarray(t, dtype=float) / (2.0 * math.pi)
    return np.sinc(half) ** 2


# -- composites ----------------------------------------------------------

def stencil_for_family(family: str, k: Optional[int] = None) -> CompositeStencil:
    """Stencil from the composite table; relu^k takes the power k."""
    simple = {
        "logistic": ((1.0, 0.0), (1.0, -1.0)),
        "arctan": ((1.0, 0.0), (1.0, -1.0)),
        "tanh": ((1.0, 0.0), (1.0, -1.0)),
        "softplus": ((1.0, -1.0, 0.0), (1.0, 1.0, -2.0)),
        "relu": ((1.0, -1.0, 0.0), (1.0, 1.0, -2.0)),
        "leaky-relu": ((1.0, -1.0, 0.0), (1.0, 1.0, -2.0)),
    }
    if family in simple:
        offsets, weights = simple[family]
        return CompositeStencil(offsets, weights, len(offsets))
    if family == "relu^k":
        if k is None or k < 1:
            raise UnknownFamily("relu^k stencil needs the power k >= 1")
        shift = (k + 1) // 2
        offsets = tuple(float(i - shift) for i in range(k + 2))
        weights = tuple(float((-1) ** i * math.comb(k + 1, i)) for i in range(k + 2))
        return CompositeStencil(offsets, weights, k + 2)
    raise UnknownFamily(f"no composite stencil for family {family!r}")


def _stencil_derivs(base: ActivationModel, stencil: CompositeStencil, order):
    def make(k):
        fn = base.derivs[k]

        def dk(t):
            t = np.asarray(t, dtype=float)
            acc = np.zeros_like(t)
            for off, w in zip(stencil.offsets, stencil.weights):
                acc = acc + w * fn(t + off)
            return acc

        return dk

    return tuple(make(k) for k in range(order + 1))


def _decay_check_grid():
    # Golden-ratio low-discrepancy points on [-50, 50], denser near 0.
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    u = (np.arange(1, 4001) * phi) % 1.0
    return np.concatenate([100.0 * u - 50.0, np.linspace(-6.0, 6.0, 2001)])


def validate_decay(model: ActivationModel, grid=None):
    """Check |sigma^(k)(t)| <= c_p (1+|t|)^(-p) for all k <= m_max by sampling."""
    if not isinstance(model.kind, Decaying):
        raise ValueError("decay validation applies to Decaying models")
    t = _decay_check_grid() if grid is None else np.asarray(grid, dtype=float)
    bound = model.kind.c_p * (1.0 + np.abs(t)) ** (-model.kind.p)
    for k in range(model.kind.m_max + 1):
        vals = np.abs(model.derivs[k](t))
        if np.any(vals > bound):
            worst = float(np.max(vals - bound))
            raise DecayCertificateViolation(
                f"{model.label}: derivative {k} exceeds certificate by {worst:.3e}"
            )


def composite_from_table(
    base: ActivationModel,
    family: str,
    *,
    certificate: tuple[float, float],
    k: Optional[int] = None,
    m_max: Optional[int] = None,
    label: Optional[str] = None,
) -> tuple[ActivationModel, CompositeStencil]:
    """Build the decaying composite nu for a table family.

    The decay certificate (c_p, p) is caller-supplied and validated by
    sampling; m_max defaults to the table's maximal order (capped at 4 for
    the smooth families).
    """
    stencil = stencil_for_family(family, k=k)
    table_m = {"relu": 1, "leaky-relu": 1}.get(family, k if family == "relu^k" else 4)
    if m_max is None:
        m_max = table_m
    if m_max > base.m_max:
        raise UnsupportedDerivativeOrder(
            f"composite m_max {m_max} exceeds base m_max {base.m_max}"
        )
    c_p, p = certificate
    breaks = tuple(
        sorted({bp - off for off in stencil.offsets for bp in (base.breakpoints or (0.0,))})
    ) if base.breakpoints else ()
    model = ActivationModel(
        label=label or f"{base.label}-composite",
        kind=Decaying(c_p=c_p, p=p, m_max=m_max),
        derivs=_stencil_derivs(base, stencil, m_max),
        composite=(base, stencil),
        breakpoints=breaks,
    )
    validate_decay(model)
    return model, stencil


def bv_first_difference(base: ActivationModel, label: Optional[str] = None) -> ActivationModel:
    """tau(t) = sigma(t+1) - sigma(t) for a bounded, non-constant sigma."""
    if not isinstance(base.kind, Bounded):
        raise ValueError("bv_first_difference expects a Bounded base")
    stencil = CompositeStencil((1.0, 0.0), (1.0, -1.0), 2)
    derivs = _stencil_derivs(base, stencil, len(base.derivs) - 1)
    probe = np.linspace(-40.0, 40.0, 8001)
    if float(np.max(np.abs(derivs[0](probe)))) < 1e-12:
        raise DegenerateActivation(f"{base.label}: first difference vanishes")
    breaks = tuple(
        sorted({bp - off for off in stencil.offsets for bp in (base.breakpoints or (0.0,))})
    ) if base.breakpoints else ()
    return ActivationModel(
        label=label or f"{base.label}-diff",
        kind=Bounded(ess_sup=2.0 * base.kind.ess_sup, fourier_interval=base.kind.fourier_interval),
        derivs=derivs,
        composite=(base, stencil),
        breakpoints=breaks,
    )


def promote_decaying(
    model: ActivationModel, c_p: float, p: float, m_max: int
) -> ActivationModel:
    """Re-certify a model as Decaying after an empirical check."""
    out = ActivationModel(
        label=model.label,
        kind=Decaying(c_p=c_p, p=p, m_max=m_max),
        derivs=model.derivs[: m_max + 1],
        fourier=model.fourier,
        composite=model.composite,
        breakpoints=model.breakpoints,
    )
    validate_decay(out)
    return out


# -- Fourier data --------------------------------------------------------

def fourier_value(model: ActivationModel, a: float, tol: float = 1e-9) -> complex:
    """sigma_hat(a) = (1/2pi) int sigma(t) e^{-iat} dt by certificate-driven quadrature."""
    if not isinstance(model.kind, Decaying):
        raise NotAbsolutelyIntegrable(
            f"{model.label}: transform quadrature needs a decaying model"
        )
    c_p, p = model.kind.c_p, model.kind.p
    # Tail beyond T contributes at most 2 c_p (1+T)^(1-p) / ((p-1) 2pi).
    t_cut = (tol * math.pi * (p - 1.0) / (2.0 * c_p)) ** (1.0 / (1.0 - p)) - 1.0
    t_cut = max(t_cut, 1.0)
    inner = min(t_cut, 60.0)
    edges = [-t_cut, -inner]
    edges.extend(b for b in sorted(model.breakpoints) if -inner < b < inner)
    edges.extend([inner, t_cut])
    edges = sorted(set(edges))
    sigma = model.derivs[0]
    total = 0.0 + 0.0j
    eps = tol / (4.0 * max(len(edges) - 1, 1))
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        re = quad(lambda t: sigma(np.array([t]))[0] * math.cos(a * t), lo, hi,
                  epsabs=eps, limit=200)[0]
        im = quad(lambda t: -sigma(np.array([t]))[0] * math.sin(a * t), lo, hi,
                  epsabs=eps, limit=200)[0]
        total += re + 1j * im
    return total / TWO_PI


def transform_at(model: ActivationModel, a: float, tol: float = 1e-9) -> complex:
    """sigma_hat(a), preferring a closed form supplied with the model."""
    if model.fourier is not None:
        return complex(model.fourier(a))
    return fourier_value(model, a, tol)


def select_frequency(
    model: ActivationModel,
    grid=DEFAULT_FREQ_GRID,
    tol: float = 1e-9,
    floor: float = 1e-6,
) -> tuple[float, complex]:
    """Grid point maximizing |sigma_hat(a)|; ties to smaller |a|, then positive a."""
    grid = [float(a) for a in grid]
    if not grid or any(a == 0.0 for a in grid):
        raise ValueError("frequency grid must be nonempty and exclude 0")
    values = {a: transform_at(model, a, tol) for a in grid}
    best = max(abs(v) for v in values.values())
    if best <= floor:
        raise NoUsableFrequency(
            f"{model.label}: max |sigma_hat| {best:.2e} below floor {floor:.0e}"
        )
    tied = [a for a, v in values.items() if abs(v) >= best * (1.0 - 1e-9)]
    a = min(tied, key=lambda x: (abs(x), x < 0))
    return a, values[a]


def periodic_coefficient(model: ActivationModel, i: int, tol: float = 1e-10) -> complex:
    """a_i = (1/2pi) int_0^2pi sigma(b) e^{-i i b} db, composite quadrature."""
    if not isinstance(model.kind, Periodic):
        raise ValueError("periodic_coefficient expects a Periodic model")
    if abs(model.kind.period - TWO_PI) > 1e-9:
        raise ValueError("rescale the model to period 2pi first")
    if i == 0:
        raise ValueError("coefficient index must be nonzero")
    edges = [0.0]
    edges.extend(b % TWO_PI for b in model.breakpoints)
    edges.append(TWO_PI)
    edges = sorted(set(edges))
    sigma = model.derivs[0]

    def estimate(panels_per_piece):
        nodes, weights = np.polynomial.legendre.leggauss(8)
        total = 0.0 + 0.0j
        for lo, hi in zip(edges[:-1], edges[1:]):
            sub = np.linspace(lo, hi, panels_per_piece + 1)
            mid = 0.5 * (sub[:-1] + sub[1:])
            half = 0.5 * (sub[1:] - sub[:-1])
            b = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
            w = (half[:, None] * weights[None, :]).ravel()
            vals = sigma(b) * np.exp(-1j * i * b)
            total += np.sum(w * vals)
        return total / TWO_PI

    panels, prev = 4, estimate(4)
    budget = 1 << 14
    while True:
        panels *= 2
        cur = estimate(panels)
        if abs(cur - prev) < tol:
            return cur
        if panels * len(edges) * 8 > budget:
            raise QuadratureBudgetExceeded(
                f"{model.label}: coefficient {i} not converged at {panels} panels"
            )
        prev = cur


def rescale_to_2pi(model: ActivationModel) -> ActivationModel:
    """Dilate a periodic model so its period becomes 2pi."""
    if not isinstance(model.kind, Periodic):
        raise ValueError("rescale_to_2pi expects a Periodic model")
    ratio = model.kind.period / TWO_PI
    if abs(ratio - 1.0) < 1e-12:
        return model

    def make(k):
        fn = model.derivs[k]
        scale = ratio ** k
        return lambda t: scale * fn(np.asarray(t, dtype=float) * ratio)

    return ActivationModel(
        label=model.label,
        kind=Periodic(period=TWO_PI, m_max=model.kind.m_max),
        derivs=tuple(make(k) for k in range(len(model.derivs))),
        breakpoints=tuple(b / ratio for b in model.breakpoints),
    )


# -- registry ------------------------------------------------------------

# Decay certificates (c_p for p = 2) measured on a dense grid and rounded
# up; the test suite re-validates them by quasi-random sampling.
_CERT = {
    "gaussian": 10.5,
    "logistic-diff": 1.4,
    "relu-dd": 4.01,
    "relu2-ddd": 18.1,
    "heaviside-diff": 4.01,
}


def _gaussian_model():
    return ActivationModel(
        label="gaussian",
        kind=Decaying(c_p=_CERT["gaussian"], p=2.0, m_max=3),
        derivs=gaussian_derivs(3),
        fourier=lambda a: complex(math.sqrt(math.pi) / TWO_PI * math.exp(-a * a / 4.0)),
    )


def _logistic_model():
    return ActivationModel(
        label="logistic",
        kind=Bounded(ess_sup=1.0, fourier_interval=(-math.inf, math.inf)),
        derivs=logistic_derivs(4),
    )


def _relu_model():
    return ActivationModel(
        label="relu",
        kind=Bounded(ess_sup=math.inf, fourier_interval=(0.0, 0.0)),
        derivs=relu_derivs(),
        breakpoints=(0.0,),
    )


def _relu2_model():
    return ActivationModel(
        label="relu2",
        kind=Bounded(ess_sup=math.inf, fourier_interval=(0.0, 0.0)),
        derivs=relu_power_derivs(2),
        breakpoints=(0.0,),
    )


def _heaviside_model():
    return ActivationModel(
        label="heaviside",
        kind=Bounded(ess_sup=1.0, fourier_interval=(0.0, 0.0)),
        derivs=(lambda t: (np.asarray(t, dtype=float) >= 0).astype(float),),
        breakpoints=(0.0,),
    )


def build_registry() -> dict[str, ActivationModel]:
    """Activation registry keyed by the labels the CLI config accepts."""
    registry = {}
    registry["gaussian"] = _gaussian_model()
    registry["logistic-diff"] = composite_from_table(
        _logistic_model(), "logistic",
        certificate=(_CERT["logistic-diff"], 2.0), m_max=3, label="logistic-diff",
    )[0]
    registry["relu-dd"] = composite_from_table(
        _relu_model(), "relu",
        certificate=(_CERT["relu-dd"], 2.0), label="relu-dd",
    )[0]
    registry["relu2-ddd"] = composite_from_table(
        _relu2_model(), "relu^k", k=2,
        certificate=(_CERT["relu2-ddd"], 2.0), label="relu2-ddd",
    )[0]
    registry["cos"] = ActivationModel(
        label="cos", kind=Periodic(period=TWO_PI, m_max=6), derivs=cos_derivs(6),
    )
    registry["sinc"] = ActivationModel(
        label="sinc",
        kind=Bounded(ess_sup=1.0, fourier_interval=(0.0, 1.0)),
        derivs=(_sinc,),
        fourier=lambda a: complex(0.5 if abs(a) < 1.0 else (0.25 if abs(a) == 1.0 else 0.0)),
    )
    registry["sinc2"] = ActivationModel(
        label="sinc2",
        kind=Bounded(ess_sup=1.0, fourier_interval=(0.0, 1.0)),
        derivs=(_fejer,),
        fourier=lambda a: complex(max(0.0, 1.0 - abs(a))),
    )
    registry["heaviside-diff"] = promote_decaying(
        bv_first_difference(_heaviside_model(), label="heaviside-diff"),
        c_p=_CERT["heaviside-diff"], p=2.0, m_max=0,
    )
    return registry
