"""Feature samplers for the representation measures.

Four laws are supported:

* plain:     d lambda ~ (1+|omega|)^m h(b, omega) |f_hat(omega)| db d omega
* periodic:  d lambda ~ (1+|omega|)^m |f_hat(omega)| d omega x U[0, 2pi)
* approx:    d lambda ~ |f_hat(omega)| |phi(eps b)| d omega db
* stratified: sign-augmented plain law, partitioned into grid cells with
  per-cell sample counts c_i = ceil(lambda_i n)

omega marginals are drawn exactly: the radial part of each weighted
Gaussian-envelope component is a generalized gamma (sampled through
standard_gamma), directions are uniform on the sphere, and mixtures with
sign cancellation are thinned by the exact ratio |f_hat| / envelope.
The b conditionals use closed-form inverse CDFs.

Every sample index owns its own counter-based stream (see rng), so sample
lists are byte-identical across runs and thread counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import rng
from .errors import (
    CellSamplingStalled,
    MollifierTableOverflow,
    PilotUnderresolved,
    PlanSampleMismatch,
    ProposalMismatch,
)
from .representation import (
    MollifierPair,
    RepresentationKernel,
    envelope_b_integral,
    envelope_cdf,
    envelope_ppf,
    phase_chi,
)
from .target import SpectralTarget, _density_moment, sphere_area

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FeatureSample:
    omega: np.ndarray
    b: float
    eta: int = 1
    log_weight: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite(self.omega)) or not math.isfinite(self.b):
            raise ValueError("feature sample has non-finite coordinates")
        if self.eta not in (-1, 1):
            raise ValueError("eta must be +1 or -1")


# -- omega marginal ---------------------------------------------------------

@dataclass(frozen=True)
class _OmegaLaw:
    """Exact sampler for density ~ poly(|w|) |f_hat(w)| plus weighted atoms."""

    target: SpectralTarget
    poly: np.ndarray                  # ascending coefficients of poly(r)
    atom_omegas: tuple
    atom_cum: np.ndarray              # cumulative atom weights
    atom_mass: float
    density_mass: float
    mix_cum: np.ndarray
    mix_shapes: np.ndarray
    mix_scales: np.ndarray
    needs_thinning: bool

    @property
    def total_mass(self) -> float:
        return self.atom_mass + self.density_mass

    def density_ratio(self, omega, r) -> float:
        """|f_hat(omega)| / envelope(r), the thinning probability."""
        env = self.target.magnitude_envelope(np.array([r]))[0]
        if env <= 0.0:
            return 0.0
        return float(self.target.magnitude(omega[None, :])[0] / env)

    def draw(self, gen, counter=None) -> np.ndarray:
        d = self.target.dim
        if self.atom_mass > 0.0:
            u = gen.random()
            if u * self.total_mass < self.atom_mass:
                k = int(np.searchsorted(self.atom_cum, u * self.total_mass, side="right"))
                k = min(k, len(self.atom_omegas) - 1)
                return np.asarray(self.atom_omegas[k], dtype=float)
        while True:
            u = gen.random()
            k = int(np.searchsorted(self.mix_cum, u, side="right"))
            k = min(k, len(self.mix_shapes) - 1)
            y = gen.standard_gamma(self.mix_shapes[k])
            r = math.sqrt(2.0 * y) / self.mix_scales[k]
            v = gen.standard_normal(d)
            nv = np.linalg.norm(v)
            while nv < 1e-12:
                v = gen.standard_normal(d)
                nv = np.linalg.norm(v)
            omega = (r / nv) * v
            accept = gen.random()
            if counter is not None:
                counter[0] += 1
            if not self.needs_thinning:
                return omega
            if accept < self.density_ratio(omega, r):
                if counter is not None:
                    counter[1] += 1
                return omega
            if counter is not None and counter[0] >= 2000:
                if counter[1] < 1e-3 * counter[0]:
                    raise ProposalMismatch(
                        f"omega acceptance rate {counter[1]}/{counter[0]} below 1e-3"
                    )


def _omega_law(target: SpectralTarget, poly, atom_weight_fn) -> _OmegaLaw:
    poly = np.asarray(poly, dtype=float)
    atom_omegas, atom_w = [], []
    for atom in target.atoms:
        atom_omegas.append(np.asarray(atom.omega, dtype=float))
        atom_w.append(atom_weight_fn(atom))
    atom_w = np.asarray(atom_w, dtype=float)
    atom_mass = float(atom_w.sum()) if len(atom_w) else 0.0
    mix_w, mix_shapes, mix_scales = [], [], []
    density_mass = 0.0
    if target.bumps:
        d = target.dim
        for b in target.bumps:
            amp = abs(b.spectral_amplitude)
            for j, beta in enumerate(poly):
                if beta == 0.0:
                    continue
                q = j + d - 1
                mass = (
                    amp * beta * 2.0 ** ((q - 1) / 2.0)
                    * math.gamma((q + 1) / 2.0) / b.scale ** (q + 1)
                    * sphere_area(d)
                )
                mix_w.append(mass)
                mix_shapes.append((q + 1) / 2.0)
                mix_scales.append(b.scale)
        env_mass = float(np.sum(mix_w))
        # Exact density mass accounts for sign cancellation across bumps.
        density_mass = _poly_weighted_mass(target, poly)
        mix_w = np.asarray(mix_w) / env_mass
    return _OmegaLaw(
        target=target,
        poly=poly,
        atom_omegas=tuple(atom_omegas),
        atom_cum=np.cumsum(atom_w) if len(atom_w) else np.zeros(0),
        atom_mass=atom_mass,
        density_mass=density_mass,
        mix_cum=np.cumsum(mix_w) if len(mix_w) else np.zeros(0),
        mix_shapes=np.asarray(mix_shapes),
        mix_scales=np.asarray(mix_scales),
        needs_thinning=len(target.bumps) > 1,
    )


def _poly_weighted_mass(target: SpectralTarget, poly) -> float:
    """int poly(|w|) |f_hat(w)| dw over the density part."""
    total = 0.0
    for j, beta in enumerate(np.asarray(poly, dtype=float)):
        if beta != 0.0:
            total += beta * _monomial_moment(target, j)
    return total


def _monomial_moment(target: SpectralTarget, j: int) -> float:
    """int |w|^j |f_hat| dw over the density part.

    _density_moment integrates (1+r)^s; pure power moments follow from
    the binomial inversion r^j = sum_i (-1)^(j-i) C(j,i) (1+r)^i.
    """
    total = 0.0
    for i in range(j + 1):
        total += ((-1.0) ** (j - i)) * math.comb(j, i) * _density_moment(target, float(i), 1e-10)
    return total


# -- plain path -------------------------------------------------------------

def _plain_poly(kernel: RepresentationKernel) -> np.ndarray:
    base = np.array([2.0 / (kernel.p - 1.0), 2.0 * kernel.R / abs(kernel.a)])
    binom = np.array([math.comb(kernel.m, j) for j in range(kernel.m + 1)], dtype=float)
    return np.convolve(base, binom)


def _plain_law(target, kernel) -> _OmegaLaw:
    def atom_weight(atom):
        r = float(np.linalg.norm(atom.omega))
        return (
            (1.0 + r) ** kernel.m
            * float(envelope_b_integral(r, kernel.R, kernel.a, kernel.p))
            * abs(atom.coeff)
        )

    return _omega_law(target, _plain_poly(kernel), atom_weight)


def _draw_one_plain(gen, law: _OmegaLaw, kernel: RepresentationKernel, counter=None):
    omega = law.draw(gen, counter)
    core = kernel.R * float(np.linalg.norm(omega)) / abs(kernel.a)
    b = float(envelope_ppf(np.array([gen.random()]), core, kernel.p)[0])
    return omega, b


def draw_plain(
    target: SpectralTarget,
    kernel: RepresentationKernel,
    n: int,
    seed: int,
    domain: int = rng.PLAIN,
) -> list[FeatureSample]:
    """n i.i.d. samples from the plain representation measure."""
    if not kernel.is_decaying:
        raise ValueError("draw_plain requires a plain-mode kernel")
    law = _plain_law(target, kernel)
    counter = [0, 0]
    out = []
    for i in range(n):
        gen = rng.stream(seed, domain, i)
        omega, b = _draw_one_plain(gen, law, kernel, counter)
        out.append(FeatureSample(omega=omega, b=b))
    return out


# -- periodic path ------------------------------------------------------------

def _periodic_law(target, m) -> _OmegaLaw:
    poly = np.array([math.comb(m, j) for j in range(m + 1)], dtype=float)

    def atom_weight(atom):
        return (1.0 + float(np.linalg.norm(atom.omega))) ** m * abs(atom.coeff)

    return _omega_law(target, poly, atom_weight)


def draw_periodic(
    target: SpectralTarget,
    kernel: RepresentationKernel,
    n: int,
    seed: int,
    domain: int = rng.PERIODIC,
) -> list[FeatureSample]:
    """omega ~ (1+|omega|)^m |f_hat|, b uniform on [0, 2pi)."""
    if not kernel.is_periodic:
        raise ValueError("draw_periodic requires a periodic-mode kernel")
    law = _periodic_law(target, kernel.m)
    counter = [0, 0]
    out = []
    for i in range(n):
        gen = rng.stream(seed, domain, i)
        omega = law.draw(gen, counter)
        b = TWO_PI * gen.random()
        out.append(FeatureSample(omega=omega, b=b))
    return out


# -- approx path ---------------------------------------------------------------

def _abs_phi_quantile(mollifier: MollifierPair):
    vals = np.abs(mollifier.values)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1])
                                            * np.diff(mollifier.grid))])
    total = cdf[-1]
    if total <= 0.0:
        raise MollifierTableOverflow("mollifier table carries no mass")
    cdf /= total

    def quantile(u):
        return float(np.interp(u, cdf, mollifier.grid))

    return quantile


def draw_approx(
    target: SpectralTarget,
    mollifier: MollifierPair,
    eps: float,
    n: int,
    seed: int,
    domain: int = rng.APPROX,
) -> list[FeatureSample]:
    """omega ~ |f_hat|, b ~ |phi(eps .)| via the tabulated inverse CDF."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    law = _omega_law(target, np.array([1.0]), lambda atom: abs(atom.coeff))
    quantile = _abs_phi_quantile(mollifier)
    counter = [0, 0]
    out = []
    for i in range(n):
        gen = rng.stream(seed, domain, i)
        omega = law.draw(gen, counter)
        b = quantile(gen.random()) / eps
        out.append(FeatureSample(omega=omega, b=b))
    return out


# -- sign augmentation ----------------------------------------------------------

def augment_sign(sample: FeatureSample, chi: float, seed: int, index: int = 0) -> FeatureSample:
    """eta = +1 with probability (chi+1)/2, so E(eta | omega, b) = chi."""
    if not -1.0 <= chi <= 1.0:
        raise ValueError("chi must lie in [-1, 1]")
    gen = rng.stream(seed, rng.SIGN, index)
    eta = 1 if gen.random() < 0.5 * (chi + 1.0) else -1
    return FeatureSample(omega=sample.omega, b=sample.b, eta=eta,
                         log_weight=sample.log_weight)


# -- stratified path --------------------------------------------------------------

@dataclass(frozen=True)
class StratifiedCell:
    key: tuple
    b_lo: float
    b_hi: float
    w_lo: tuple
    w_hi: tuple
    eta: int
    measure: float
    count: int


@dataclass(frozen=True)
class StratifiedPlan:
    A: float
    bins_b: int
    bins_w_per_axis: int
    cells: tuple[StratifiedCell, ...]
    tail_measure: float
    tail_count: int
    b_edges: np.ndarray
    w_edges: np.ndarray
    pilot_size: int
    pilot: tuple = field(repr=False, default=())

    @property
    def total_count(self) -> int:
        return sum(c.count for c in self.cells) + self.tail_count

    @property
    def kept_keys(self) -> frozenset:
        return frozenset(c.key for c in self.cells)

    def stratum_of(self, sample: FeatureSample):
        """Kept-cell key for a signed sample, or None for the tail stratum."""
        key = _cell_key(sample.omega, sample.b, sample.eta, self.b_edges, self.w_edges)
        return key if key is not None and key in self.kept_keys else None


def _cell_key(omega, b, eta, b_edges, w_edges):
    """Grid key, or None when (omega, b) falls outside the truncation box."""
    if b < b_edges[0] or b >= b_edges[-1]:
        return None
    b_idx = int(np.searchsorted(b_edges, b, side="right")) - 1
    w_idx = []
    for wj in np.atleast_1d(omega):
        if wj < w_edges[0] or wj >= w_edges[-1]:
            return None
        w_idx.append(int(np.searchsorted(w_edges, wj, side="right")) - 1)
    return (b_idx, *w_idx, int(eta))


def build_stratified_plan(
    target: SpectralTarget,
    kernel: RepresentationKernel,
    n: int,
    eps_smooth: float,
    pilot_size: Optional[int] = None,
    seed: int = 0,
    max_cells: Optional[int] = None,
    keep_min_expected: float = 0.0,
) -> StratifiedPlan:
    """Truncation radius, cell grid, pilot-estimated measures, sample counts.

    A = n^(2 / ((d+1)(2 + min(p-1, eps_smooth)))); the (b, omega) box
    |b| <= A, |omega| <= A|a|/2R is cut into per-axis bins of width at most
    A n^(-1/(d+1)) (resp. (A|a|/2R) n^(-1/(d+1))), doubled over the sign.
    At most max_cells (default 2n) cells are kept, largest pilot mass
    first; the rest of the mass joins the tail stratum, which keeps the
    total neuron budget at sum ceil(lambda_i n) <= 3n + 1.
    """
    if not kernel.is_decaying:
        raise ValueError("stratified plan requires a plain-mode kernel")
    if target.atoms:
        raise ValueError("stratified plain path supports density targets only")
    if n < 2:
        raise ValueError("n must be at least 2")
    d = target.dim
    t_exp = min(kernel.p - 1.0, eps_smooth)
    A = float(n) ** (2.0 / ((d + 1) * (2.0 + t_exp)))
    bins = int(math.ceil(2.0 * float(n) ** (1.0 / (d + 1))))
    w_half = A * abs(kernel.a) / (2.0 * kernel.R)
    b_edges = np.linspace(-A, A, bins + 1)
    w_edges = np.linspace(-w_half, w_half, bins + 1)
    pilot_size = 50 * n if pilot_size is None else pilot_size
    max_cells = 2 * n if max_cells is None else max_cells

    law = _plain_law(target, kernel)
    counter = [0, 0]
    pilot = []
    counts: dict = {}
    first_half: set = set()
    new_in_second = 0
    for i in range(pilot_size):
        gen = rng.stream(seed, rng.PILOT, i)
        omega, b = _draw_one_plain(gen, law, kernel, counter)
        chi = float(phase_chi(omega[None, :], b, kernel, target)[0])
        eta = 1 if gen.random() < 0.5 * (chi + 1.0) else -1
        pilot.append(FeatureSample(omega=omega, b=b, eta=eta))
        key = _cell_key(omega, b, eta, b_edges, w_edges)
        if key is None:
            continue
        counts[key] = counts.get(key, 0) + 1
        if i < pilot_size // 2:
            first_half.add(key)
        elif key not in first_half:
            new_in_second += 1
    second_size = pilot_size - pilot_size // 2
    if second_size and new_in_second >= 0.5 * second_size:
        raise PilotUnderresolved(
            f"{new_in_second} of {second_size} second-half pilot samples landed in "
            f"cells unseen in the first half; increase pilot_size"
        )

    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    cells = []
    kept_mass = 0.0
    for key, cnt in ordered:
        if len(cells) >= max_cells:
            break
        measure = cnt / pilot_size
        if measure * n < keep_min_expected:
            break
        b_idx, *w_idx, eta = key
        cells.append(
            StratifiedCell(
                key=key,
                b_lo=float(b_edges[b_idx]),
                b_hi=float(b_edges[b_idx + 1]),
                w_lo=tuple(float(w_edges[j]) for j in w_idx),
                w_hi=tuple(float(w_edges[j + 1]) for j in w_idx),
                eta=eta,
                measure=measure,
                count=int(math.ceil(measure * n)),
            )
        )
        kept_mass += measure
    tail_measure = max(0.0, 1.0 - kept_mass)
    tail_count = int(math.ceil(tail_measure * n)) if tail_measure > 1e-12 else 0
    plan = StratifiedPlan(
        A=A, bins_b=bins, bins_w_per_axis=bins, cells=tuple(cells),
        tail_measure=tail_measure, tail_count=tail_count,
        b_edges=b_edges, w_edges=w_edges, pilot_size=pilot_size,
        pilot=tuple(pilot),
    )
    if plan.total_count > 3 * n + 1:
        raise PlanSampleMismatch(
            f"total count {plan.total_count} exceeds 3n+1 = {3 * n + 1}"
        )
    return plan


def _box_radius_range(w_lo, w_hi):
    lo = np.asarray(w_lo)
    hi = np.asarray(w_hi)
    near = np.where((lo <= 0.0) & (hi >= 0.0), 0.0, np.minimum(np.abs(lo), np.abs(hi)))
    far = np.maximum(np.abs(lo), np.abs(hi))
    return float(np.linalg.norm(near)), float(np.linalg.norm(far))


def _draw_in_cell(gen, cell, target, kernel, budget=200000):
    """Exact draw from the sign-augmented plain law restricted to one cell."""
    d = target.dim
    r_min, r_max = _box_radius_range(cell.w_lo, cell.w_hi)
    env_hi = target.magnitude_envelope(np.array([r_min]))[0]
    poly_hi = (1.0 + r_max) ** kernel.m
    b_lo_abs = 0.0 if cell.b_lo <= 0.0 <= cell.b_hi else min(abs(cell.b_lo), abs(cell.b_hi))
    core_hi = kernel.R * r_max / abs(kernel.a)
    h_max = (1.0 + max(0.0, b_lo_abs - core_hi)) ** (-kernel.p)
    width_b = cell.b_hi - cell.b_lo
    upper = poly_hi * env_hi * width_b * h_max * (1.0 + 1e-9)
    w_lo = np.asarray(cell.w_lo)
    w_span = np.asarray(cell.w_hi) - w_lo
    for _ in range(budget):
        omega = w_lo + gen.random(d) * w_span
        r = float(np.linalg.norm(omega))
        core = kernel.R * r / abs(kernel.a)
        f_lo = float(envelope_cdf(np.array([cell.b_lo]), core, kernel.p)[0])
        f_hi = float(envelope_cdf(np.array([cell.b_hi]), core, kernel.p)[0])
        total = 2.0 * core + 2.0 / (kernel.p - 1.0)
        mass_b = (f_hi - f_lo) * total
        dens = (1.0 + r) ** kernel.m * target.magnitude(omega[None, :])[0] * mass_b
        if gen.random() * upper >= dens:
            continue
        u_b = f_lo + gen.random() * (f_hi - f_lo)
        b = float(envelope_ppf(np.array([u_b]), core, kernel.p)[0])
        b = min(max(b, cell.b_lo), cell.b_hi)
        chi = float(phase_chi(omega[None, :], b, kernel, target)[0])
        if gen.random() < 0.5 * (cell.eta * chi + 1.0):
            return FeatureSample(omega=omega, b=b, eta=cell.eta)
    raise CellSamplingStalled(f"cell {cell.key}: no acceptance in {budget} proposals")


def draw_stratified(
    plan: StratifiedPlan,
    target: SpectralTarget,
    kernel: RepresentationKernel,
    seed: int,
) -> list[list[FeatureSample]]:
    """Per-cell conditional samples; the tail stratum comes last."""
    law = _plain_law(target, kernel)
    groups = []
    for ci, cell in enumerate(plan.cells):
        group = []
        for j in range(cell.count):
            gen = rng.stream(seed, rng.CELL, ci, j)
            group.append(_draw_in_cell(gen, cell, target, kernel))
        groups.append(group)
    kept = plan.kept_keys
    tail_group = []
    for j in range(plan.tail_count):
        gen = rng.stream(seed, rng.TAIL, j)
        accepted = None
        for _ in range(200000):
            omega, b = _draw_one_plain(gen, law, kernel)
            chi = float(phase_chi(omega[None, :], b, kernel, target)[0])
            eta = 1 if gen.random() < 0.5 * (chi + 1.0) else -1
            key = _cell_key(omega, b, eta, plan.b_edges, plan.w_edges)
            if key is None or key not in kept:
                accepted = FeatureSample(omega=omega, b=b, eta=eta)
                break
        if accepted is None:
            raise CellSamplingStalled("tail stratum: no acceptance in 200000 proposals")
        tail_group.append(accepted)
    groups.append(tail_group)
    return groups


# -- stratified periodic path -------------------------------------------------

@dataclass(frozen=True)
class PeriodicCell:
    key: tuple
    atom_index: int          # >= 0 for atomic strata, -1 for density boxes
    w_lo: tuple
    w_hi: tuple
    b_lo: float
    b_hi: float
    eta: int
    measure: float
    count: int


@dataclass(frozen=True)
class PeriodicStratifiedPlan:
    A: float
    bins_b: int
    bins_w_per_axis: int
    cells: tuple[PeriodicCell, ...]
    tail_measure: float
    tail_count: int
    b_edges: np.ndarray
    w_edges: np.ndarray
    pilot_size: int
    pilot: tuple = field(repr=False, default=())

    @property
    def total_count(self) -> int:
        return sum(c.count for c in self.cells) + self.tail_count

    @property
    def kept_keys(self) -> frozenset:
        return frozenset(c.key for c in self.cells)

    def stratum_of(self, sample: FeatureSample, target: SpectralTarget):
        key = _periodic_cell_key(target, sample.omega, sample.b, sample.eta,
                                 self.b_edges, self.w_edges, self.A)
        return key if key is not None and key in self.kept_keys else None


def _periodic_cell_key(target, omega, b, eta, b_edges, w_edges, A):
    b_idx = int(np.searchsorted(b_edges, b % TWO_PI, side="right")) - 1
    b_idx = min(max(b_idx, 0), len(b_edges) - 2)
    if target.atoms:
        dists = [np.linalg.norm(np.asarray(a.omega) - omega) for a in target.atoms]
        k = int(np.argmin(dists))
        if dists[k] > 1e-9 or np.linalg.norm(omega) > A:
            return None
        return ("atom", k, b_idx, int(eta))
    w_idx = []
    for wj in np.atleast_1d(omega):
        if wj < w_edges[0] or wj >= w_edges[-1]:
            return None
        w_idx.append(int(np.searchsorted(w_edges, wj, side="right")) - 1)
    return ("box", *w_idx, b_idx, int(eta))


def build_periodic_stratified_plan(
    target: SpectralTarget,
    kernel: RepresentationKernel,
    n: int,
    eps_smooth: float,
    pilot_size: Optional[int] = None,
    seed: int = 0,
    max_cells: Optional[int] = None,
    keep_min_expected: float = 0.0,
) -> PeriodicStratifiedPlan:
    """Stratification of the periodic law: truncation in omega only.

    Atoms become discrete omega strata; density targets reuse the grid
    boxes on [-A, A]^d.  b is already compact and is binned on [0, 2pi).
    """
    if not kernel.is_periodic:
        raise ValueError("periodic stratified plan requires a periodic kernel")
    if n < 2:
        raise ValueError("n must be at least 2")
    d = target.dim
    A = float(n) ** (2.0 / ((d + 1) * (2.0 + eps_smooth)))
    bins = int(math.ceil(2.0 * float(n) ** (1.0 / (d + 1))))
    b_edges = np.linspace(0.0, TWO_PI, bins + 1)
    w_edges = np.linspace(-A, A, bins + 1)
    pilot_size = 50 * n if pilot_size is None else pilot_size
    max_cells = 2 * n if max_cells is None else max_cells

    law = _periodic_law(target, kernel.m)
    counter = [0, 0]
    pilot = []
    counts: dict = {}
    for i in range(pilot_size):
        gen = rng.stream(seed, rng.PILOT, i)
        omega = law.draw(gen, counter)
        b = TWO_PI * gen.random()
        chi = float(phase_chi(omega[None, :], b, kernel, target)[0])
        eta = 1 if gen.random() < 0.5 * (chi + 1.0) else -1
        pilot.append(FeatureSample(omega=omega, b=b, eta=eta))
        key = _periodic_cell_key(target, omega, b, eta, b_edges, w_edges, A)
        if key is None:
            continue
        counts[key] = counts.get(key, 0) + 1

    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    cells = []
    kept_mass = 0.0
    for key, cnt in ordered:
        if len(cells) >= max_cells:
            break
        measure = cnt / pilot_size
        if measure * n < keep_min_expected:
            break
        if key[0] == "atom":
            _, k, b_idx, eta = key
            cells.append(PeriodicCell(
                key=key, atom_index=k, w_lo=(), w_hi=(),
                b_lo=float(b_edges[b_idx]), b_hi=float(b_edges[b_idx + 1]),
                eta=eta, measure=measure, count=int(math.ceil(measure * n)),
            ))
        else:
            w_idx = key[1:-2]
            b_idx, eta = key[-2], key[-1]
            cells.append(PeriodicCell(
                key=key, atom_index=-1,
                w_lo=tuple(float(w_edges[j]) for j in w_idx),
                w_hi=tuple(float(w_edges[j + 1]) for j in w_idx),
                b_lo=float(b_edges[b_idx]), b_hi=float(b_edges[b_idx + 1]),
                eta=eta, measure=measure, count=int(math.ceil(measure * n)),
            ))
        kept_mass += measure
    tail_measure = max(0.0, 1.0 - kept_mass)
    tail_count = int(math.ceil(tail_measure * n)) if tail_measure > 1e-12 else 0
    plan = PeriodicStratifiedPlan(
        A=A, bins_b=bins, bins_w_per_axis=bins, cells=tuple(cells),
        tail_measure=tail_measure, tail_count=tail_count,
        b_edges=b_edges, w_edges=w_edges, pilot_size=pilot_size,
        pilot=tuple(pilot),
    )
    if plan.total_count > 3 * n + 1:
        raise PlanSampleMismatch(
            f"total count {plan.total_count} exceeds 3n+1 = {3 * n + 1}"
        )
    return plan


def _draw_in_periodic_cell(gen, cell, target, kernel, budget=200000):
    d = target.dim
    if cell.atom_index >= 0:
        omega_fixed = np.asarray(target.atoms[cell.atom_index].omega, dtype=float)
        upper = None
    else:
        r_min, r_max = _box_radius_range(cell.w_lo, cell.w_hi)
        upper = (1.0 + r_max) ** kernel.m * target.magnitude_envelope(np.array([r_min]))[0]
        upper *= 1.0 + 1e-9
        w_lo = np.asarray(cell.w_lo)
        w_span = np.asarray(cell.w_hi) - w_lo
    for _ in range(budget):
        if cell.atom_index >= 0:
            omega = omega_fixed
        else:
            omega = w_lo + gen.random(d) * w_span
            r = float(np.linalg.norm(omega))
            dens = (1.0 + r) ** kernel.m * target.magnitude(omega[None, :])[0]
            if gen.random() * upper >= dens:
                continue
        b = cell.b_lo + gen.random() * (cell.b_hi - cell.b_lo)
        chi = float(phase_chi(omega[None, :], b, kernel, target)[0])
        if gen.random() < 0.5 * (cell.eta * chi + 1.0):
            return FeatureSample(omega=omega.copy(), b=b, eta=cell.eta)
    raise CellSamplingStalled(f"cell {cell.key}: no acceptance in {budget} proposals")


def draw_stratified_periodic(
    plan: PeriodicStratifiedPlan,
    target: SpectralTarget,
    kernel: RepresentationKernel,
    seed: int,
) -> list[list[FeatureSample]]:
    law = _periodic_law(target, kernel.m)
    groups = []
    for ci, cell in enumerate(plan.cells):
        group = []
        for j in range(cell.count):
            gen = rng.stream(seed, rng.CELL, ci, j)
            group.append(_draw_in_periodic_cell(gen, cell, target, kernel))
        groups.append(group)
    kept = plan.kept_keys
    tail_group = []
    for j in range(plan.tail_count):
        gen = rng.stream(seed, rng.TAIL, j)
        accepted = None
        for _ in range(200000):
            omega = law.draw(gen)
            b = TWO_PI * gen.random()
            chi = float(phase_chi(omega[None, :], b, kernel, target)[0])
            eta = 1 if gen.random() < 0.5 * (chi + 1.0) else -1
            key = _periodic_cell_key(target, omega, b, eta, plan.b_edges,
                                     plan.w_edges, plan.A)
            if key is None or key not in kept:
                accepted = FeatureSample(omega=omega, b=b, eta=eta)
                break
        if accepted is None:
            raise CellSamplingStalled("tail stratum: no acceptance in 200000 proposals")
        tail_group.append(accepted)
    groups.append(tail_group)
    return groups


# -- CSV dump -------------------------------------------------------------------

def samples_to_csv(samples, path, dim: int):
    """Dump samples (flat list or per-cell groups) with a stable schema."""
    header = ["index", "cell_id"] + [f"omega_{j + 1}" for j in range(dim)] + ["b", "eta"]
    rows = []
    if samples and isinstance(samples[0], FeatureSample):
        iterator = [(-1, samples)]
    else:
        iterator = list(enumerate(samples))
    idx = 0
    for cell_id, group in iterator:
        for s in group:
            coords = [repr(float(w)) for w in np.atleast_1d(s.omega)]
            rows.append([str(idx), str(cell_id)] + coords + [repr(float(s.b)), str(s.eta)])
            idx += 1
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
