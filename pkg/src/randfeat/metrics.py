"""Sobolev error estimation over boxes and convergence-rate fitting.

The H^m error is estimated by scrambled-Sobol quadrature with a fixed
scramble seed, summing |D^alpha (f - f_n)|^2 over all multi-indices of
order <= m and scaling by the box measure.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .domain import DomainBox
from .errors import InsufficientData, InvalidErrorValue
from .network import TwoLayerNetwork, empty_network, evaluate
from .target import SpectralTarget


@dataclass(frozen=True)
class RatePoint:
    n: int
    error: float
    seed: int


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual: float


def multi_indices(d: int, max_order: int) -> list[tuple[int, ...]]:
    """All alpha in N^d with |alpha| <= max_order, ordered by (|alpha|, alpha)."""
    out = [()]
    for _ in range(d):
        out = [idx + (k,) for idx in out for k in range(max_order + 1)]
    out = [idx for idx in out if sum(idx) <= max_order]
    out.sort(key=lambda idx: (sum(idx), idx))
    return out


def qmc_points(box: DomainBox, n_quad: int, seed: int = 0) -> np.ndarray:
    """n_quad scrambled-Sobol points scaled into the box."""
    sob = qmc.Sobol(d=box.dim, scramble=True, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        unit = sob.random(n_quad)
    lo = np.asarray(box.lower)
    hi = np.asarray(box.upper)
    return lo + unit * (hi - lo)


def sobolev_error(
    net: TwoLayerNetwork,
    target: SpectralTarget,
    m: int,
    box: DomainBox,
    n_quad: int,
    seed: int = 0,
) -> tuple[float, float]:
    """QMC estimate of ||f - f_n||_{H^m(box)} and a delta-method std error."""
    pts = qmc_points(box, n_quad, seed)
    per_point = np.zeros(len(pts))
    for alpha in multi_indices(box.dim, m):
        diff = target.eval(alpha, pts) - evaluate(net, alpha, pts)
        per_point += diff * diff
    sq = box.measure * float(np.mean(per_point))
    est = math.sqrt(max(sq, 0.0))
    if est == 0.0:
        return 0.0, 0.0
    sq_std = box.measure * float(np.std(per_point, ddof=1)) / math.sqrt(len(pts))
    return est, sq_std / (2.0 * est)


def smoothness_bound_check(
    target: SpectralTarget,
    m: int,
    box: DomainBox,
    tol: float = 1e-9,
    n_quad: int = 4096,
) -> bool:
    """||f||_{H^m(box)} <= C(m) |box|^(1/2) ||f||_{B^m} + tol.

    C(m) = sqrt(#{alpha : |alpha| <= m}), from summing the per-alpha
    bounds ||D^alpha f||_{L^2} <= |box|^(1/2) ||f||_{B^m}.
    """
    left, _ = sobolev_error(empty_network(box.dim), target, m, box, n_quad)
    c_m = math.sqrt(len(multi_indices(box.dim, m)))
    right = c_m * math.sqrt(box.measure) * target.barron_norm(float(m))
    return left <= right + tol


def rate_fit(points: list[RatePoint], aggregate: str = "median") -> RateFit:
    """Least-squares slope of log(error) against log(n), errors aggregated per n."""
    if aggregate not in ("median", "mean"):
        raise ValueError("aggregate must be 'median' or 'mean'")
    for pt in points:
        if not pt.error > 0.0:
            raise InvalidErrorValue(f"nonpositive error {pt.error} at n={pt.n}")
    by_n: dict[int, list[float]] = {}
    for pt in points:
        by_n.setdefault(pt.n, []).append(pt.error)
    if len(by_n) < 2:
        raise InsufficientData("rate fit needs at least two distinct n")
    ns = sorted(by_n)
    agg = np.median if aggregate == "median" else np.mean
    log_n = np.log([float(n) for n in ns])
    log_e = np.log([float(agg(by_n[n])) for n in ns])
    slope, intercept = np.polyfit(log_n, log_e, 1)
    resid = log_e - (slope * log_n + intercept)
    return RateFit(
        slope=float(slope),
        intercept=float(intercept),
        residual=float(np.sqrt(np.mean(resid ** 2))),
    )
