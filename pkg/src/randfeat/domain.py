"""Axis-aligned experiment domains."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DomainBox:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower/upper must be 1-D and of equal length")
        if not np.all(lo < hi):
            raise ValueError("lower bounds must be strictly below upper bounds")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def measure(self) -> float:
        return float(np.prod(np.asarray(self.upper) - np.asarray(self.lower)))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.asarray(self.upper) - np.asarray(self.lower)))

    @property
    def center(self) -> np.ndarray:
        """Recentering offset: the box is translated by -center before sampling."""
        return 0.5 * (np.asarray(self.upper) + np.asarray(self.lower))

    @property
    def radius(self) -> float:
        """Max Euclidean norm over the recentered box (paper's R <= diam)."""
        return float(np.linalg.norm(0.5 * (np.asarray(self.upper) - np.asarray(self.lower))))


def box(lower, upper) -> DomainBox:
    return DomainBox(tuple(float(v) for v in np.atleast_1d(lower)),
                     tuple(float(v) for v in np.atleast_1d(upper)))


def symmetric_box(dim: int, half_width: float = 1.0) -> DomainBox:
    return box([-half_width] * dim, [half_width] * dim)
