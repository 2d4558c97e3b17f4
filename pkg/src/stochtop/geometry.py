"""Euclidean travel times and lognormal calibration."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .instance import Instance


def build_travel_matrix(instance: Instance) -> np.ndarray:
    """Dense ``(n+2, n+2)`` matrix of Euclidean travel times (read-only)."""
    xs = np.asarray(instance.xs, dtype=np.float64)
    ys = np.asarray(instance.ys, dtype=np.float64)
    dx = xs[:, None] - xs[None, :]
    dy = ys[:, None] - ys[None, :]
    times = np.sqrt(dx * dx + dy * dy)
    times.setflags(write=False)
    return times


@dataclass(frozen=True)
class LognormalParams:
    mu: float
    sigma_sq: float

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_sq)

    def mean(self) -> float:
        return math.exp(self.mu + self.sigma_sq / 2)

    def variance(self) -> float:
        return math.expm1(self.sigma_sq) * math.exp(2 * self.mu + self.sigma_sq)


def calibrate(t: float, c: float) -> LognormalParams:
    """Lognormal parameters with mean ``t`` and variance ``c * t``."""
    if not t > 0:
        raise ValueError(f"travel time must be positive, got {t}")
    if c < 0:
        raise ValueError(f"variability must be nonnegative, got {c}")
    sigma_sq = math.log1p(c / t)
    return LognormalParams(mu=math.log(t) - sigma_sq / 2, sigma_sq=sigma_sq)
