"""Counter-based travel-time scenarios (common random numbers).

Scenario ``s`` is never stored.  The sample of arc ``{i, j}`` in scenario
``s`` is recomputed from a splitmix64 hash of ``(seed, s, min(i,j),
max(i,j))``, mapped to a uniform and then to a normal deviate by inverse
CDF.  Any caller asking for the same key gets the same value, in any order
and from any thread, which is what makes the scenarios common to every
candidate of a run.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _backend
from . import _purepy
from .geometry import calibrate


@dataclass(frozen=True)
class ScenarioSampler:
    matrix: np.ndarray
    variability: float
    master_seed: int = 0
    _params: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.variability < 0:
            raise ValueError("variability must be nonnegative")

    def arc_params(self, i: int, j: int) -> tuple[int, int, float, float, float]:
        """``(lo, hi, t, mu, sigma)`` for arc ``{i, j}``; zero-length arcs get sigma 0."""
        lo, hi = (i, j) if i < j else (j, i)
        key = (lo, hi)
        cached = self._params.get(key)
        if cached is None:
            t = float(self.matrix[lo, hi])
            if t > 0 and self.variability > 0:
                p = calibrate(t, self.variability)
                cached = (lo, hi, t, p.mu, p.sigma)
            else:
                cached = (lo, hi, t, 0.0, 0.0)
            self._params[key] = cached
        return cached

    def sample_arc(self, s: int, i: int, j: int) -> float:
        lo, hi, t, mu, sigma = self.arc_params(i, j)
        return _purepy.sample_value(self.master_seed, s, lo, hi, t, mu, sigma)

    def arc_samples(self, i: int, j: int, s_start: int, s_stop: int) -> np.ndarray:
        lo, hi, t, mu, sigma = self.arc_params(i, j)
        return _backend.kernels.durations(
            self.master_seed, [lo], [hi], [t], [mu], [sigma], [0, 1], s_start, s_stop
        )[0]

    def pack(self, routes: Sequence[Sequence[int]]):
        """Flatten the arcs of ``routes`` into kernel arrays."""
        params = [self.arc_params(a, b) for r in routes for a, b in zip(r[:-1], r[1:])]
        offsets = np.zeros(len(routes) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([max(len(r) - 1, 0) for r in routes])
        if params:
            lo, hi, t, mu, sigma = (np.asarray(col) for col in zip(*params))
        else:
            lo = hi = np.empty(0, np.int64)
            t = mu = sigma = np.empty(0, np.float64)
        return lo, hi, t, mu, sigma, offsets

    def durations(self, routes: Sequence[Sequence[int]], s_start: int, s_stop: int,
                  workers: int = 1, chunk: int = 2048) -> np.ndarray:
        """Realized duration of each route in scenarios ``s_start..s_stop-1``.

        Shape ``(len(routes), s_stop - s_start)``.  With ``workers > 1`` the
        scenario range is split into chunks computed on threads; each entry
        depends only on its own key, so the result is identical.
        """
        packed = self.pack(routes)
        kernels = _backend.kernels
        if workers <= 1 or s_stop - s_start <= chunk:
            return kernels.durations(self.master_seed, *packed, s_start, s_stop)
        bounds = list(range(s_start, s_stop, chunk)) + [s_stop]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda ab: kernels.durations(self.master_seed, *packed, ab[0], ab[1]),
                zip(bounds[:-1], bounds[1:]),
            ))
        return np.concatenate(parts, axis=1)

    def route_duration(self, route: Sequence[int], s: int) -> float:
        """Realized duration of one route in scenario ``s``."""
        total = 0.0
        for a, b in zip(route[:-1], route[1:]):
            total += self.sample_arc(s, a, b)
        return total
