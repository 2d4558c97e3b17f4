"""Randomized multi-start simheuristic with reliability-aware selection."""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .evaluation import Evaluation
from .geometry import build_travel_matrix
from .heuristic import DEFAULT_ALPHA_GRID, EPSILON, length_of, preprocess, savings_order
from .instance import Instance, Solution, route_reward, solution_reward
from .randomized import CandidateKey, build_candidate
from .sampling import ScenarioSampler


@dataclass(frozen=True)
class SearchConfig:
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHA_GRID
    starts: int = 300
    l_top: int = 20
    scenarios: int = 1000
    reliability_threshold: float = 0.8
    variability: float = 0.05
    epsilon: float = EPSILON
    master_seed: int = 0
    ranking: str = "node"
    keep_top: int = 10

    def __post_init__(self):
        if not self.alpha_grid or any(not 0 < a < 1 for a in self.alpha_grid):
            raise ValueError("alpha grid must be a non-empty subset of (0, 1)")
        if self.starts < 1 or self.l_top < 1 or self.scenarios < 1:
            raise ValueError("starts, l_top and scenarios must be >= 1")
        if not 0 < self.reliability_threshold < 1:
            raise ValueError("reliability threshold must lie in (0, 1)")
        if self.variability < 0:
            raise ValueError("variability must be nonnegative")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.ranking not in ("node", "triple"):
            raise ValueError(f"unknown ranking {self.ranking!r}")

    def keys(self) -> list[CandidateKey]:
        return [CandidateKey(ai, q, self.l_top, alpha)
                for ai, alpha in enumerate(self.alpha_grid)
                for q in range(1, self.starts + 1)]


@dataclass(frozen=True)
class CandidateRecord:
    key: CandidateKey
    evaluation: Evaluation
    deterministic_reward: float
    max_route_length: float
    solution: Optional[Solution] = None

    @property
    def expected_reward(self) -> float:
        return self.evaluation.expected_reward

    @property
    def reliability(self) -> float:
        return self.evaluation.reliability

    def summary(self) -> "CandidateRecord":
        return replace(self, solution=None)


@dataclass
class SolveResult:
    best: CandidateRecord
    records: list[CandidateRecord]
    wall_time: float = 0.0
    backend: str = field(default_factory=lambda: _backend.name)

    def __iter__(self):
        yield self.best
        yield self.records


def select_best(records: Sequence[CandidateRecord], beta: float) -> CandidateRecord:
    """Best expected reward among records with reliability >= ``beta``.

    Ties go to higher reliability.  If no record reaches ``beta`` the most
    reliable one wins, ties to higher expected reward.  Remaining ties go to
    the smallest key.
    """
    if not records:
        raise ValueError("no candidates to select from")
    qualified = [r for r in records if r.reliability >= beta]
    if qualified:
        return min(qualified, key=lambda r: (-r.expected_reward, -r.reliability, r.key))
    return min(records, key=lambda r: (-r.reliability, -r.expected_reward, r.key))


class _Evaluator:
    """Per-route success counts under the run's scenarios, memoized by route.

    With common random numbers a route's counts do not depend on which
    candidate it belongs to, so each distinct route is simulated once.
    """

    def __init__(self, instance: Instance, sampler: ScenarioSampler, n_scenarios: int):
        self.instance = instance
        self.sampler = sampler
        self.n = n_scenarios
        self.counts: dict[tuple[int, ...], int] = {}

    def __call__(self, solution: Solution) -> Evaluation:
        routes = solution.used_routes()
        if not routes:
            return Evaluation(0.0, (), 1.0, self.n)
        todo = [r for r in dict.fromkeys(routes) if r not in self.counts]
        if todo:
            dur = self.sampler.durations(todo, 0, self.n)
            for r, c in zip(todo, (dur <= self.instance.t_max).sum(axis=1)):
                self.counts[r] = int(c)
        success = tuple(self.counts[r] / self.n for r in routes)
        rewards = [route_reward(self.instance, r) for r in routes]
        expected = sum(u * p for u, p in zip(rewards, success))
        return Evaluation(expected, success, sum(success) / len(success), self.n)


class _Runner:
    def __init__(self, instance: Instance, config: SearchConfig):
        self.instance = instance
        self.config = config
        self.matrix = build_travel_matrix(instance)
        self.sampler = ScenarioSampler(self.matrix, config.variability, config.master_seed)
        self.customers = preprocess(instance, self.matrix)
        self.evaluator = _Evaluator(instance, self.sampler, config.scenarios)
        self._orders: dict[float, tuple] = {}

    def order(self, alpha: float):
        if alpha not in self._orders:
            self._orders[alpha] = savings_order(self.instance, self.matrix, alpha, self.customers)
        return self._orders[alpha]

    def run(self, key: CandidateKey) -> CandidateRecord:
        cfg = self.config
        sol = build_candidate(self.instance, self.matrix, key, cfg.master_seed, cfg.epsilon,
                              cfg.ranking, self.customers, self.order(key.alpha))
        return CandidateRecord(
            key=key,
            evaluation=self.evaluator(sol),
            deterministic_reward=solution_reward(self.instance, sol),
            max_route_length=max((length_of(r, self.matrix) for r in sol.routes), default=0.0),
            solution=sol,
        )


_worker: _Runner | None = None


def _init_worker(instance, config, backend):
    global _worker
    _backend.set_backend(backend)
    _worker = _Runner(instance, config)


def _run_chunk(keys):
    return [_worker.run(k) for k in keys]


def _chunks(items, n_chunks):
    size = max(1, -(-len(items) // n_chunks))
    return [items[i:i + size] for i in range(0, len(items), size)]


def solve(instance: Instance, config: SearchConfig, workers: int = 1) -> SolveResult:
    """Generate, simulate and select among ``|alpha_grid| * starts`` candidates.

    The result does not depend on ``workers``: each candidate is a pure
    function of its key and records are reduced in key order.
    """
    t0 = time.monotonic()
    keys = config.keys()
    if workers <= 1:
        runner = _Runner(instance, config)
        records = [runner.run(k) for k in keys]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(instance, config, _backend.name)) as pool:
            records = [rec for part in pool.map(_run_chunk, _chunks(keys, 4 * workers))
                       for rec in part]
    records.sort(key=lambda r: r.key)
    best = select_best(records, config.reliability_threshold)
    ranked = sorted(records, key=lambda r: (-r.expected_reward, r.key))
    keep = {r.key for r in ranked[: config.keep_top]} | {best.key}
    records = [r if r.key in keep else r.summary() for r in records]
    return SolveResult(best=best, records=records, wall_time=time.monotonic() - t0)
