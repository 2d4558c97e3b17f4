"""Monte Carlo estimates of expected reward and reliability under all-or-nothing rewards."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import calibrate
from .instance import Instance, Solution, route_reward
from .sampling import ScenarioSampler


@dataclass(frozen=True)
class Evaluation:
    expected_reward: float
    per_vehicle_success: tuple[float, ...]
    reliability: float
    scenario_count: int
    scenario_rewards: Optional[np.ndarray] = None

    @property
    def half_width(self) -> float | None:
        """95% normal-approximation half-width of ``expected_reward`` (reporting only)."""
        if self.scenario_rewards is None or self.scenario_count < 2:
            return None
        return 1.96 * float(np.std(self.scenario_rewards, ddof=1)) / math.sqrt(self.scenario_count)


def evaluate(instance: Instance, solution: Solution, sampler: ScenarioSampler, n_scenarios: int,
             first_scenario: int = 0, retain: bool = False, workers: int = 1) -> Evaluation:
    """Estimate the expected reward, per-route success rates and reliability.

    Uses scenarios ``first_scenario .. first_scenario + n_scenarios - 1``.  A
    route earns its reward in a scenario iff its realized duration is at
    most ``t_max``.  Only routes that visit a customer count as vehicles.
    """
    if n_scenarios < 1:
        raise ValueError("need at least one scenario")
    routes = solution.used_routes()
    if not routes:
        zeros = np.zeros(n_scenarios) if retain else None
        return Evaluation(0.0, (), 1.0, n_scenarios, zeros)
    dur = sampler.durations(routes, first_scenario, first_scenario + n_scenarios, workers=workers)
    hits = dur <= instance.t_max
    counts = hits.sum(axis=1)
    rewards = [route_reward(instance, r) for r in routes]
    success = tuple(int(c) / n_scenarios for c in counts)
    expected = sum(u * p for u, p in zip(rewards, success))
    reliability = sum(success) / len(success)
    per_scenario = None
    if retain:
        per_scenario = (hits * np.asarray(rewards)[:, None]).sum(axis=0)
    return Evaluation(expected, success, reliability, n_scenarios, per_scenario)


def route_success_counts(routes, sampler: ScenarioSampler, t_max: float, n_scenarios: int,
                         first_scenario: int = 0) -> np.ndarray:
    dur = sampler.durations(routes, first_scenario, first_scenario + n_scenarios)
    return (dur <= t_max).sum(axis=1)


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def exact_single_arc_reliability(t: float, c: float, t_max: float) -> float:
    """P(T <= t_max) for one lognormal arc with mean ``t`` and variance ``c*t``."""
    if not (t > 0 and t_max > 0) or c < 0:
        raise ValueError("need t > 0, t_max > 0, c >= 0")
    if c == 0:
        return 1.0 if t <= t_max else 0.0
    p = calibrate(t, c)
    return normal_cdf((math.log(t_max) - p.mu) / p.sigma)
