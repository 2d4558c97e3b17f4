"""Top-L randomized candidate generation.

Each candidate runs the same phases as the deterministic heuristic, but
every randomized phase draws its move uniformly from the first ``l_top``
entries of the ranked admissible list.  Draws come from a generator seeded
by ``(master_seed, alpha_index, q, l_top)`` so a candidate can be rebuilt
anywhere, in any order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, TypeVar

import numpy as np

from .heuristic import EPSILON, run_pipeline
from .instance import Instance, Solution

T = TypeVar("T")


@dataclass(frozen=True, order=True)
class CandidateKey:
    alpha_index: int
    q: int
    l_top: int
    alpha: float

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("start index q is 1-based")
        if self.l_top < 1:
            raise ValueError("l_top must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")

    def rng(self, master_seed: int) -> np.random.Generator:
        entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF, self.alpha_index, self.q, self.l_top]
        return np.random.default_rng(np.random.SeedSequence(entropy))


def top_l_pick(moves: Sequence[T], l_top: int, rng: np.random.Generator) -> T:
    """Uniform draw among the first ``min(l_top, len(moves))`` moves.

    A window of one is returned without consuming a draw.
    """
    if not moves:
        raise ValueError("no admissible move to pick from")
    width = min(l_top, len(moves))
    if width == 1:
        return moves[0]
    return moves[int(rng.integers(width))]


def make_picker(rng: np.random.Generator):
    return lambda width: int(rng.integers(width))


def build_candidate(instance: Instance, matrix, key: CandidateKey, master_seed: int = 0,
                    epsilon: float = EPSILON, ranking: str = "node",
                    customers: Sequence[int] | None = None, order=None) -> Solution:
    """One randomized multi-start candidate for ``key``.

    ``customers`` and ``order`` (the admissible set and the savings list for
    ``key.alpha``) may be passed in to share them across starts.
    """
    pick = make_picker(key.rng(master_seed))
    return run_pipeline(instance, matrix, key.alpha, epsilon, l_top=key.l_top, pick=pick,
                        ranking=ranking, final_two_opt=True, customers=customers, order=order)
