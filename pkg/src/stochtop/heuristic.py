"""Savings-based construction and local search for start-to-end routes.

Each phase ranks its admissible moves by a deterministic merit order and
applies one of the top ``l_top`` entries, chosen by ``pick(w)``.  With
``pick=None`` (or ``l_top=1``) the head of the list is always taken, which
is the deterministic heuristic; ``randomized.build_candidate`` supplies a
seeded ``pick`` instead.  Every budget test is exact with respect to the
canonical left-to-right route length.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import _backend
from .instance import Instance, Route, Solution

EPSILON = 1e-9
DEFAULT_ALPHA_GRID = (0.3, 0.4, 0.5, 0.6, 0.7)

Picker = Optional[Callable[[int], int]]


@dataclass(frozen=True)
class SavingsEntry:
    i: int
    j: int
    saving: float
    score: float


@dataclass(frozen=True)
class HeuristicParams:
    """Either a single ``alpha`` or a grid; ``final_two_opt`` adds the cleanup pass."""

    alpha: float | None = None
    alpha_grid: tuple[float, ...] | None = None
    epsilon: float = EPSILON
    final_two_opt: bool = True

    def __post_init__(self):
        if (self.alpha is None) == (self.alpha_grid is None):
            raise ValueError("give exactly one of alpha and alpha_grid")
        for a in self.grid():
            if not 0 < a < 1:
                raise ValueError(f"alpha must lie in (0, 1), got {a}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def grid(self) -> tuple[float, ...]:
        return (self.alpha,) if self.alpha is not None else tuple(self.alpha_grid)


def _choose(window_len: int, pick: Picker) -> int:
    if pick is None or window_len == 1:
        return 0
    return pick(window_len)


def _fits(approx: float, t_max: float, seq: Callable[[], Sequence[int]], dist) -> bool:
    tol = _backend._purepy.BOUNDARY_TOL * max(1.0, t_max)
    if approx <= t_max - tol:
        return True
    if approx > t_max + tol:
        return False
    return _backend.kernels.route_length(np.asarray(seq(), dtype=np.int64), dist) <= t_max


def length_of(route: Sequence[int], dist) -> float:
    return float(_backend.kernels.route_length(np.asarray(route, dtype=np.int64), dist))


# -- construction -------------------------------------------------------------

def preprocess(instance: Instance, matrix) -> list[int]:
    """Customers whose dummy route ``(0, i, n+1)`` fits the budget."""
    end = instance.end
    return [i for i in instance.customers if length_of((0, i, end), matrix) <= instance.t_max]


def savings_order(instance: Instance, matrix, alpha: float, customers: Sequence[int]):
    """Ordered pairs ranked by non-increasing combined score, ties by ``(i, j)``.

    Returns ``(order_i, order_j, saving, score)`` as parallel arrays.
    """
    cust = np.asarray(customers, dtype=np.intp)
    if len(cust) < 2:
        empty = np.empty(0, np.intp)
        return empty, empty, np.empty(0), np.empty(0)
    end = instance.end
    u = instance.reward_array()
    ii, jj = np.meshgrid(cust, cust, indexing="ij")
    off = ii != jj
    ii = ii[off]
    jj = jj[off]
    saving = (matrix[ii, end] + matrix[0, jj]) - matrix[ii, jj]
    score = alpha * saving + (1.0 - alpha) * (u[ii] + u[jj])
    order = np.lexsort((jj, ii, -score))
    return ii[order], jj[order], saving[order], score[order]


def savings_entries(instance: Instance, matrix, alpha: float) -> list[SavingsEntry]:
    oi, oj, sv, sc = savings_order(instance, matrix, alpha, preprocess(instance, matrix))
    return [SavingsEntry(int(i), int(j), float(a), float(b)) for i, j, a, b in zip(oi, oj, sv, sc)]


def trim_routes(instance: Instance, routes: list[Route], matrix) -> list[Route]:
    """Keep the ``m`` best routes by reward, ties by shorter length."""
    u = instance.rewards
    keyed = sorted(
        ((-sum(u[v] for v in r[1:-1]), length_of(r, matrix), r) for r in routes)
    )
    return [r for _, _, r in keyed[: instance.m]]


def savings_construct(instance: Instance, matrix, alpha: float, l_top: int = 1,
                      pick: Picker = None, customers: Sequence[int] | None = None,
                      order=None) -> Solution:
    """Merge dummy routes along the savings list, then keep the best ``m``."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if customers is None:
        customers = preprocess(instance, matrix)
    if not customers:
        return Solution(())
    if order is None:
        order = savings_order(instance, matrix, alpha, customers)
    oi, oj = order[0], order[1]
    merged = _backend.kernels.merge_savings(oi, oj, list(customers), matrix,
                                            instance.t_max, l_top, pick)
    routes = [(0, *members, instance.end) for members in merged]
    return Solution(tuple(trim_routes(instance, routes, matrix)))


# -- local search -------------------------------------------------------------

def two_opt(route: Sequence[int], matrix) -> Route:
    """First-improvement 2-opt; only strictly shortening moves are taken."""
    if len(route) < 4:
        return tuple(route)
    return tuple(_backend.kernels.two_opt(list(route), matrix))


def unvisited_admissible(instance: Instance, solution: Solution, matrix) -> list[int]:
    visited = solution.visited()
    return [j for j in preprocess(instance, matrix) if j not in visited]


def greedy_reinsertion(instance: Instance, solution: Solution, unvisited: Sequence[int], matrix,
                       epsilon: float = EPSILON, l_top: int = 1, pick: Picker = None,
                       ranking: str = "node") -> tuple[Solution, list[int]]:
    """Insert unvisited customers by benefit/cost score until none fits.

    Moves are ranked by ``u_j / max(dt, epsilon)`` (descending), then by
    smaller ``dt``, then by ``(route, gap, node)``.  ``ranking="node"`` lists
    one entry per customer (its cheapest feasible gap over all routes);
    ``ranking="triple"`` lists every feasible ``(node, route, gap)``.  The
    head of both lists is the same move.
    """
    if ranking not in ("node", "triple"):
        raise ValueError(f"unknown ranking {ranking!r}")
    routes = [list(r) for r in solution.routes]
    cands = np.asarray(sorted(unvisited), dtype=np.intp)
    if not routes or len(cands) == 0:
        return solution, [int(c) for c in cands]
    u = instance.reward_array()
    t_max = instance.t_max
    active = np.ones(len(cands), dtype=bool)
    lengths = [length_of(r, matrix) for r in routes]
    deltas = [_backend.kernels.insertion_deltas(r, cands, matrix) for r in routes]
    tol = _backend._purepy.BOUNDARY_TOL * max(1.0, t_max)
    while active.any():
        per_route = []
        for k, (route, dl) in enumerate(zip(routes, deltas)):
            approx = lengths[k] + dl
            ok = (approx <= t_max - tol) & active[:, None]
            edge = active[:, None] & (approx > t_max - tol) & (approx <= t_max + tol)
            for x, g in zip(*np.nonzero(edge)):
                j = int(cands[x])
                ok[x, g] = _fits(approx[x, g], t_max,
                                 lambda: route[: g + 1] + [j] + route[g + 1:], matrix)
            per_route.append(ok)
        if ranking == "node":
            best_dt = np.full((len(routes), len(cands)), np.inf)
            best_gap = np.zeros((len(routes), len(cands)), dtype=np.intp)
            for k, ok in enumerate(per_route):
                masked = np.where(ok, deltas[k], np.inf)
                best_gap[k] = np.argmin(masked, axis=1)
                best_dt[k] = masked[np.arange(len(cands)), best_gap[k]]
            best_k = np.argmin(best_dt, axis=0)
            xs = np.nonzero(np.isfinite(best_dt[best_k, np.arange(len(cands))]))[0]
            moves = [(best_dt[best_k[x], x], int(best_k[x]), int(best_gap[best_k[x], x]), int(x))
                     for x in xs]
        else:
            moves = [(deltas[k][x, g], k, int(g), int(x))
                     for k, ok in enumerate(per_route) for x, g in zip(*np.nonzero(ok))]
        if not moves:
            break
        dt = np.array([mv[0] for mv in moves])
        score = u[cands[[mv[3] for mv in moves]]] / np.maximum(dt, epsilon)
        order = np.lexsort((
            cands[[mv[3] for mv in moves]],
            [mv[2] for mv in moves],
            [mv[1] for mv in moves],
            dt,
            -score,
        ))
        window = order[: l_top]
        dt_, k, g, x = moves[int(window[_choose(len(window), pick)])]
        j = int(cands[x])
        routes[k].insert(g + 1, j)
        lengths[k] = length_of(routes[k], matrix)
        active[x] = False
        deltas[k] = _backend.kernels.insertion_deltas(routes[k], cands, matrix)
    remaining = [int(c) for c, a in zip(cands, active) if a]
    return Solution(tuple(tuple(r) for r in routes)), remaining


def replacement_moves(instance: Instance, solution: Solution, unvisited: Sequence[int], matrix,
                      l_top: int = 1, pick: Picker = None) -> tuple[Solution, list[int]]:
    """Swap a visited customer for a more rewarding unvisited one until no swap helps.

    Moves are ranked by gain ``u_j - u_h`` (descending), then by the length
    of the resulting route, then by ``(route, position of h, j)``.  The
    removed customer returns to the unvisited pool.
    """
    routes = [list(r) for r in solution.routes]
    pool = sorted(unvisited)
    u = instance.reward_array()
    while pool and routes:
        cands = np.asarray(pool, dtype=np.intp)
        cols = {"gain": [], "len": [], "k": [], "h": [], "j": [], "g": []}
        for k, route in enumerate(routes):
            hp, js, gs, new_len = _backend.kernels.replacement_moves(route, cands, u, matrix,
                                                                     instance.t_max)
            if len(hp) == 0:
                continue
            hs = np.asarray(route)[hp]
            cols["gain"].append(u[js] - u[hs])
            cols["len"].append(new_len)
            cols["k"].append(np.full(len(hp), k))
            cols["h"].append(hp)
            cols["j"].append(js)
            cols["g"].append(gs)
        if not cols["gain"]:
            break
        c = {key: np.concatenate(v) for key, v in cols.items()}
        order = np.lexsort((c["j"], c["h"], c["k"], c["len"], -c["gain"]))
        window = order[: l_top]
        w = int(window[_choose(len(window), pick)])
        k, hp, j, g = int(c["k"][w]), int(c["h"][w]), int(c["j"][w]), int(c["g"][w])
        route = routes[k]
        h = route.pop(hp)
        route.insert(g + 1, j)
        pool.remove(j)
        pool.append(h)
        pool.sort()
    return Solution(tuple(tuple(r) for r in routes)), pool


# -- pipelines ----------------------------------------------------------------

def run_pipeline(instance: Instance, matrix, alpha: float, epsilon: float = EPSILON,
                 l_top: int = 1, pick: Picker = None, ranking: str = "node",
                 final_two_opt: bool = True, customers: Sequence[int] | None = None,
                 order=None) -> Solution:
    """construct -> trim -> 2-opt -> reinsertion -> replacement [-> 2-opt]."""
    if customers is None:
        customers = preprocess(instance, matrix)
    sol = savings_construct(instance, matrix, alpha, l_top, pick, customers, order)
    sol = Solution(tuple(two_opt(r, matrix) for r in sol.routes))
    visited = sol.visited()
    unvisited = [j for j in customers if j not in visited]
    sol, unvisited = greedy_reinsertion(instance, sol, unvisited, matrix, epsilon, l_top, pick,
                                        ranking)
    sol, unvisited = replacement_moves(instance, sol, unvisited, matrix, l_top, pick)
    if final_two_opt:
        sol = Solution(tuple(two_opt(r, matrix) for r in sol.routes))
    return sol


def total_length(solution: Solution, matrix) -> float:
    return sum(length_of(r, matrix) for r in solution.routes)


def run_deterministic(instance: Instance, params: HeuristicParams, matrix=None) -> Solution:
    """Deterministic heuristic; over a grid, keep the best final solution.

    Grid candidates are compared by reward, then by smaller total length;
    remaining ties keep the earliest grid value.
    """
    from .geometry import build_travel_matrix

    if matrix is None:
        matrix = build_travel_matrix(instance)
    customers = preprocess(instance, matrix)
    best = best_key = None
    for alpha in params.grid():
        sol = run_pipeline(instance, matrix, alpha, params.epsilon,
                           final_two_opt=params.final_two_opt, customers=customers)
        reward = sum(instance.rewards[v] for r in sol.routes for v in r[1:-1])
        key = (reward, -total_length(sol, matrix))
        if best is None or key > best_key:
            best, best_key = sol, key
    return best
