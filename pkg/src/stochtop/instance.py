"""Instances, solutions, the Chao-format parser and the solution validator.

Routes are plain tuples of node indices ``(0, i_1, ..., i_p, n+1)``.  The
binary arc/activation variables of the integer model are never built: a
route that visits at least one customer is a used vehicle, and depot and
flow-balance constraints hold by construction of the sequence.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

Route = tuple[int, ...]

DUPLICATE_VISIT = "duplicate-visit"
BUDGET_EXCEEDED = "budget-exceeded"
MALFORMED_ENDPOINTS = "malformed-endpoints"
TOO_MANY_ROUTES = "too-many-routes"


class ParseError(ValueError):
    """Raised for malformed instance or solution files; carries the line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Instance:
    """A team orienteering instance.

    ``xs``, ``ys`` and ``rewards`` are indexed ``0..n+1``: node 0 is the start
    depot and node ``n+1`` the end depot.
    """

    n: int
    m: int
    t_max: float
    xs: tuple[float, ...]
    ys: tuple[float, ...]
    rewards: tuple[float, ...]
    name: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one customer, got n={self.n}")
        if self.m < 1:
            raise ValueError(f"fleet size must be >= 1, got m={self.m}")
        if not self.t_max > 0:
            raise ValueError(f"budget must be positive, got {self.t_max}")
        size = self.n + 2
        if not (len(self.xs) == len(self.ys) == len(self.rewards) == size):
            raise ValueError(f"expected {size} nodes")
        if self.rewards[0] != 0 or self.rewards[-1] != 0:
            raise ValueError("depot rewards must be zero")
        if any(u < 0 for u in self.rewards):
            raise ValueError("rewards must be nonnegative")

    @property
    def end(self) -> int:
        return self.n + 1

    @property
    def customers(self) -> range:
        return range(1, self.n + 1)

    def reward_array(self) -> np.ndarray:
        return np.asarray(self.rewards, dtype=np.float64)


@dataclass(frozen=True)
class Solution:
    routes: tuple[Route, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "routes", tuple(tuple(int(v) for v in r) for r in self.routes))

    def visited(self) -> set[int]:
        return {v for r in self.routes for v in r[1:-1]}

    def used_routes(self) -> tuple[Route, ...]:
        return tuple(r for r in self.routes if len(r) > 2)


@dataclass
class ValidationReport:
    violations: list[tuple[str, str]] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {code for code, _ in self.violations}


def route_length(matrix, route: Sequence[int]) -> float:
    """Deterministic travel time of a route, summed left to right.

    This summation order is canonical: every feasibility test in the package
    ultimately agrees with it.
    """
    total = 0.0
    for a, b in zip(route[:-1], route[1:]):
        total += float(matrix[a, b])
    return total


def route_reward(instance: Instance, route: Sequence[int]) -> float:
    return sum(instance.rewards[v] for v in route[1:-1])


def solution_reward(instance: Instance, solution: Solution) -> float:
    """Total reward of all visited customers (deterministic objective)."""
    return sum(route_reward(instance, r) for r in solution.routes)


def validate(instance: Instance, solution: Solution, matrix=None) -> ValidationReport:
    """Check endpoints, at-most-once visits, fleet size and the time budget."""
    from .geometry import build_travel_matrix

    if matrix is None:
        matrix = build_travel_matrix(instance)
    report = ValidationReport()
    if len(solution.routes) > instance.m:
        report.violations.append(
            (TOO_MANY_ROUTES, f"{len(solution.routes)} routes for fleet size {instance.m}")
        )
    seen: dict[int, int] = {}
    for k, route in enumerate(solution.routes):
        if len(route) < 2 or route[0] != 0 or route[-1] != instance.end:
            report.violations.append((MALFORMED_ENDPOINTS, f"route {k}: {route}"))
            continue
        in_range = True
        for v in route[1:-1]:
            if not 1 <= v <= instance.n:
                in_range = False
                report.violations.append((MALFORMED_ENDPOINTS, f"route {k}: node {v} is not a customer"))
            elif v in seen:
                report.violations.append(
                    (DUPLICATE_VISIT, f"customer {v} in routes {seen[v]} and {k}")
                )
            else:
                seen[v] = k
        if not in_range:
            continue
        length = route_length(matrix, route)
        if length > instance.t_max:
            report.violations.append(
                (BUDGET_EXCEEDED, f"route {k}: length {length:.6f} > {instance.t_max}")
            )
    return report


# -- file formats -----------------------------------------------------------

def _header_value(tokens: list[str], key: str, lineno: int, kind):
    if len(tokens) != 2 or tokens[0].lower() != key:
        raise ParseError(f"expected '{key} <value>', got {' '.join(tokens)!r}", lineno)
    try:
        return kind(tokens[1])
    except ValueError:
        raise ParseError(f"non-numeric {key} value {tokens[1]!r}", lineno) from None


def parse_instance(text: str | Iterable[str], name: str = "", strict: bool = False) -> Instance:
    """Parse a Chao-style instance.

    The header gives ``n`` (total points, depots included), ``m`` and
    ``tmax``; each following line is ``x y score``.  Nonzero depot scores
    raise in ``strict`` mode and are otherwise zeroed with a warning.
    """
    lines = text.splitlines() if isinstance(text, str) else list(text)
    rows = [(i + 1, ln.split()) for i, ln in enumerate(lines) if ln.strip()]
    if len(rows) < 3:
        raise ParseError("truncated header", len(lines) or 1)
    points = _header_value(rows[0][1], "n", rows[0][0], int)
    m = _header_value(rows[1][1], "m", rows[1][0], int)
    t_max = _header_value(rows[2][1], "tmax", rows[2][0], float)
    body = rows[3:]
    if len(body) < points:
        raise ParseError(f"header declares {points} points but only {len(body)} point lines found",
                         len(lines))
    if points - 2 < 1:
        raise ParseError(f"need at least 3 points, header declares {points}", rows[0][0])
    if m < 1:
        raise ParseError(f"fleet size must be >= 1, got {m}", rows[1][0])
    if not t_max > 0:
        raise ParseError(f"tmax must be positive, got {t_max}", rows[2][0])
    xs, ys, us = [], [], []
    for lineno, tokens in body[:points]:
        if len(tokens) < 3:
            raise ParseError(f"expected 'x y score', got {' '.join(tokens)!r}", lineno)
        try:
            x, y, u = (float(t) for t in tokens[:3])
        except ValueError:
            raise ParseError(f"non-numeric field in {' '.join(tokens)!r}", lineno) from None
        if not all(map(math.isfinite, (x, y, u))):
            raise ParseError("non-finite value", lineno)
        if u < 0:
            raise ParseError(f"negative score {u}", lineno)
        xs.append(x)
        ys.append(y)
        us.append(u)
    for idx, label in ((0, "start"), (points - 1, "end")):
        if us[idx] != 0:
            msg = f"{label} depot has nonzero score {us[idx]}"
            if strict:
                raise ParseError(msg, body[idx][0])
            warnings.warn(msg + "; using 0", stacklevel=2)
            us[idx] = 0.0
    return Instance(n=points - 2, m=m, t_max=t_max, xs=tuple(xs), ys=tuple(ys),
                    rewards=tuple(us), name=name)


def read_instance(path, strict: bool = False) -> Instance:
    path = Path(path)
    name = path.name[:-4] if path.name.endswith(".txt") else path.name
    try:
        return parse_instance(path.read_text(), name=name, strict=strict)
    except ParseError as exc:
        wrapped = ParseError(f"{path}: {exc}")
        wrapped.line = exc.line
        raise wrapped from exc


def format_instance(instance: Instance) -> str:
    out = [f"n {instance.n + 2}", f"m {instance.m}", f"tmax {instance.t_max!r}"]
    for x, y, u in zip(instance.xs, instance.ys, instance.rewards):
        out.append(f"{x!r} {y!r} {u!r}")
    return "\n".join(out) + "\n"


def format_solution(instance: Instance, solution: Solution, matrix=None) -> str:
    from .geometry import build_travel_matrix

    if matrix is None:
        matrix = build_travel_matrix(instance)
    longest = max((route_length(matrix, r) for r in solution.routes), default=0.0)
    lines = [f"reward {solution_reward(instance, solution)!r} length_max {longest!r}"]
    lines += [" ".join(map(str, r)) for r in solution.routes]
    return "\n".join(lines) + "\n"


def parse_solution(text: str) -> Solution:
    rows = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    if not rows or rows[0][1][:1] != ["reward"]:
        raise ParseError("missing 'reward <R> length_max <L>' header", 1)
    routes = []
    for lineno, tokens in rows[1:]:
        try:
            routes.append(tuple(int(t) for t in tokens))
        except ValueError:
            raise ParseError(f"non-integer node index in {' '.join(tokens)!r}", lineno) from None
    return Solution(tuple(routes))


def random_instance(n: int, m: int, rng: np.random.Generator, t_max: float | None = None,
                    size: float = 10.0, integer_rewards: bool = True, name: str = "") -> Instance:
    """Uniform random instance with depots at opposite corners of the square."""
    pts = rng.uniform(0.0, size, size=(n, 2))
    xs = (0.0, *pts[:, 0].tolist(), size)
    ys = (0.0, *pts[:, 1].tolist(), size)
    if integer_rewards:
        u = rng.integers(1, 11, size=n).astype(float) * 5
    else:
        u = rng.uniform(0.5, 50.0, size=n)
    if t_max is None:
        t_max = float(rng.uniform(1.5, 3.0) * size)
    return Instance(n=n, m=m, t_max=t_max, xs=xs, ys=ys, rewards=(0.0, *u.tolist(), 0.0),
                    name=name)
