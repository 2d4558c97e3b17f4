"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_backends.py [--n 60] [--repeat 5]

Prints per-kernel best-of-``repeat`` timings for each backend, the speedup,
and an end-to-end ``solve`` comparison.  Both backends must return the same
values; the script checks that before timing.
"""
import argparse
import timeit

import numpy as np

from stochtop import _backend
from stochtop.geometry import build_travel_matrix
from stochtop.heuristic import HeuristicParams, preprocess, run_deterministic, savings_order
from stochtop.instance import random_instance
from stochtop.sampling import ScenarioSampler
from stochtop.search import SearchConfig, solve


def kernel_cases(n: int, seed: int):
    rng = np.random.default_rng(seed)
    inst = random_instance(n, 4, rng)
    d = build_travel_matrix(inst)
    custs = preprocess(inst, d)
    oi, oj, _, _ = savings_order(inst, d, 0.5, custs)
    sol = run_deterministic(inst, HeuristicParams(alpha=0.5), d)
    route = list(max(sol.routes, key=len))
    visited = sol.visited()
    cands = [j for j in custs if j not in visited] or list(custs[:5])
    shuffled = [0, *rng.permutation(np.arange(1, min(n, 40) + 1)).tolist(), n + 1]
    u = np.asarray(inst.rewards)
    packed = ScenarioSampler(d, 0.05, seed).pack(sol.routes)
    return {
        "durations (1000 scenarios)": lambda k: k.durations(seed, *packed, 0, 1000),
        "merge_savings (L_top=20)": lambda k: k.merge_savings(
            oi, oj, list(custs), d, inst.t_max, 20, lambda w: 0),
        "two_opt (40 nodes)": lambda k: k.two_opt(shuffled, d),
        "insertion_deltas": lambda k: k.insertion_deltas(route, cands, d),
        "replacement_moves": lambda k: k.replacement_moves(route, cands, u, d, inst.t_max),
    }, inst


def same(a, b) -> bool:
    if isinstance(a, np.ndarray) and a.dtype == np.float64:
        # libm and numpy exp may differ in the last bit
        return np.allclose(a, b, rtol=1e-14, atol=0)
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    if isinstance(a, (tuple, list)) and a and isinstance(a[0], np.ndarray):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return a == b


def best_of(fn, repeat: int) -> float:
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=60, help="customers in the test instance")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--starts", type=int, default=20, help="K for the end-to-end solve")
    args = parser.parse_args()

    names = sorted(_backend.BACKENDS, key=lambda name: name != "python")
    if "cython" not in names:
        print("compiled backend not built; only the numpy fallback is available")
    cases, inst = kernel_cases(args.n, args.seed)
    print(f"{'kernel':<28}" + "".join(f"{name:>14}" for name in names) + f"{'speedup':>10}")
    for label, case in cases.items():
        outputs = [case(_backend.BACKENDS[name]) for name in names]
        assert all(same(outputs[0], o) for o in outputs[1:]), f"backends disagree on {label}"
        times = [best_of(lambda k=_backend.BACKENDS[name]: case(k), args.repeat)
                 for name in names]
        speedup = f"{times[0] / times[-1]:>9.1f}x" if len(times) > 1 else ""
        print(f"{label:<28}" + "".join(f"{t * 1e6:>12.1f}us" for t in times) + speedup)

    cfg = SearchConfig(starts=args.starts, master_seed=args.seed)
    previous = _backend.name
    times, results = [], []
    try:
        for name in names:
            _backend.set_backend(name)
            res = solve(inst, cfg)
            times.append(res.wall_time)
            results.append((res.best, res.records))
    finally:
        _backend.set_backend(previous)
    assert all(r == results[0] for r in results[1:]), "backends disagree on solve"
    label = f"solve (n={args.n}, K={args.starts})"
    speedup = f"{times[0] / times[-1]:>9.1f}x" if len(times) > 1 else ""
    print(f"{label:<28}" + "".join(f"{t:>13.2f}s" for t in times) + speedup)


if __name__ == "__main__":
    main()
