"""Command line entry point: ``stochtop solve|bench|validate|eval``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import _backend
from .bench import (DEFAULT_L_TOP, FAST_PROFILE, aggregate_by_family, coverage, family_to_csv,
                    format_family_table, load_references, results_to_csv, run_batch,
                    run_instance)
from .evaluation import evaluate
from .geometry import build_travel_matrix
from .heuristic import DEFAULT_ALPHA_GRID, EPSILON
from .instance import ParseError, format_solution, parse_solution, read_instance, validate
from .sampling import ScenarioSampler
from .search import SearchConfig

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha-grid", type=_float_list, default=None,
                   help="savings blend values to screen (default 0.3,0.4,0.5,0.6,0.7)")
    p.add_argument("--k", type=int, default=None, help="randomized starts per alpha (default 300)")
    p.add_argument("--ltop", type=_int_list, default=None,
                   help="candidate-list widths to try (default 20,25,30)")
    p.add_argument("--scenarios", type=int, default=None, help="scenarios per candidate (default 1000)")
    p.add_argument("--beta", type=float, default=0.8, help="reliability threshold")
    p.add_argument("--c", type=float, default=0.05, help="travel-time variability (Var = c * t)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--epsilon", type=float, default=EPSILON)
    p.add_argument("--n-final", type=int, default=10_000,
                   help="fresh scenarios to re-simulate the winner with (0 disables)")
    p.add_argument("--ranking", choices=("node", "triple"), default="node",
                   help="reinsertion move list: one entry per node, or every (node, route, gap)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--backend", choices=sorted(_backend.BACKENDS), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stochtop",
                     description="Stochastic team orienteering with lognormal travel times.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("instance")
    _search_flags(p)
    p.add_argument("--out", help="write a one-row results CSV here")
    p.add_argument("--solution-out", help="write the winning routes here")

    p = sub.add_parser("bench", help="solve every *.txt instance in a directory")
    p.add_argument("directory")
    p.add_argument("--refs", help="reference CSV (instance_id,ref_expected_reward,ref_reliability);"
                                  " 'bundled' uses the shipped table")
    _search_flags(p)
    p.add_argument("--report", choices=("family", "instance", "both"), default="both")
    p.add_argument("--fast", action="store_true", help="K=50, N=500 unless overridden")
    p.add_argument("--instance-workers", type=int, default=1,
                   help="instances solved concurrently")
    p.add_argument("--out", help="instance report CSV path")
    p.add_argument("--family-out", help="family report CSV path")

    p = sub.add_parser("validate", help="check a solution file against an instance")
    p.add_argument("instance")
    p.add_argument("solution")

    p = sub.add_parser("eval", help="re-simulate a fixed solution")
    p.add_argument("instance")
    p.add_argument("solution")
    p.add_argument("--c", type=float, default=0.05)
    p.add_argument("--scenarios", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--first-scenario", type=int, default=0)
    return parser


def _config(args, fast: bool = False) -> SearchConfig:
    starts = args.k if args.k is not None else (FAST_PROFILE["starts"] if fast else 300)
    scenarios = (args.scenarios if args.scenarios is not None
                 else (FAST_PROFILE["scenarios"] if fast else 1000))
    try:
        return SearchConfig(
            alpha_grid=args.alpha_grid or DEFAULT_ALPHA_GRID,
            starts=starts,
            scenarios=scenarios,
            reliability_threshold=args.beta,
            variability=args.c,
            epsilon=args.epsilon,
            master_seed=args.seed,
            ranking=args.ranking,
        )
    except ValueError as exc:
        raise UsageError(str(exc))


def _l_tops(args) -> tuple[int, ...]:
    l_tops = args.ltop or DEFAULT_L_TOP
    if any(l < 1 for l in l_tops):
        raise UsageError("--ltop values must be >= 1")
    if args.n_final < 0 or args.workers < 1:
        raise UsageError("--n-final must be >= 0 and --workers >= 1")
    return l_tops


def _cmd_solve(args) -> int:
    config, l_tops = _config(args), _l_tops(args)
    instance = read_instance(args.instance)
    result = run_instance(args.instance, config, l_tops, args.n_final, args.workers, instance)
    line = (f"{result.instance_id}: E[R]={result.expected_reward:.2f} "
            f"Rel={result.reliability:.3f} det={result.deterministic_reward:g} "
            f"ltop={result.l_top_used} time={result.wall_time_seconds:.1f}s")
    if result.final_expected_reward is not None:
        line += (f" | N_final={args.n_final}: E[R]={result.final_expected_reward:.2f} "
                 f"Rel={result.final_reliability:.3f}")
    print(line)
    for k, route in enumerate(result.solution.routes):
        print(f"  route {k}: {' '.join(map(str, route))}")
    if args.out:
        Path(args.out).write_text(results_to_csv([result]))
    if args.solution_out:
        matrix = build_travel_matrix(instance)
        Path(args.solution_out).write_text(format_solution(instance, result.solution, matrix))
    return EXIT_OK


def _cmd_bench(args) -> int:
    config, l_tops = _config(args, args.fast), _l_tops(args)
    if args.instance_workers < 1:
        raise UsageError("--instance-workers must be >= 1")
    refs = None
    if args.refs:
        refs = load_references(None if args.refs == "bundled" else args.refs)
    directory = Path(args.directory)
    if not directory.is_dir():
        raise OSError(f"not a directory: {directory}")
    results = run_batch(directory, config, l_tops, args.n_final, args.instance_workers,
                        args.workers)
    instance_csv = results_to_csv(results, refs)
    rows, unmatched = aggregate_by_family(results, refs)
    if args.report in ("instance", "both"):
        print(instance_csv, end="")
    if args.report in ("family", "both"):
        print(format_family_table(rows))
    if refs:
        matched, missing = coverage(results, refs)
        print(f"coverage: {matched} instances with reference rows, "
              f"{missing} reference rows without a result")
    if unmatched:
        print("unmatched: " + " ".join(unmatched))
    if args.out:
        Path(args.out).write_text(instance_csv)
    if args.family_out:
        Path(args.family_out).write_text(family_to_csv(rows))
    return EXIT_OK


def _cmd_validate(args) -> int:
    instance = read_instance(args.instance)
    solution = parse_solution(Path(args.solution).read_text())
    report = validate(instance, solution)
    if report.feasible:
        print("feasible")
    else:
        for code, detail in report.violations:
            print(f"{code}: {detail}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    if args.scenarios < 1 or args.c < 0 or args.first_scenario < 0:
        raise UsageError("need --scenarios >= 1, --c >= 0 and --first-scenario >= 0")
    instance = read_instance(args.instance)
    solution = parse_solution(Path(args.solution).read_text())
    report = validate(instance, solution)
    if not report.feasible:
        raise UsageError("solution is infeasible: " + ", ".join(sorted(report.codes())))
    sampler = ScenarioSampler(build_travel_matrix(instance), args.c, args.seed)
    ev = evaluate(instance, solution, sampler, args.scenarios, args.first_scenario, retain=True)
    hw = ev.half_width
    print(f"E[R]={ev.expected_reward:.4f}" + (f" +/- {hw:.4f}" if hw is not None else "")
          + f" Rel={ev.reliability:.4f} N={ev.scenario_count}")
    for k, p in enumerate(ev.per_vehicle_success):
        print(f"  vehicle {k}: success {p:.4f}")
    return EXIT_OK


_COMMANDS = {"solve": _cmd_solve, "bench": _cmd_bench, "validate": _cmd_validate,
             "eval": _cmd_eval}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "backend", None):
        _backend.set_backend(args.backend)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"stochtop: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"stochtop: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"stochtop: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
