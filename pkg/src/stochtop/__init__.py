"""Stochastic team orienteering: savings heuristic, Top-L randomized multi-start and
Monte Carlo selection under lognormal travel times with all-or-nothing rewards."""
from ._backend import set_backend
from .bench import (ReferenceRow, RunResult, aggregate_by_family, gap_percent, load_references,
                    run_instance)
from .evaluation import Evaluation, evaluate, exact_single_arc_reliability
from .geometry import LognormalParams, build_travel_matrix, calibrate
from .heuristic import HeuristicParams, run_deterministic, savings_construct
from .instance import (Instance, ParseError, Solution, ValidationReport, parse_instance,
                       parse_solution, read_instance, route_length, validate)
from .randomized import CandidateKey, build_candidate, top_l_pick
from .sampling import ScenarioSampler
from .search import CandidateRecord, SearchConfig, SolveResult, select_best, solve

__all__ = [
    "CandidateKey", "CandidateRecord", "Evaluation", "HeuristicParams", "Instance",
    "LognormalParams", "ParseError", "ReferenceRow", "RunResult", "ScenarioSampler",
    "SearchConfig", "Solution", "SolveResult", "ValidationReport", "aggregate_by_family",
    "build_candidate", "build_travel_matrix", "calibrate", "evaluate",
    "exact_single_arc_reliability", "gap_percent", "load_references", "parse_instance",
    "parse_solution", "read_instance", "route_length", "run_deterministic", "run_instance",
    "savings_construct", "select_best", "set_backend", "solve", "top_l_pick", "validate",
]
