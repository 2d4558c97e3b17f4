"""Benchmark runner, reference comparison and CSV reports."""
from __future__ import annotations

import csv
import io
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .evaluation import evaluate
from .geometry import build_travel_matrix
from .instance import Instance, ParseError, Solution, read_instance
from .sampling import ScenarioSampler
from .search import SearchConfig, solve

DEFAULT_L_TOP = (20, 25, 30)
MATCH_THRESHOLD = -1.0
FAST_PROFILE = {"starts": 50, "scenarios": 500}

INSTANCE_COLUMNS = ["instance", "n", "m", "tmax", "det_reward", "exp_reward", "reliability",
                    "ltop", "time_s", "seed"]
REFERENCE_COLUMNS = ["ref_exp_reward", "ref_rel", "gap_pct", "delta_rel_pct"]
FINAL_COLUMNS = ["exp_reward_final", "reliability_final"]
FAMILY_COLUMNS = ["family", "n_inst", "avg_gap_pct", "match_beat", "worse", "avg_rel_ref",
                  "avg_rel_ours"]

_ID_RE = re.compile(r"^p(\d+)\.(\d+)\.([a-z]+)$", re.IGNORECASE)


class UndefinedGap(ValueError):
    pass


@dataclass
class RunResult:
    instance_id: str
    n: int
    m: int
    t_max: float
    expected_reward: float
    reliability: float
    deterministic_reward: float
    l_top_used: int
    wall_time_seconds: float
    seed: int
    final_expected_reward: Optional[float] = None
    final_reliability: Optional[float] = None
    solution: Optional[Solution] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ReferenceRow:
    instance_id: str
    reference_expected_reward: float
    reference_reliability: float

    def __post_init__(self):
        if self.reference_expected_reward < 0:
            raise ValueError("reference expected reward must be nonnegative")


@dataclass
class FamilyRow:
    family: str
    n_inst: int
    avg_gap_pct: Optional[float]
    match_beat: Optional[int]
    worse: Optional[int]
    avg_rel_ref: Optional[float]
    avg_rel_ours: Optional[float]


def gap_percent(ours: float, reference: float) -> float:
    if not reference > 0:
        raise UndefinedGap(f"gap undefined for reference value {reference}")
    return 100.0 * (ours - reference) / reference


def family_of(instance_id: str) -> Optional[str]:
    """``'p4.2.t' -> 'p4.2'``; None if the id does not follow the benchmark naming."""
    match = _ID_RE.match(instance_id)
    return f"p{int(match[1])}.{int(match[2])}" if match else None


def run_instance(path, config: SearchConfig, l_top_set: Sequence[int] = DEFAULT_L_TOP,
                 n_final: int = 10_000, workers: int = 1,
                 instance: Instance | None = None) -> RunResult:
    """Solve once per L_top and keep the run with the highest expected reward.

    Ties go to higher reliability, then to the smaller L_top.  Every run uses
    the same seed and therefore the same scenarios.  The winner is then
    re-simulated on ``n_final`` fresh scenarios (indices after the search
    ones); ``n_final=0`` skips that.
    """
    if not l_top_set:
        raise ValueError("l_top_set must not be empty")
    if instance is None:
        instance = read_instance(path)
    t0 = time.monotonic()
    best = best_l = None
    for l_top in sorted(set(l_top_set)):
        result = solve(instance, replace(config, l_top=l_top), workers=workers)
        rec = result.best
        if best is None or (rec.expected_reward, rec.reliability) > (best.expected_reward,
                                                                     best.reliability):
            best, best_l = rec, l_top
    elapsed = time.monotonic() - t0
    final_f = final_r = None
    if n_final > 0:
        matrix = build_travel_matrix(instance)
        sampler = ScenarioSampler(matrix, config.variability, config.master_seed)
        ev = evaluate(instance, best.solution, sampler, n_final, first_scenario=config.scenarios)
        final_f, final_r = ev.expected_reward, ev.reliability
    return RunResult(
        instance_id=instance.name or (Path(path).stem if path is not None else ""),
        n=instance.n,
        m=instance.m,
        t_max=instance.t_max,
        expected_reward=best.expected_reward,
        reliability=best.reliability,
        deterministic_reward=best.deterministic_reward,
        l_top_used=best_l,
        wall_time_seconds=elapsed,
        seed=config.master_seed,
        final_expected_reward=final_f,
        final_reliability=final_r,
        solution=best.solution,
    )


def _run_one(args):
    path, config, l_top_set, n_final, solve_workers = args
    return run_instance(path, config, l_top_set, n_final, solve_workers)


def instance_files(directory) -> list[Path]:
    return sorted(p for p in Path(directory).iterdir() if p.is_file() and p.suffix == ".txt")


def run_batch(directory, config: SearchConfig, l_top_set: Sequence[int] = DEFAULT_L_TOP,
              n_final: int = 10_000, workers: int = 1,
              solve_workers: int = 1) -> list[RunResult]:
    """Run every ``*.txt`` instance in ``directory``; output is sorted by instance id.

    ``workers`` instances run concurrently, each solved with ``solve_workers``
    processes.  Results do not depend on either count.
    """
    jobs = [(p, config, tuple(l_top_set), n_final, solve_workers)
            for p in instance_files(directory)]
    if workers <= 1:
        results = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    return sorted(results, key=lambda r: r.instance_id)


# -- references and reports ---------------------------------------------------

def parse_references(text: str) -> dict[str, ReferenceRow]:
    rows = {}
    for lineno, rec in enumerate(csv.DictReader(io.StringIO(text)), start=2):
        try:
            row = ReferenceRow(rec["instance_id"].strip(), float(rec["ref_expected_reward"]),
                               float(rec["ref_reliability"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad reference row: {exc}", lineno) from None
        rows[row.instance_id] = row
    return rows


def load_references(path=None) -> dict[str, ReferenceRow]:
    """Reference rows from ``path``, or the bundled competitive-instances table."""
    if path is None:
        text = resources.files("stochtop").joinpath("data/competitive_references.csv").read_text()
    else:
        text = Path(path).read_text()
    return parse_references(text)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def results_to_csv(results: Iterable[RunResult],
                   references: Mapping[str, ReferenceRow] | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(INSTANCE_COLUMNS)
    if references is not None:
        header += REFERENCE_COLUMNS
    header += FINAL_COLUMNS
    writer.writerow(header)
    for r in results:
        row = [r.instance_id, r.n, r.m, r.t_max, r.deterministic_reward, r.expected_reward,
               r.reliability, r.l_top_used, r.wall_time_seconds, r.seed]
        if references is not None:
            ref = references.get(r.instance_id)
            if ref is None:
                row += [None] * 4
            else:
                gap = (gap_percent(r.expected_reward, ref.reference_expected_reward)
                       if ref.reference_expected_reward > 0 else None)
                drel = (gap_percent(r.reliability, ref.reference_reliability)
                        if ref.reference_reliability > 0 else None)
                row += [ref.reference_expected_reward, ref.reference_reliability, gap, drel]
        row += [r.final_expected_reward, r.final_reliability]
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def results_from_csv(text: str) -> list[RunResult]:
    def opt(rec, key):
        value = rec.get(key, "")
        return float(value) if value not in ("", None) else None

    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        out.append(RunResult(
            instance_id=rec["instance"],
            n=int(rec["n"]),
            m=int(rec["m"]),
            t_max=float(rec["tmax"]),
            expected_reward=float(rec["exp_reward"]),
            reliability=float(rec["reliability"]),
            deterministic_reward=float(rec["det_reward"]),
            l_top_used=int(rec["ltop"]),
            wall_time_seconds=float(rec["time_s"]),
            seed=int(rec["seed"]),
            final_expected_reward=opt(rec, "exp_reward_final"),
            final_reliability=opt(rec, "reliability_final"),
        ))
    return out


def _mean(values):
    values = list(values)
    return sum(values) / len(values) if values else None


def aggregate_by_family(results: Sequence[RunResult],
                        references: Mapping[str, ReferenceRow] | None = None):
    """Per-family comparison table plus an ``all`` row.

    With references, only instances that have a reference row are counted
    (so ``match_beat + worse == n_inst``); the rest are returned as
    unmatched.  Without references only instance counts and our average
    reliability are filled in.  Returns ``(rows, unmatched_ids)``.
    """
    use_refs = bool(references)
    groups: dict[str, list[tuple[RunResult, Optional[ReferenceRow]]]] = {}
    unmatched = []
    for r in results:
        fam = family_of(r.instance_id)
        ref = references.get(r.instance_id) if use_refs else None
        if fam is None or (use_refs and ref is None):
            unmatched.append(r.instance_id)
            continue
        groups.setdefault(fam, []).append((r, ref))

    def fam_key(name):
        s, m = name[1:].split(".")
        return int(m), int(s)

    def row(name, members):
        if not use_refs:
            return FamilyRow(name, len(members), None, None, None, None,
                             _mean(r.reliability for r, _ in members))
        gaps = [gap_percent(r.expected_reward, ref.reference_expected_reward)
                for r, ref in members]
        match = sum(g >= MATCH_THRESHOLD for g in gaps)
        return FamilyRow(name, len(members), _mean(gaps), match, len(gaps) - match,
                         _mean(ref.reference_reliability for _, ref in members),
                         _mean(r.reliability for r, _ in members))

    rows = [row(name, groups[name]) for name in sorted(groups, key=fam_key)]
    everything = [pair for name in groups for pair in groups[name]]
    if everything or not rows:
        rows.append(row("all", everything))
    return rows, unmatched


def family_to_csv(rows: Sequence[FamilyRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FAMILY_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(v) for v in (r.family, r.n_inst, r.avg_gap_pct, r.match_beat,
                                            r.worse, r.avg_rel_ref, r.avg_rel_ours)])
    return buf.getvalue()


def format_family_table(rows: Sequence[FamilyRow]) -> str:
    def num(v, spec):
        return "" if v is None else format(v, spec)

    lines = [f"{'family':<8}{'#inst':>6}{'avg gap%':>10}{'match':>7}{'worse':>7}"
             f"{'rel ref':>9}{'rel ours':>9}"]
    for r in rows:
        lines.append(f"{r.family:<8}{r.n_inst:>6}{num(r.avg_gap_pct, '+.1f'):>10}"
                     f"{num(r.match_beat, 'd'):>7}{num(r.worse, 'd'):>7}"
                     f"{num(r.avg_rel_ref, '.2f'):>9}{num(r.avg_rel_ours, '.2f'):>9}")
    return "\n".join(lines)


def coverage(results: Sequence[RunResult], references: Mapping[str, ReferenceRow]) -> tuple[int, int]:
    """(instances with a reference row, reference rows without a result)."""
    ids = {r.instance_id for r in results}
    return len(ids & set(references)), len(set(references) - ids)
