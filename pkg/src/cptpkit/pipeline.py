from __future__ import annotations

import logging
import random
import time
from contextlib import contextmanager
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

from tqdm import tqdm

from .config import settings
from .conic import build_cptp, build_dual, build_lifting_data, lift_point, solve_lifted_finite
from .errors import InfeasibleError
from .oracle import AtomDecomposition, bound_solve, cptp_feasibility_check, strict_feasibility_probe
from .poly import evaluate
from .pop import (FiniteSet, PopInstance, brute_force_solve, enumerate_vertices, is_feasible,
                  recession_growth_check, sample_feasible_points, suggest_alpha)
from .schemas import BruteForceReport, PipelineReport, ProbeReport, rat_list, value_str
from .utils import Vector

log = logging.getLogger(__name__)


class _Clock:
    def __init__(self) -> None:
        self.laps: Dict[str, float] = {}

    @contextmanager
    def lap(self, name: str) -> Iterator[None]:
        t0 = time.perf_counter()
        yield
        self.laps[name] = round(time.perf_counter() - t0, 6)


def _brute_report(res) -> BruteForceReport:
    return BruteForceReport(status=res.status, value=value_str(res.value),
                            argmins=[rat_list(x) for x in res.argmins], evaluations=res.evaluations)


def _verify_finite(p: PopInstance, report: PipelineReport, clock: _Clock) -> PipelineReport:
    with clock.lap("brute_force"):
        bf = brute_force_solve(p)
    report.brute_force = _brute_report(bf)
    with clock.lap("lifted"):
        lifted = solve_lifted_finite(p)
    report.lifted_value = value_str(lifted.value)
    report.lifted_argmins = [rat_list(x) for x in lifted.argmins]
    report.shapes["objective"] = list(lifted.program.objective.shape)
    report.add("lifted_value", lifted.value == bf.value, f"brute force {bf.value}, lifted {lifted.value}")
    report.add("lifted_argmins", lifted.argmins == bf.argmins)
    # over a finite set the lifted optimum is attained, so it is the exact dual-side bound
    report.dual_bound = float(lifted.value)
    report.dual_bound_source = "lifted"
    report.gap = float(bf.value - lifted.value)
    report.add("weak_duality", report.gap >= -report.tol, f"gap {report.gap!r}")
    return report


def run_verify(
    p: PopInstance,
    digest: str,
    alpha: Optional[Sequence[Any]] = None,
    t: int = 1,
    samples: int = 16,
    depth: Optional[int] = None,
    tol: Optional[float] = None,
    box: Optional[Sequence[Tuple[Any, Any]]] = None,
    timing: bool = False,
    progress: bool = False,
) -> PipelineReport:
    """
    Brute force, lifting, atom feasibility, dual probe and bound for one instance.
    Every check lands in report.checks; status is "pass" only when all of them pass.
    """
    tol = settings.CPTP_TOL if tol is None else tol
    depth = settings.CPTP_DEPTH if depth is None else depth
    rng = random.Random(settings.CPTP_SEED)
    clock = _Clock()
    report = PipelineReport(digest=digest, kind=p.kind, nvars=p.nvars, t=t, tol=tol)

    if isinstance(p.feasible, FiniteSet):
        if not p.feasible.points:
            report.status = "infeasible"
            return report
        _verify_finite(p, report, clock)
        if timing:
            report.timing = clock.laps
        return report.finish()

    F = p.feasible
    if not enumerate_vertices(F):
        report.status = "infeasible"
        return report

    with clock.lap("recession"):
        growth = recession_growth_check(p, samples=samples, rng=rng)
    report.add("top_degree_on_recession_cone", growth.ok,
               "" if growth.ok else f"negative along {rat_list(growth.witness)}")

    with clock.lap("brute_force"):
        bf = brute_force_solve(p, box=box, rng=rng)
    report.brute_force = _brute_report(bf)
    best = float(bf.value)

    if alpha is None:
        alpha = suggest_alpha(F)
    data = build_lifting_data(p, alpha, t)
    report.alpha = rat_list(data.alpha)
    prog = build_cptp(p, data)
    report.shapes["objective"] = list(prog.objective.shape)
    for eq in prog.equalities:
        report.shapes[f"eq:{eq.name}"] = list(eq.tensor.shape)
    for mp in prog.maps:
        report.shapes[f"map:{mp.name}"] = [mp.matrix.rows, mp.matrix.cols]

    points: List[Vector] = list(bf.argmins) + sample_feasible_points(F, samples, rng)
    bad_lift: List[str] = []
    bad_value: List[str] = []
    with clock.lap("lifts"):
        for x in tqdm(points, desc="lifts", disable=not progress):
            if not is_feasible(F, x):
                continue
            dec = AtomDecomposition(prog.order, prog.base_dim, [(Fraction(1), lift_point(prog, x, data))])
            fr = cptp_feasibility_check(prog, dec, tol)
            if not fr.passed:
                bad_lift.append(f"{rat_list(x)}: {', '.join(fr.failed())}")
            if fr.objective != evaluate(p.objective, x):
                bad_value.append(str(rat_list(x)))
    report.add("lift_feasibility", not bad_lift, "; ".join(bad_lift))
    report.add("objective_preservation", not bad_value, "; ".join(bad_value))

    dual = build_dual(prog, data)
    if all(v > 0 for v in dual.lift_vector):
        with clock.lap("probe"):
            probe = strict_feasibility_probe(dual, depth, tol)
        report.probe = ProbeReport.from_probe(probe)
        report.add("strict_feasibility", probe.status == "strict", f"margin {probe.margin!r}")
        if all(v > 0 for v in dual.normalization_vector):
            with clock.lap("bound"):
                report.dual_bound = bound_solve(dual, depth, tol)
            report.dual_bound_source = "bound_solve"
        elif probe.status == "strict":
            report.dual_bound = probe.lam
            report.dual_bound_source = "probe"
    else:
        log.info("dual checks skipped: a = (alpha, 1) has zero components")

    if report.dual_bound is not None:
        report.gap = best - report.dual_bound
        report.add("weak_duality", report.gap >= -tol, f"gap {report.gap!r}")
    if timing:
        report.timing = clock.laps
    return report.finish()


def verify_problem(problem, **kw: Any) -> PipelineReport:
    """ProblemFile front door; an alpha stored in the file is used unless one is passed."""
    p = problem.to_instance()
    if kw.get("alpha") is None and problem.alpha is not None:
        kw["alpha"] = problem.alpha
    try:
        return run_verify(p, problem.digest(), **kw)
    except InfeasibleError:
        return PipelineReport(digest=problem.digest(), kind=p.kind, nvars=p.nvars, status="infeasible")
