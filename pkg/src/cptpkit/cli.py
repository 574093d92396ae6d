from __future__ import annotations

from dotenv import load_dotenv, find_dotenv
load_dotenv(find_dotenv(), override=False)  # load .env before any env access

import json
import logging
import os
from contextlib import contextmanager
from typing import Iterator, List, Optional, Tuple

import typer

from .config import settings
from .errors import CptpError, InvalidArgumentError
from .utils import ensure_dir, parse_vector_arg

app = typer.Typer(help="cptpkit: polynomial optimization → lifted / completely positive / copositive programs, with brute-force checks")


@app.callback()
def main(
    debug: bool = typer.Option(False, "--debug", help="Verbose logging"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Override CPTP_THREADS"),
):
    level = logging.DEBUG if (debug or settings.CPTP_DEBUG) else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if threads:
        settings.CPTP_THREADS = max(1, threads)


@contextmanager
def _guard() -> Iterator[None]:
    """Map library errors to the exit-code contract."""
    try:
        yield
    except CptpError as e:
        typer.echo(f"❌ {e}", err=True)
        raise typer.Exit(e.exit_code)


def _read(path: str) -> str:
    if not os.path.exists(path):
        raise InvalidArgumentError(f"missing file: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def _emit(text: str, out: str, what: str) -> None:
    if not out:
        typer.echo(text, nl=False)
        return
    ensure_dir(os.path.dirname(out))
    with open(out, "w", encoding="utf-8") as f:
        f.write(text)
    typer.echo(f"✅ Wrote {what} → {out}")


def _parse_box(s: str) -> Optional[List[Tuple[str, str]]]:
    """Box as lo,hi for every axis, or lo,hi;lo,hi;... per axis."""
    if not s:
        return None
    out = []
    for part in s.split(";"):
        lo_hi = [p.strip() for p in part.split(",")]
        if len(lo_hi) != 2:
            raise InvalidArgumentError(f"bad --box segment {part!r}, expected lo,hi")
        out.append((lo_hi[0], lo_hi[1]))
    return out

# ---------- Tensorize ----------

@app.command()
def tensorize(
    problem: str = typer.Argument(..., help="Problem JSON"),
    order: int = typer.Option(0, "--order", "-d", help="Tensor order (default: max(degree, 1))"),
    out: str = typer.Option("", help="Output file (default: stdout)"),
):
    """Write the coefficient tensor of the objective."""
    from .formats import dump_tensor
    from .poly import coefficient_tensor
    from .schemas import load_problem

    with _guard():
        pf = load_problem(_read(problem))
        f = pf.polynomial()
        t = coefficient_tensor(f, order or max(f.degree, 1))
        _emit(dump_tensor(t), out, "tensor")

# ---------- Reformulate ----------

@app.command()
def reformulate(
    problem: str = typer.Argument(..., help="Problem JSON with a polyhedral feasible set"),
    alpha: str = typer.Option("", "--alpha", help="Comma separated alpha, e.g. 1,1/2 (default: 0)"),
    t: int = typer.Option(1, "--t", help="Rows of the Abar embedding"),
    kind: str = typer.Option("", "--kind", help="homogeneous | inhomogeneous (default: from file)"),
    out: str = typer.Option("", help="Output file (default: stdout)"),
):
    """Build the completely positive tensor program and export it."""
    from .conic import build_cptp, build_lifting_data
    from .formats import dump_program
    from .pop import PopInstance
    from .schemas import load_problem

    with _guard():
        pf = load_problem(_read(problem))
        p = pf.to_instance()
        if kind:
            p = PopInstance(p.objective, p.feasible, kind)
        a = parse_vector_arg(alpha) if alpha else pf.alpha
        data = build_lifting_data(p, a, t)
        prog = build_cptp(p, data)
        _emit(dump_program(prog), out, f"{prog.kind} program ({len(prog.equalities)} eq, {len(prog.maps)} maps)")

# ---------- Dual ----------

@app.command()
def dual(
    program: str = typer.Argument(..., help="Program export written by `reformulate`"),
    out: str = typer.Option("", help="Output file (default: stdout)"),
):
    """Copositive dual of an exported program."""
    from .conic import build_dual
    from .formats import dump_dual, parse_program

    with _guard():
        prog = parse_program(_read(program))
        _emit(dump_dual(build_dual(prog)), out, "dual")

# ---------- Verify ----------

@app.command()
def verify(
    problem: str = typer.Argument(..., help="Problem JSON"),
    alpha: str = typer.Option("", "--alpha", help="Comma separated alpha (default: file, then a certified positive one)"),
    t: int = typer.Option(1, "--t"),
    samples: int = typer.Option(16, "--samples", help="Sampled feasible points / recession directions"),
    depth: Optional[int] = typer.Option(None, "--depth", help="Oracle refinement levels (default CPTP_DEPTH)"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Verdict tolerance (default CPTP_TOL)"),
    box: str = typer.Option("", "--box", help="Search box for unbounded sets: lo,hi or lo,hi;lo,hi"),
    out: str = typer.Option("", help="Report JSON (default: stdout)"),
    timing: bool = typer.Option(False, "--timing", help="Include stage timings in the report"),
    progress: bool = typer.Option(False, "--progress", help="Show progress bars"),
):
    """Run every check on one instance; exit 0 only if all pass."""
    from .pipeline import verify_problem
    from .schemas import load_problem

    with _guard():
        pf = load_problem(_read(problem))
        b = _parse_box(box)
        if b is not None and len(b) == 1 and pf.nvars > 1:
            b = b * pf.nvars
        report = verify_problem(pf, alpha=parse_vector_arg(alpha) if alpha else None, t=t, samples=samples,
                                depth=depth, tol=tol, box=b, timing=timing, progress=progress)
        _emit(report.to_json(), out, "report")
    if report.status == "infeasible":
        typer.echo("❌ infeasible", err=True)
        raise typer.Exit(4)
    if not report.passed:
        failed = [c.name for c in report.checks if not c.passed]
        typer.echo(f"❌ checks failed: {', '.join(failed)}", err=True)
        raise typer.Exit(1)

# ---------- Finite sets ----------

@app.command("solve-finite")
def solve_finite(
    problem: str = typer.Argument(..., help="Problem JSON with a points list"),
    out: str = typer.Option("", help="Result JSON (default: stdout)"),
):
    """Exact minimum over a finite feasible set, directly and through the lifted model."""
    from .conic import solve_lifted_finite
    from .formats import tensor_lines
    from .pop import brute_force_solve
    from .schemas import load_problem, rat_list, value_str

    with _guard():
        p = load_problem(_read(problem)).to_instance()
        bf = brute_force_solve(p)
        lifted = solve_lifted_finite(p)
        res = {
            "value": value_str(bf.value),
            "argmins": [rat_list(x) for x in bf.argmins],
            "lifted_value": value_str(lifted.value),
            "lifted_atoms": ["\n".join(tensor_lines(a)) for a in lifted.atoms],
        }
        _emit(json.dumps(res, sort_keys=True, indent=2) + "\n", out, "result")

# ---------- Copositivity ----------

@app.command("copositive-check")
def copositive_check(
    tensor: str = typer.Argument(..., help="Tensor text file"),
    depth: Optional[int] = typer.Option(None, "--depth"),
    tol: Optional[float] = typer.Option(None, "--tol"),
    out: str = typer.Option("", help="Verdict JSON (default: stdout)"),
):
    """Lattice copositivity oracle; exit 1 unless the verdict is Copositive."""
    from .formats import parse_tensor
    from .oracle import copositive_check as check
    from .schemas import VerdictReport, dump_json

    with _guard():
        v = check(parse_tensor(_read(tensor)), depth, tol)
        _emit(dump_json(VerdictReport.from_verdict(v)), out, "verdict")
    if not v.copositive:
        raise typer.Exit(1)


if __name__ == "__main__":
    app()
