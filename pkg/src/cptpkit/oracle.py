from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

from .config import settings
from .conic import CopositiveProgram, CpTensorProgram, DualAssignment
from .errors import InvalidArgumentError, ResourceLimitError
from .poly import from_homogeneous_tensor
from .pop import eval_batch, numeric_poly
from .tensor import SymmetricTensor, form_value, inner, rank_one_power
from .utils import Vector, as_fraction, as_vector, dot, map_chunks

log = logging.getLogger(__name__)

BASE_STEPS = 8        # lattice Δ(n, 8) at level 0, doubled per refinement level
RADIUS = 4            # neighbourhood half-width, in lattice steps of the current level
INCUMBENTS = 4
CHUNK = 65536

Status = Literal["Copositive", "NotCopositive", "Inconclusive"]

# --------------------------------------------------------------------------------------
# Simplex lattice search
# --------------------------------------------------------------------------------------

def simplex_lattice(n: int, k: int) -> np.ndarray:
    """All integer m >= 0 with sum(m) = k, as rows in lexicographic bar order."""
    count = math.comb(k + n - 1, n - 1)
    if count > settings.CPTP_MAX_LATTICE:
        raise ResourceLimitError(f"lattice Δ({n},{k}) has {count} points, cap is {settings.CPTP_MAX_LATTICE}")
    if n == 1:
        return np.array([[k]], dtype=np.int64)
    bars = np.array(list(combinations(range(k + n - 1), n - 1)), dtype=np.int64).reshape(count, n - 1)
    padded = np.hstack([np.full((count, 1), -1), bars, np.full((count, 1), k + n - 1)])
    return np.diff(padded, axis=1) - 1


def _neighborhood(center: np.ndarray, k: int, radius: int) -> np.ndarray:
    lo = np.maximum(center - radius, 0)
    hi = np.minimum(center + radius, k)
    axes = [range(int(a), int(b) + 1) for a, b in zip(lo[:-1], hi[:-1])]
    rows = []
    for head in product(*axes):
        last = k - sum(head)
        if lo[-1] <= last <= hi[-1]:
            rows.append(head + (last,))
    return np.array(rows, dtype=np.int64).reshape(len(rows), len(center))


def _refine_radius(n: int) -> int:
    r = RADIUS
    while r > 0 and INCUMBENTS * (2 * r + 1) ** (n - 1) > settings.CPTP_MAX_LATTICE:
        r -= 1
    if r == 0:
        raise ResourceLimitError(f"refinement neighbourhoods in dimension {n} exceed CPTP_MAX_LATTICE")
    return r


@dataclass(frozen=True)
class SimplexMinimum:
    value: Fraction           # exact value at `point`
    point: Vector             # exact lattice point on the standard simplex
    float_value: float        # best value seen by the float scan
    evaluations: int
    depth: int
    steps: int                # lattice resolution of the last level


def minimize_on_simplex(t: SymmetricTensor, depth: Optional[int] = None,
                        denom: Optional[Sequence[Any]] = None) -> SimplexMinimum:
    """
    Minimise <t, M_d(x)> (divided by (denom^T x)^d when denom is given) over the standard
    simplex. Level 0 scans the full lattice with 8 steps per axis; each further level doubles
    the resolution and rescans a fixed-width neighbourhood of the best few lattice points.
    """
    depth = settings.CPTP_DEPTH if depth is None else depth
    if depth < 0:
        raise InvalidArgumentError("depth must be >= 0")
    n, d = t.dim, t.order
    E, C = numeric_poly(from_homogeneous_tensor(t))
    w = None
    if denom is not None:
        wq = as_vector(denom)
        if len(wq) != n or any(v <= 0 for v in wq):
            raise InvalidArgumentError("normalisation vector must be componentwise positive")
        w = np.array([float(v) for v in wq])

    def exact(row: np.ndarray, k: int) -> Tuple[Fraction, Vector]:
        x = tuple(Fraction(int(m), k) for m in row)
        v = form_value(t, x)
        if denom is not None:
            v = v / dot(wq, x) ** d
        return v, x

    def scan(P: np.ndarray) -> np.ndarray:
        vals = eval_batch(E, C, P)
        if w is not None:
            vals = vals / (P @ w) ** d
        return vals

    k = BASE_STEPS
    pts = simplex_lattice(n, k)
    radius = _refine_radius(n) if depth else RADIUS
    best: Optional[Tuple[Fraction, Vector]] = None
    float_best = math.inf
    evaluations = 0
    for level in range(depth + 1):
        if level:
            k *= 2
            pts = np.unique(np.vstack([_neighborhood(2 * c, k, radius) for c in incumbents]), axis=0)
        P = pts / float(k)
        parts = map_chunks(scan, [P[s:s + CHUNK] for s in range(0, len(P), CHUNK)], settings.CPTP_THREADS)
        vals = np.concatenate(parts) if parts else np.zeros(0)
        evaluations += len(vals)
        # value first, then the lattice row, so ties resolve the same way on every run
        order = np.lexsort(tuple(pts[:, j] for j in range(n - 1, -1, -1)) + (vals,))
        incumbents = [pts[i] for i in order[:INCUMBENTS]]
        float_best = min(float_best, float(vals[order[0]]))
        cand = exact(incumbents[0], k)
        if best is None or cand[0] < best[0]:
            best = cand
        log.debug("simplex level %d: k=%d points=%d best=%s", level, k, len(vals), float(best[0]))
    return SimplexMinimum(best[0], best[1], float_best, evaluations, depth, k)

# --------------------------------------------------------------------------------------
# Copositivity
# --------------------------------------------------------------------------------------

@dataclass(frozen=True)
class CopositivityVerdict:
    status: Status
    margin: float
    witness: Optional[Vector]
    depth: int
    tol: float
    evaluations: int
    witness_value: Optional[Fraction] = None

    @property
    def certificate(self) -> str:
        if self.status == "Copositive":
            return "approximate certificate"
        if self.status == "NotCopositive":
            return "exact witness"
        return "none"

    @property
    def copositive(self) -> bool:
        return self.status == "Copositive"


def copositive_check(t: SymmetricTensor, depth: Optional[int] = None, tol: Optional[float] = None) -> CopositivityVerdict:
    depth = settings.CPTP_DEPTH if depth is None else depth
    tol = settings.CPTP_TOL if tol is None else tol
    res = minimize_on_simplex(t, depth)
    if res.value < -tol:
        return CopositivityVerdict("NotCopositive", float(res.value), res.point, depth, tol,
                                   res.evaluations, witness_value=res.value)
    # float scan saw a violation the exact re-evaluation does not confirm
    status: Status = "Inconclusive" if res.float_value < -tol else "Copositive"
    return CopositivityVerdict(status, float(res.value), None, depth, tol, res.evaluations)

# --------------------------------------------------------------------------------------
# Completely positive tensors, by construction
# --------------------------------------------------------------------------------------

@dataclass
class AtomDecomposition:
    order: int
    dim: int
    atoms: List[Tuple[Fraction, Vector]] = field(default_factory=list)

    @classmethod
    def of(cls, order: int, dim: int, atoms: Sequence[Tuple[Any, Sequence[Any]]]) -> "AtomDecomposition":
        return cls(order, dim, [(as_fraction(w), as_vector(v)) for w, v in atoms])

    def validate(self) -> None:
        for w, v in self.atoms:
            if len(v) != self.dim:
                raise InvalidArgumentError(f"atom of length {len(v)} in dimension {self.dim}")
            if w < 0:
                raise InvalidArgumentError(f"negative atom weight {w}")
            if any(c < 0 for c in v):
                raise InvalidArgumentError(f"atom {tuple(map(str, v))} has a negative component")


def cp_reconstruct(dec: AtomDecomposition) -> SymmetricTensor:
    dec.validate()
    out = SymmetricTensor.zeros(dec.order, dec.dim)
    for w, v in dec.atoms:
        if w:
            out = out + rank_one_power(v, dec.order).scale(w)
    return out


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    value: Optional[Fraction] = None


@dataclass
class FeasibilityReport:
    objective: Fraction
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]


def cptp_feasibility_check(prog: CpTensorProgram, dec: AtomDecomposition, tol: Optional[float] = None) -> FeasibilityReport:
    tol = settings.CPTP_TOL if tol is None else tol
    if (dec.order, dec.dim) != (prog.order, prog.base_dim):
        raise InvalidArgumentError(
            f"decomposition shape {(dec.order, dec.dim)} does not match program {(prog.order, prog.base_dim)}")
    X = cp_reconstruct(dec)
    checks: List[CheckResult] = []
    for eq in prog.equalities:
        v = inner(eq.tensor, X)
        checks.append(CheckResult(f"eq:{eq.name}", v == eq.rhs, f"<X, C> = {v}, rhs {eq.rhs}", v))
    for mp in prog.maps:
        bad: List[str] = []
        for j, (w, vec) in enumerate(dec.atoms):
            if not w:
                continue
            img = mp.matrix.matvec(vec)
            for i, c in enumerate(img):
                if c < -tol:
                    bad.append(f"atom {j} row {i}: {c}")
        checks.append(CheckResult(f"map:{mp.name}", not bad, "; ".join(bad)))
    return FeasibilityReport(inner(prog.objective, X), checks)

# --------------------------------------------------------------------------------------
# Dual side
# --------------------------------------------------------------------------------------

@dataclass(frozen=True)
class DualVerdict:
    feasible: bool
    verdict: CopositivityVerdict
    multipliers: Dict[str, CopositivityVerdict]


def dual_feasibility_check(dual: CopositiveProgram, assignment: DualAssignment,
                           tol: Optional[float] = None, depth: Optional[int] = None) -> DualVerdict:
    mult: Dict[str, CopositivityVerdict] = {}
    for name, U in sorted(assignment.multipliers.items()):
        if not U.is_zero():
            mult[name] = copositive_check(U, depth, tol)
    expr = dual.assemble(assignment)
    verdict = copositive_check(expr, depth, tol)
    ok = verdict.copositive and all(v.copositive for v in mult.values())
    return DualVerdict(ok, verdict, mult)


def bound_solve(dual: CopositiveProgram, depth: Optional[int] = None, tol: Optional[float] = None) -> float:
    """
    With every multiplier at zero the best feasible lambda is the minimum of base(x)/(a^T x)^d
    over the simplex. Returns the lattice minimum itself (an estimate of lambda* from above);
    tol does not shift it.
    """
    a = dual.normalization_vector
    if any(v <= 0 for v in a):
        raise InvalidArgumentError("bound_solve needs a componentwise-positive normalisation vector")
    res = minimize_on_simplex(dual.base, depth, denom=a)
    log.debug("bound_solve: lambda*=%s at %s", res.value, res.point)
    return float(res.value)


@dataclass(frozen=True)
class ProbeResult:
    status: Literal["strict", "inconclusive"]
    scalars: Dict[str, float]
    margin: float
    attempts: int

    @property
    def lam(self) -> float:
        return self.scalars.get("lambda", math.nan)


def strict_feasibility_probe(dual: CopositiveProgram, depth: Optional[int] = None, tol: Optional[float] = None,
                             max_doublings: int = 40) -> ProbeResult:
    """Walk lambda = -1, -2, -4, ... until the assembled expression is copositive with margin > tol."""
    tol = settings.CPTP_TOL if tol is None else tol
    if any(v <= 0 for v in dual.lift_vector):
        raise InvalidArgumentError("strict_feasibility_probe needs a componentwise-positive a = (alpha, 1)")
    attempts = 0
    margin = -math.inf
    s = Fraction(1)
    for _ in range(max_doublings + 1):
        mus = (None,) if "mu" not in dual.scalar_vars else (Fraction(0), -s, s)
        for mu in mus:
            scalars = {"lambda": -s} if mu is None else {"lambda": -s, "mu": mu}
            attempts += 1
            v = copositive_check(dual.assemble(DualAssignment(scalars)), depth, tol)
            margin = v.margin
            if v.copositive and v.margin > tol:
                log.info("strict point found: %s margin=%s", scalars, v.margin)
                return ProbeResult("strict", {k: float(x) for k, x in scalars.items()}, v.margin, attempts)
        s *= 2
    return ProbeResult("inconclusive", {}, margin, attempts)
