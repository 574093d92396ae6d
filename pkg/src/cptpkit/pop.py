from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import singledispatch
from itertools import combinations
from typing import Any, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from scipy.optimize import Bounds, LinearConstraint, OptimizeResult, minimize

from .config import settings
from .errors import (InfeasibleError, InvalidArgumentError, PreconditionError,
                     ResourceLimitError, UnboundedError)
from .poly import Polynomial, evaluate, from_homogeneous_tensor, top_component
from .tensor import DenseMatrix, SymmetricTensor
from .utils import Vector, as_fraction, as_vector, dot, map_chunks

log = logging.getLogger(__name__)

TIE_TOL = 1e-9
FEAS_SLACK = 1e-12
REFINE_SLACK = 1e-9     # float feasibility slack accepted for SLSQP iterates
REFINE_STARTS = 8
Kind = Literal["homogeneous", "inhomogeneous"]

# --------------------------------------------------------------------------------------
# Feasible sets
# --------------------------------------------------------------------------------------

@dataclass(frozen=True)
class PolyhedralSet:
    """F = {x | Bx <= b, x >= 0}; zero rows means the nonnegative orthant."""

    B: DenseMatrix
    b: Vector

    def __post_init__(self) -> None:
        b = as_vector(self.b)
        if len(b) != self.B.rows:
            raise InvalidArgumentError(f"B has {self.B.rows} rows but b has {len(b)} entries")
        if self.B.cols < 1:
            raise InvalidArgumentError("a polyhedral set needs at least one variable")
        object.__setattr__(self, "b", b)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Any]], b: Sequence[Any], nvars: Optional[int] = None) -> "PolyhedralSet":
        if not rows:
            if nvars is None:
                raise InvalidArgumentError("nvars is required when there are no constraint rows")
            return cls(DenseMatrix.zeros(0, nvars), ())
        return cls(DenseMatrix.from_rows(rows), as_vector(b))

    @classmethod
    def orthant(cls, n: int) -> "PolyhedralSet":
        return cls(DenseMatrix.zeros(0, n), ())

    @property
    def nvars(self) -> int:
        return self.B.cols

    @property
    def m(self) -> int:
        return self.B.rows


@dataclass(frozen=True)
class FiniteSet:
    points: Tuple[Vector, ...]
    nvars: int

    def __post_init__(self) -> None:
        pts = tuple(as_vector(p) for p in self.points)
        for p in pts:
            if len(p) != self.nvars:
                raise InvalidArgumentError(f"point {p} does not have {self.nvars} coordinates")
        if len(set(pts)) != len(pts):
            raise InvalidArgumentError("finite feasible set has repeated points")
        object.__setattr__(self, "points", pts)

    @classmethod
    def of(cls, points: Sequence[Sequence[Any]], nvars: Optional[int] = None) -> "FiniteSet":
        if nvars is None:
            if not points:
                raise InvalidArgumentError("nvars is required for an empty point list")
            nvars = len(points[0])
        return cls(tuple(tuple(p) for p in points), nvars)


@dataclass(frozen=True)
class ConeSet:
    """{y | By <= 0, y >= 0}."""

    B: DenseMatrix

    @property
    def nvars(self) -> int:
        return self.B.cols

    def contains(self, y: Sequence[Any]) -> bool:
        y = as_vector(y)
        return all(v >= 0 for v in y) and all(v <= 0 for v in self.B.matvec(y))

    def is_trivial(self) -> bool:
        return not extreme_rays(self)


FeasibleSet = Union[PolyhedralSet, FiniteSet]


@dataclass(frozen=True)
class PopInstance:
    objective: Polynomial
    feasible: FeasibleSet
    kind: Kind = "inhomogeneous"

    def __post_init__(self) -> None:
        if self.kind not in ("homogeneous", "inhomogeneous"):
            raise InvalidArgumentError(f"unknown problem kind {self.kind!r}")
        if self.objective.nvars != self.feasible.nvars:
            raise InvalidArgumentError(
                f"objective has {self.objective.nvars} variables, feasible set {self.feasible.nvars}")
        if self.kind == "homogeneous" and not self.objective.is_homogeneous():
            raise InvalidArgumentError("declared homogeneous but the objective is not a form")
        if self.kind == "homogeneous" and not self.objective.is_zero() and self.objective.degree == 0:
            raise InvalidArgumentError("a homogeneous objective needs degree >= 1; use kind inhomogeneous for constants")

    @property
    def nvars(self) -> int:
        return self.objective.nvars

# --------------------------------------------------------------------------------------
# Recession cones and exact vertex enumeration
# --------------------------------------------------------------------------------------

@singledispatch
def recession_cone(f: Any) -> ConeSet:
    raise InvalidArgumentError(f"no recession cone for {type(f).__name__}")


@recession_cone.register
def _(f: PolyhedralSet) -> ConeSet:
    return ConeSet(f.B)


@recession_cone.register
def _(f: FiniteSet) -> ConeSet:
    # y >= 0 and sum(y) <= 0 leaves only the origin
    return ConeSet(DenseMatrix.from_rows([[1] * f.nvars]))


def is_feasible(f: PolyhedralSet, x: Sequence[Any]) -> bool:
    x = as_vector(x)
    if len(x) != f.nvars:
        raise InvalidArgumentError(f"point of length {len(x)} for {f.nvars} variables")
    return all(v >= 0 for v in x) and all(l <= r for l, r in zip(f.B.matvec(x), f.b))


def _check_cap(n: int, m: int) -> None:
    if n + m > settings.CPTP_VERTEX_CAP:
        raise ResourceLimitError(
            f"vertex enumeration capped at n + m <= {settings.CPTP_VERTEX_CAP}, got {n + m}")


def _solve_exact(rows: Sequence[Vector], rhs: Sequence[Fraction]) -> Optional[Vector]:
    M = sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in r] for r in rows])
    if M.det() == 0:
        return None
    sol = M.LUsolve(sympy.Matrix([sympy.Rational(h.numerator, h.denominator) for h in rhs]))
    return tuple(Fraction(int(s.p), int(s.q)) for s in sol)


def _vertices(rows: List[Vector], rhs: List[Fraction], n: int) -> List[Vector]:
    seen = set()
    for combo in combinations(range(len(rows)), n):
        sol = _solve_exact([rows[i] for i in combo], [rhs[i] for i in combo])
        if sol is None or sol in seen:
            continue
        if all(dot(r, sol) <= h for r, h in zip(rows, rhs)):
            seen.add(sol)
    return sorted(seen)


def _unit(n: int, i: int, sign: int = 1) -> Vector:
    return tuple(Fraction(sign if j == i else 0) for j in range(n))


def enumerate_vertices(f: PolyhedralSet) -> List[Vector]:
    """Basic feasible solutions of F, sorted; empty exactly when F is empty."""
    n, m = f.nvars, f.m
    _check_cap(n, m)
    rows = [f.B.row(i) for i in range(m)] + [_unit(n, i, -1) for i in range(n)]
    rhs = list(f.b) + [Fraction(0)] * n
    out = _vertices(rows, rhs, n)
    log.debug("vertex enumeration n=%d m=%d -> %d vertices", n, m, len(out))
    return out


def extreme_rays(cone: ConeSet) -> List[Vector]:
    """Extreme rays of the cone, normalised to coordinate sum 1."""
    n, m = cone.nvars, cone.B.rows
    _check_cap(n, m)
    ones = tuple(Fraction(1) for _ in range(n))
    rows = ([cone.B.row(i) for i in range(m)] + [_unit(n, i, -1) for i in range(n)]
            + [ones, tuple(-v for v in ones)])
    rhs = [Fraction(0)] * (m + n) + [Fraction(1), Fraction(-1)]
    return _vertices(rows, rhs, n)


def alpha_certificate(f: PolyhedralSet, alpha: Sequence[Any]) -> bool:
    """Exact check that alpha^T x <= 1 on all of F."""
    alpha = as_vector(alpha)
    if len(alpha) != f.nvars or any(a < 0 for a in alpha):
        raise InvalidArgumentError("alpha must be a nonnegative vector with one entry per variable")
    if all(a == 0 for a in alpha):
        return True
    verts = enumerate_vertices(f)
    if not verts:
        return True
    if any(dot(alpha, r) > 0 for r in extreme_rays(recession_cone(f))):
        return False
    return all(dot(alpha, v) <= 1 for v in verts)


def suggest_alpha(f: PolyhedralSet) -> Optional[Vector]:
    """A componentwise-positive certified alpha for bounded F, None when F is unbounded."""
    verts = enumerate_vertices(f)
    if not verts:
        raise InfeasibleError("feasible set is empty")
    if extreme_rays(recession_cone(f)):
        return None
    s = max(sum(v) for v in verts)
    scale = Fraction(1) if s == 0 else 1 / s
    return tuple(scale for _ in range(f.nvars))


def bounding_box(f: PolyhedralSet) -> List[Tuple[Fraction, Fraction]]:
    verts = enumerate_vertices(f)
    if not verts:
        raise InfeasibleError("feasible set is empty")
    if extreme_rays(recession_cone(f)):
        raise PreconditionError("feasible set is unbounded; supply a search box")
    return [(min(v[i] for v in verts), max(v[i] for v in verts)) for i in range(f.nvars)]


def _rng(rng: Optional[random.Random]) -> random.Random:
    return rng if rng is not None else random.Random(settings.CPTP_SEED)


def _random_combination(gens: Sequence[Vector], rng: random.Random, convex: bool) -> Vector:
    weights = [Fraction(rng.randint(0, 12)) for _ in gens]
    if not any(weights):
        weights[rng.randrange(len(gens))] = Fraction(1)
    if convex:
        total = sum(weights)
        weights = [w / total for w in weights]
    n = len(gens[0])
    return tuple(sum((w * g[i] for w, g in zip(weights, gens)), Fraction(0)) for i in range(n))


def sample_feasible_points(f: PolyhedralSet, count: int, rng: Optional[random.Random] = None) -> List[Vector]:
    """Exact feasible samples: convex combinations of vertices plus scaled recession rays."""
    rng = _rng(rng)
    verts = enumerate_vertices(f)
    if not verts:
        raise InfeasibleError("feasible set is empty")
    rays = extreme_rays(recession_cone(f))
    out = []
    for _ in range(count):
        x = _random_combination(verts, rng, convex=True)
        if rays:
            y = _random_combination(rays, rng, convex=False)
            x = tuple(a + b for a, b in zip(x, y))
        out.append(x)
    return out


def recession_samples(cone: ConeSet, samples: int, rng: Optional[random.Random] = None) -> List[Vector]:
    """Rays first, then their sum, then random nonnegative combinations."""
    rays = extreme_rays(cone)
    if not rays:
        return []
    rng = _rng(rng)
    out = list(rays)
    if len(rays) > 1:
        out.append(tuple(sum(c) for c in zip(*rays)))
    out += [_random_combination(rays, rng, convex=False) for _ in range(samples)]
    return out

# --------------------------------------------------------------------------------------
# Brute force
# --------------------------------------------------------------------------------------

@dataclass
class BruteForceResult:
    status: str                      # "optimal" or "unknown" (box-restricted scan of an unbounded set)
    value: Union[Fraction, float]
    argmins: List[Vector]
    evaluations: int = 0
    refined_point: Optional[Tuple[float, ...]] = None

    @property
    def exact(self) -> bool:
        return isinstance(self.value, Fraction)


@dataclass
class RecessionGrowthResult:
    ok: bool
    witness: Optional[Vector] = None
    checked: int = 0

    def __bool__(self) -> bool:
        return self.ok


def numeric_poly(f: Polynomial) -> Tuple[np.ndarray, np.ndarray]:
    terms = f.sorted_terms()
    E = np.array([e for e, _ in terms], dtype=float).reshape(len(terms), f.nvars)
    C = np.array([float(c) for _, c in terms], dtype=float)
    return E, C


def eval_batch(E: np.ndarray, C: np.ndarray, P: np.ndarray) -> np.ndarray:
    if len(C) == 0 or len(P) == 0:
        return np.zeros(len(P))
    return np.prod(P[:, None, :] ** E[None, :, :], axis=2) @ C


def _recession_witness(f: Polynomial, cone: ConeSet, samples: int, rng: random.Random) -> Tuple[Optional[Vector], int]:
    if f.is_zero():
        return None, 0
    top = top_component(f)
    dirs = recession_samples(cone, samples, rng)
    for y in dirs:
        if evaluate(top, y) < 0:
            return y, len(dirs)
    return None, len(dirs)


def recession_growth_check(p: PopInstance, samples: int = 64, rng: Optional[random.Random] = None) -> RecessionGrowthResult:
    """Top-degree part must be nonnegative on the recession cone whenever the minimum is attained."""
    cone = recession_cone(p.feasible)
    witness, checked = _recession_witness(p.objective, cone, samples, _rng(rng))
    if witness is not None:
        log.info("top-degree component negative along %s", witness)
    return RecessionGrowthResult(ok=witness is None, witness=witness, checked=checked)


def _solve_finite(p: PopInstance) -> BruteForceResult:
    pts = p.feasible.points
    if not pts:
        raise InfeasibleError("finite feasible set is empty")
    values = [(evaluate(p.objective, x), x) for x in pts]
    best = min(v for v, _ in values)
    argmins = sorted(x for v, x in values if v == best)
    return BruteForceResult("optimal", best, argmins, evaluations=len(pts))


def _refine(f: Polynomial, F: PolyhedralSet, starts: Sequence[Vector],
            box: Sequence[Tuple[Fraction, Fraction]]) -> Optional[OptimizeResult]:
    """SLSQP from each grid argmin (up to REFINE_STARTS) inside F and the search box; best feasible result."""
    E, C = numeric_poly(f)
    Bf = np.array([[float(v) for v in F.B.row(i)] for i in range(F.m)]).reshape(F.m, F.nvars)
    bf = np.array([float(v) for v in F.b])

    def value(x: np.ndarray) -> float:
        return float(eval_batch(E, C, x[None, :])[0])

    lo = [max(float(a), 0.0) for a, _ in box]
    bounds = Bounds(lo, [max(float(b), l) for (_, b), l in zip(box, lo)])
    constraints = [LinearConstraint(Bf, -np.inf, bf)] if F.m else []
    best: Optional[OptimizeResult] = None
    for x0 in starts[:REFINE_STARTS]:
        res = minimize(value, np.array([float(c) for c in x0]), method="SLSQP",
                       bounds=bounds, constraints=constraints, options={"ftol": 1e-12, "maxiter": 200})
        x = np.asarray(res.x, dtype=float)
        if not ((x >= -REFINE_SLACK).all() and (F.m == 0 or (Bf @ x <= bf + REFINE_SLACK).all())):
            continue
        res.fun = value(x)
        if best is None or res.fun < best.fun:
            best = res
    if best is not None:
        log.debug("SLSQP refinement: %s at %s (%s)", best.fun, best.x, best.message)
    return best


def _grid_scan(f: Polynomial, F: PolyhedralSet, box: Sequence[Tuple[Fraction, Fraction]], resolution: int) -> Tuple[List[Vector], int]:
    n = f.nvars
    total = (resolution + 1) ** n
    if total > settings.CPTP_MAX_GRID:
        raise ResourceLimitError(f"grid of {total} points exceeds CPTP_MAX_GRID={settings.CPTP_MAX_GRID}")
    E, C = numeric_poly(f)
    lo = np.array([float(a) for a, _ in box])
    step = np.array([float(b - a) / resolution for a, b in box])
    Bf = np.array([[float(v) for v in F.B.row(i)] for i in range(F.m)]).reshape(F.m, n)
    bf = np.array([float(v) for v in F.b])
    shape = (resolution + 1,) * n
    chunk = 65536
    ranges = [(s, min(s + chunk, total)) for s in range(0, total, chunk)]

    def scan(r: Tuple[int, int]):
        idx = np.stack(np.unravel_index(np.arange(r[0], r[1]), shape), axis=1)
        P = lo + idx * step
        feas = (P >= -FEAS_SLACK).all(axis=1)
        if F.m:
            feas &= ((P @ Bf.T) <= bf + FEAS_SLACK).all(axis=1)
        idx, P = idx[feas], P[feas]
        if not len(P):
            return np.inf, idx, 0
        vals = eval_batch(E, C, P)
        best = vals.min()
        return best, idx[vals <= best + TIE_TOL], len(P)

    results = map_chunks(scan, ranges, settings.CPTP_THREADS)
    best = min((r[0] for r in results), default=np.inf)
    evaluated = sum(r[2] for r in results)
    cands: List[Vector] = []
    if np.isfinite(best):
        for b, idx, _ in results:
            if b <= best + TIE_TOL:
                for row in idx:
                    cands.append(tuple(a + Fraction(int(k)) * (hi - a) / resolution
                                       for k, (a, hi) in zip(row, box)))
    return cands, evaluated


def brute_force_solve(
    p: PopInstance,
    resolution: Optional[int] = None,
    box: Optional[Sequence[Tuple[Any, Any]]] = None,
    refine: bool = True,
    rng: Optional[random.Random] = None,
) -> BruteForceResult:
    """
    Desk-scale global minimisation. Finite sets are enumerated exactly; polyhedra are scanned
    on a grid over `box` (vertices always included) and the grid argmins are polished
    with SLSQP under the linear constraints of F.
    """
    if isinstance(p.feasible, FiniteSet):
        return _solve_finite(p)
    F = p.feasible
    resolution = resolution or settings.CPTP_RESOLUTION
    if resolution < 1:
        raise InvalidArgumentError("resolution must be >= 1")

    verts = enumerate_vertices(F)
    if not verts:
        raise InfeasibleError("feasible set is empty")
    cone = recession_cone(F)
    unbounded = not cone.is_trivial()
    if unbounded:
        y, _ = _recession_witness(p.objective, cone, 32, _rng(rng))
        if y is not None:
            raise UnboundedError(f"objective is unbounded below along {y}", direction=y)

    if box is not None:
        box = [(as_fraction(a), as_fraction(b)) for a, b in box]
        if len(box) != F.nvars or any(b < a for a, b in box):
            raise InvalidArgumentError("box needs one (lo, hi) pair per variable with lo <= hi")
    elif unbounded:
        raise PreconditionError("feasible set is unbounded; supply a search box")
    else:
        box = bounding_box(F)
    # degenerate axes still need a nonzero step for the scan
    box = [(a, b) if b > a else (a, a + 1) for a, b in box]

    cands, evaluated = _grid_scan(p.objective, F, box, resolution)
    cands = [x for x in cands if is_feasible(F, x)] + list(verts)
    scored = [(evaluate(p.objective, x), x) for x in cands]
    best = min(v for v, _ in scored)
    argmins = sorted({x for v, x in scored if v - best <= TIE_TOL})
    result = BruteForceResult("unknown" if unbounded else "optimal", best, argmins,
                              evaluations=evaluated + len(verts))
    log.debug("grid scan res=%d evaluated=%d best=%s", resolution, evaluated, best)

    if refine and not p.objective.is_zero():
        opt = _refine(p.objective, F, argmins, box)
        if opt is not None and opt.fun < float(best) - TIE_TOL:
            result.value = float(opt.fun)
            result.refined_point = tuple(float(v) for v in opt.x)
    return result


def copositivity_pop(t: SymmetricTensor) -> PopInstance:
    """min <t, M_d(x)> over the nonnegative orthant."""
    return PopInstance(from_homogeneous_tensor(t), PolyhedralSet.orthant(t.dim), "homogeneous")
