from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from .errors import InfeasibleError, InvalidArgumentError
from .poly import coefficient_tensor, embed_tensor, evaluate, homogeneous_tensor
from .pop import (ConeSet, FiniteSet, Kind, PolyhedralSet, PopInstance, alpha_certificate,
                  is_feasible, recession_cone)
from .tensor import DenseMatrix, SymmetricTensor, inner, mode_multiply_uniform, rank_one_power
from .utils import Vector, as_fraction, as_vector, dot

log = logging.getLogger(__name__)

# --------------------------------------------------------------------------------------
# Lifted convex model
# --------------------------------------------------------------------------------------

@dataclass(frozen=True)
class LiftedProgram:
    """
    min <objective, X> over conv{C atoms} + cone{R atoms}.
    Inhomogeneous: atoms M_d(1, x), x in F and M_d(0, y), y in REC_F.
    Homogeneous: atoms M_d(x) and M_d(y).
    """

    kind: Kind
    order: int
    objective: SymmetricTensor
    feasible: Any
    cone: ConeSet

    def c_atom(self, x: Sequence[Any]) -> SymmetricTensor:
        x = as_vector(x)
        v = x if self.kind == "homogeneous" else (Fraction(1),) + x
        return rank_one_power(v, self.order)

    def r_atom(self, y: Sequence[Any]) -> SymmetricTensor:
        y = as_vector(y)
        v = y if self.kind == "homogeneous" else (Fraction(0),) + y
        return rank_one_power(v, self.order)


def build_lifted_program(p: PopInstance, order: Optional[int] = None) -> LiftedProgram:
    d = order or max(p.objective.degree, 1)
    if p.kind == "homogeneous":
        obj = homogeneous_tensor(p.objective, d)
    else:
        obj = coefficient_tensor(p.objective, d)
    return LiftedProgram(p.kind, d, obj, p.feasible, recession_cone(p.feasible))


@dataclass
class LiftedFiniteResult:
    value: Fraction
    argmins: List[Vector]
    atoms: List[SymmetricTensor]          # one per argmin; the optimal set is their convex hull
    program: LiftedProgram

    def hull_member(self, weights: Sequence[Any]) -> SymmetricTensor:
        w = as_vector(weights)
        if len(w) != len(self.atoms) or any(v < 0 for v in w) or sum(w) != 1:
            raise InvalidArgumentError("weights must be a probability vector over the optimal atoms")
        out = SymmetricTensor.zeros(self.program.order, self.program.objective.dim)
        for c, atom in zip(w, self.atoms):
            out = out + atom.scale(c)
        return out


def solve_lifted_finite(p: PopInstance, order: Optional[int] = None) -> LiftedFiniteResult:
    """The objective is linear in the hull weights, so the minimum sits on the best atoms."""
    if not isinstance(p.feasible, FiniteSet):
        raise InvalidArgumentError("solve_lifted_finite needs a finite feasible set")
    if not p.feasible.points:
        raise InfeasibleError("finite feasible set is empty")
    prog = build_lifted_program(p, order)
    scored = [(inner(prog.objective, prog.c_atom(x)), x) for x in p.feasible.points]
    best = min(v for v, _ in scored)
    argmins = sorted(x for v, x in scored if v == best)
    return LiftedFiniteResult(best, argmins, [prog.c_atom(x) for x in argmins], prog)

# --------------------------------------------------------------------------------------
# Lifting data
# --------------------------------------------------------------------------------------

@dataclass(frozen=True)
class LiftingData:
    feasible: PolyhedralSet
    alpha: Vector
    a: Vector                  # (alpha, 1)
    A: DenseMatrix             # [b a^T - (B | 0) ; I_{n+1}]
    t: int
    order: int
    abar: Vector               # (0, a)
    Abar: DenseMatrix          # t identical rows (1, -a^T)
    Aprime: DenseMatrix        # (0 | A)
    Atensor: SymmetricTensor   # M_d((1, -a))


def build_lifting_data(p: PopInstance, alpha: Optional[Sequence[Any]] = None, t: int = 1,
                       order: Optional[int] = None) -> LiftingData:
    F = p.feasible
    if not isinstance(F, PolyhedralSet):
        raise InvalidArgumentError("lifting data needs a polyhedral feasible set")
    n, m = F.nvars, F.m
    alpha = as_vector(alpha) if alpha is not None else (Fraction(0),) * n
    if t < 1:
        raise InvalidArgumentError("t must be a positive integer")
    if not alpha_certificate(F, alpha):
        raise InvalidArgumentError(f"alpha {tuple(map(str, alpha))} does not satisfy alpha^T x <= 1 on F")
    d = order or max(p.objective.degree, 1)
    a = alpha + (Fraction(1),)
    top = [[F.b[i] * a[j] - (F.B[i, j] if j < n else 0) for j in range(n + 1)] for i in range(m)]
    A = DenseMatrix.from_rows(top, n + 1).vstack(DenseMatrix.identity(n + 1))
    row = (Fraction(1),) + tuple(-v for v in a)
    Abar = DenseMatrix.from_rows([row] * t)
    Aprime = DenseMatrix.zeros(m + n + 1, 1).hstack(A)
    log.debug("lifting data n=%d m=%d t=%d d=%d", n, m, t, d)
    return LiftingData(F, alpha, a, A, t, d, (Fraction(0),) + a, Abar, Aprime, rank_one_power(row, d))


def lift_homogeneous_point(x: Sequence[Any], data: LiftingData) -> Vector:
    """y = (x, 1 - alpha^T x): A y >= 0 and a^T y = 1."""
    x = as_vector(x)
    if not is_feasible(data.feasible, x):
        raise InvalidArgumentError(f"point {tuple(map(str, x))} is not feasible")
    return x + (1 - dot(data.alpha, x),)


def lift_recession_direction(y: Sequence[Any], data: LiftingData) -> Vector:
    """(y, -alpha^T y) for y in REC_F; lands in the recession cone of the lifted set."""
    y = as_vector(y)
    if not recession_cone(data.feasible).contains(y):
        raise InvalidArgumentError(f"direction {tuple(map(str, y))} is not a recession direction")
    return y + (-dot(data.alpha, y),)

# --------------------------------------------------------------------------------------
# Completely positive tensor programs
# --------------------------------------------------------------------------------------

@dataclass(frozen=True)
class EqualityConstraint:
    name: str
    tensor: SymmetricTensor
    rhs: Fraction


@dataclass(frozen=True)
class MembershipMap:
    """X x_1 M ... x_d M must be completely positive in dimension M.rows."""

    name: str
    matrix: DenseMatrix

    @property
    def image_dim(self) -> int:
        return self.matrix.rows


@dataclass(frozen=True)
class CpTensorProgram:
    kind: Kind
    order: int
    base_dim: int
    objective: SymmetricTensor
    equalities: Tuple[EqualityConstraint, ...]
    maps: Tuple[MembershipMap, ...]
    alpha: Vector
    t: int = 1

    def __post_init__(self) -> None:
        shape = (self.order, self.base_dim)
        if self.objective.shape != shape:
            raise InvalidArgumentError(f"objective shape {self.objective.shape} != {shape}")
        for eq in self.equalities:
            if eq.tensor.shape != shape:
                raise InvalidArgumentError(f"constraint {eq.name} has shape {eq.tensor.shape}, expected {shape}")
        for mp in self.maps:
            if mp.matrix.cols != self.base_dim:
                raise InvalidArgumentError(f"map {mp.name} has {mp.matrix.cols} columns, expected {self.base_dim}")

    @property
    def a(self) -> Vector:
        return tuple(self.alpha) + (Fraction(1),)

    @property
    def nvars(self) -> int:
        return len(self.alpha)


def build_homogeneous_cptp(p: PopInstance, data: LiftingData) -> CpTensorProgram:
    if p.kind != "homogeneous":
        raise InvalidArgumentError("build_homogeneous_cptp needs a homogeneous instance")
    n, d = p.nvars, data.order
    obj = embed_tensor(homogeneous_tensor(p.objective, d), n + 1)
    return CpTensorProgram(
        kind="homogeneous", order=d, base_dim=n + 1, objective=obj,
        equalities=(EqualityConstraint("normalization", rank_one_power(data.a, d), Fraction(1)),),
        maps=(MembershipMap("A", data.A),),
        alpha=data.alpha, t=data.t,
    )


def build_inhomogeneous_cptp(p: PopInstance, data: LiftingData) -> CpTensorProgram:
    if p.kind != "inhomogeneous":
        raise InvalidArgumentError("build_inhomogeneous_cptp needs an inhomogeneous instance")
    n, d = p.nvars, data.order
    # f-bar: the slack coordinate n+1 carries no terms; coordinate 0 homogenises
    obj = coefficient_tensor(p.objective.pad(n + 1), d)
    return CpTensorProgram(
        kind="inhomogeneous", order=d, base_dim=n + 2, objective=obj,
        equalities=(
            EqualityConstraint("normalization", rank_one_power(data.abar, d), Fraction(1)),
            EqualityConstraint("homogenization", data.Atensor, Fraction(0)),
        ),
        maps=(MembershipMap("Abar", data.Abar), MembershipMap("Aprime", data.Aprime)),
        alpha=data.alpha, t=data.t,
    )


def build_cptp(p: PopInstance, data: LiftingData) -> CpTensorProgram:
    if p.kind == "homogeneous":
        return build_homogeneous_cptp(p, data)
    return build_inhomogeneous_cptp(p, data)


def lift_point(prog: CpTensorProgram, x: Sequence[Any], data: LiftingData) -> Vector:
    y = lift_homogeneous_point(x, data)
    return y if prog.kind == "homogeneous" else (Fraction(1),) + y


def lifted_atom(prog: CpTensorProgram, x: Sequence[Any], data: LiftingData) -> SymmetricTensor:
    return rank_one_power(lift_point(prog, x, data), prog.order)


def recession_atom(prog: CpTensorProgram, y: Sequence[Any], data: LiftingData) -> SymmetricTensor:
    z = lift_recession_direction(y, data)
    return rank_one_power(z if prog.kind == "homogeneous" else (Fraction(0),) + z, prog.order)


@dataclass
class NormalizationSplit:
    positive: List[Tuple[Fraction, Vector]]   # (lambda_i = a^T y_i, z_i = y_i / lambda_i)
    recession: List[Vector]                   # a^T y_j = 0

    def reconstruct(self, order: int, dim: int) -> SymmetricTensor:
        out = SymmetricTensor.zeros(order, dim)
        for lam, z in self.positive:
            out = out + rank_one_power(z, order).scale(lam ** order)
        for y in self.recession:
            out = out + rank_one_power(y, order)
        return out


def normalization_split(generators: Sequence[Sequence[Any]], a: Sequence[Any]) -> NormalizationSplit:
    """Split generators of X = sum M_d(y_i) by the sign of a^T y_i and rescale the positive ones."""
    a = as_vector(a)
    pos: List[Tuple[Fraction, Vector]] = []
    rec: List[Vector] = []
    for g in generators:
        y = as_vector(g)
        lam = dot(a, y)
        if lam < 0:
            raise InvalidArgumentError(f"generator {tuple(map(str, y))} has a^T y < 0")
        if lam > 0:
            pos.append((lam, tuple(v / lam for v in y)))
        else:
            rec.append(y)
    return NormalizationSplit(pos, rec)

# --------------------------------------------------------------------------------------
# Copositive duals
# --------------------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiplierSlot:
    """U in the copositive cone of (order, dim), entering as -(U x_1 M^T ... x_d M^T)."""

    name: str
    order: int
    dim: int
    adjoint: DenseMatrix


@dataclass
class DualAssignment:
    scalars: Dict[str, Fraction] = field(default_factory=dict)
    multipliers: Dict[str, SymmetricTensor] = field(default_factory=dict)


@dataclass(frozen=True)
class CopositiveProgram:
    """
    max lambda  s.t.  base + sum_v value_v * coefficients[v] - sum_s U_s x M_s^T ... in COP(order, base_dim).
    """

    kind: Kind
    order: int
    base_dim: int
    base: SymmetricTensor
    scalar_vars: Tuple[str, ...]
    coefficients: Mapping[str, SymmetricTensor]
    slots: Tuple[MultiplierSlot, ...]
    lift_vector: Vector            # a = (alpha, 1)
    normalization_vector: Vector   # a (homogeneous) or (0, a) (inhomogeneous)

    def assemble(self, assignment: DualAssignment) -> SymmetricTensor:
        unknown = set(assignment.scalars) - set(self.scalar_vars)
        if unknown:
            raise InvalidArgumentError(f"unknown scalar variables {sorted(unknown)}")
        out = self.base
        for v in self.scalar_vars:
            val = as_fraction(assignment.scalars.get(v, 0))
            if val:
                out = out + self.coefficients[v].scale(val)
        for slot in self.slots:
            U = assignment.multipliers.get(slot.name)
            if U is None:
                continue
            if U.shape != (slot.order, slot.dim):
                raise InvalidArgumentError(f"multiplier {slot.name} has shape {U.shape}, expected {(slot.order, slot.dim)}")
            out = out - mode_multiply_uniform(U, slot.adjoint)
        extra = set(assignment.multipliers) - {s.name for s in self.slots}
        if extra:
            raise InvalidArgumentError(f"unknown multiplier slots {sorted(extra)}")
        return out


def _check_equality(prog: CpTensorProgram, i: int, expected: SymmetricTensor) -> None:
    if len(prog.equalities) <= i or prog.equalities[i].tensor != expected:
        raise InvalidArgumentError("program does not match the lifting data")


def dual_homogeneous(prog: CpTensorProgram, data: Optional[LiftingData] = None) -> CopositiveProgram:
    if prog.kind != "homogeneous" or len(prog.equalities) != 1 or len(prog.maps) != 1:
        raise InvalidArgumentError("dual_homogeneous needs a program built by build_homogeneous_cptp")
    if data is not None:
        _check_equality(prog, 0, rank_one_power(data.a, prog.order))
    A = prog.maps[0].matrix
    return CopositiveProgram(
        kind="homogeneous", order=prog.order, base_dim=prog.base_dim, base=prog.objective,
        scalar_vars=("lambda",),
        coefficients={"lambda": -prog.equalities[0].tensor},
        slots=(MultiplierSlot("U", prog.order, A.rows, A.transpose()),),
        lift_vector=prog.a, normalization_vector=prog.a,
    )


def dual_inhomogeneous(prog: CpTensorProgram, data: Optional[LiftingData] = None) -> CopositiveProgram:
    if prog.kind != "inhomogeneous" or len(prog.equalities) != 2 or len(prog.maps) != 2:
        raise InvalidArgumentError("dual_inhomogeneous needs a program built by build_inhomogeneous_cptp")
    if data is not None:
        _check_equality(prog, 0, rank_one_power(data.abar, prog.order))
        _check_equality(prog, 1, data.Atensor)
    Abar, Aprime = prog.maps[0].matrix, prog.maps[1].matrix
    return CopositiveProgram(
        kind="inhomogeneous", order=prog.order, base_dim=prog.base_dim, base=prog.objective,
        scalar_vars=("lambda", "mu"),
        coefficients={"lambda": -prog.equalities[0].tensor, "mu": -prog.equalities[1].tensor},
        slots=(MultiplierSlot("U1", prog.order, Abar.rows, Abar.transpose()),
               MultiplierSlot("U2", prog.order, Aprime.rows, Aprime.transpose())),
        lift_vector=prog.a, normalization_vector=(Fraction(0),) + prog.a,
    )


def build_dual(prog: CpTensorProgram, data: Optional[LiftingData] = None) -> CopositiveProgram:
    if prog.kind == "homogeneous":
        return dual_homogeneous(prog, data)
    return dual_inhomogeneous(prog, data)
