from __future__ import annotations

import json
import re
from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator

from .errors import CptpError, ParseError
from .formats import parse_term, term_line
from .oracle import CopositivityVerdict, ProbeResult
from .poly import Polynomial
from .pop import FiniteSet, PolyhedralSet, PopInstance
from .utils import Vector, as_fraction, fraction_str, sha

Rational = Union[int, str, float]


def _canon(v: Any) -> str:
    try:
        return fraction_str(as_fraction(v))
    except CptpError as e:
        raise ValueError(str(e)) from None


def rat_list(v: Vector) -> List[str]:
    return [fraction_str(x) for x in v]

# -------------------------------------------------------------------
# Problem files
# -------------------------------------------------------------------

class PolyhedronSpec(BaseModel):
    """{x >= 0 : B x <= b}"""

    model_config = ConfigDict(extra="forbid")

    B: List[List[Rational]]
    b: List[Rational]

    @field_validator("B")
    @classmethod
    def _rows(cls, v):
        return [[_canon(c) for c in row] for row in v]

    @field_validator("b")
    @classmethod
    def _rhs(cls, v):
        return [_canon(c) for c in v]


class PointsSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    points: List[List[Rational]]

    @field_validator("points")
    @classmethod
    def _pts(cls, v):
        return [[_canon(c) for c in p] for p in v]


class TermSpec(BaseModel):
    coef: Rational
    exp: List[int]


class ProblemFile(BaseModel):
    nvars: int = Field(ge=1, description="Number of variables")
    objective: List[Union[str, TermSpec]] = Field(default_factory=list, description="Terms 'p/q : e1 ... en'")
    constraints: Union[PolyhedronSpec, PointsSpec]
    kind: Literal["homogeneous", "inhomogeneous"] = "inhomogeneous"
    alpha: Optional[List[Rational]] = None

    @field_validator("objective")
    @classmethod
    def _terms(cls, v, info: ValidationInfo):
        nvars = info.data.get("nvars")
        out = []
        for t in v:
            if isinstance(t, TermSpec):
                t = f"{t.coef} : " + " ".join(str(e) for e in t.exp)
            try:
                coef, exps = parse_term(t, nvars)
            except ParseError as e:
                raise ValueError(str(e)) from None
            out.append(term_line(coef, exps))
        return out

    @field_validator("alpha")
    @classmethod
    def _alpha(cls, v, info: ValidationInfo):
        if v is None:
            return None
        nvars = info.data.get("nvars")
        if nvars is not None and len(v) != nvars:
            raise ValueError(f"alpha has {len(v)} entries, nvars is {nvars}")
        return [_canon(c) for c in v]

    def polynomial(self) -> Polynomial:
        return Polynomial.from_terms(self.nvars, [parse_term(t, self.nvars) for t in self.objective])

    def to_instance(self) -> PopInstance:
        c = self.constraints
        if isinstance(c, PointsSpec):
            feasible = FiniteSet.of(c.points, nvars=self.nvars)
        else:
            feasible = PolyhedralSet.from_rows(c.B, c.b, nvars=self.nvars)
        return PopInstance(self.polynomial(), feasible, self.kind)

    @classmethod
    def from_instance(cls, p: PopInstance, alpha: Optional[Vector] = None) -> "ProblemFile":
        f = p.feasible
        if isinstance(f, FiniteSet):
            cons: Union[PolyhedronSpec, PointsSpec] = PointsSpec(points=[rat_list(x) for x in f.points])
        else:
            cons = PolyhedronSpec(B=[rat_list(f.B.row(i)) for i in range(f.m)], b=rat_list(f.b))
        return cls(nvars=p.nvars, objective=[term_line(c, e) for e, c in p.objective.sorted_terms()],
                   constraints=cons, kind=p.kind, alpha=None if alpha is None else rat_list(alpha))

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(exclude_none=True), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return sha(self.canonical_json())


def _locate(text: str, loc: Sequence[Any]) -> Tuple[Optional[int], Optional[int]]:
    """Line/column of the deepest key of `loc` found in order in the raw JSON; union tags never match."""
    pos, found = 0, None
    for part in loc:
        if not isinstance(part, str):
            continue
        m = re.compile(r'"' + re.escape(part) + r'"\s*:').search(text, pos)
        if m is None:
            continue
        pos = found = m.start()
    if found is None:
        return None, None
    line = text.count("\n", 0, found) + 1
    return line, found - (text.rfind("\n", 0, found) + 1) + 1


def load_problem(text: str) -> ProblemFile:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, line=e.lineno, column=e.colno) from e
    try:
        return ProblemFile.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        loc = first.get("loc", ())
        where = ".".join(str(p) for p in loc)
        line, col = _locate(text, loc)
        raise ParseError(f"{where}: {first.get('msg')}", line=line, column=col) from e


def read_problem(path: str) -> ProblemFile:
    with open(path, "r", encoding="utf-8") as f:
        return load_problem(f.read())


def dump_json(model: BaseModel, **kw: Any) -> str:
    return json.dumps(model.model_dump(**kw), sort_keys=True, indent=2) + "\n"

# -------------------------------------------------------------------
# Reports
# -------------------------------------------------------------------

class VerdictReport(BaseModel):
    status: str
    margin: float
    witness: Optional[List[str]] = None
    depth: int
    tol: float
    evaluations: int
    certificate: str

    @classmethod
    def from_verdict(cls, v: CopositivityVerdict) -> "VerdictReport":
        return cls(status=v.status, margin=v.margin, witness=None if v.witness is None else rat_list(v.witness),
                   depth=v.depth, tol=v.tol, evaluations=v.evaluations, certificate=v.certificate)


class ProbeReport(BaseModel):
    status: str
    scalars: Dict[str, float] = Field(default_factory=dict)
    margin: float
    attempts: int

    @classmethod
    def from_probe(cls, r: ProbeResult) -> "ProbeReport":
        return cls(status=r.status, scalars=r.scalars, margin=r.margin, attempts=r.attempts)


class CheckEntry(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class BruteForceReport(BaseModel):
    status: str
    value: str                      # "p/q" when exact, float repr after refinement
    argmins: List[List[str]] = Field(default_factory=list)
    evaluations: int = 0


class PipelineReport(BaseModel):
    digest: str
    kind: str
    nvars: int
    status: Literal["pass", "fail", "infeasible"] = "pass"
    alpha: Optional[List[str]] = None
    t: int = 1
    brute_force: Optional[BruteForceReport] = None
    lifted_value: Optional[str] = None
    lifted_argmins: Optional[List[List[str]]] = None
    shapes: Dict[str, List[int]] = Field(default_factory=dict)
    checks: List[CheckEntry] = Field(default_factory=list)
    dual_bound: Optional[float] = None
    dual_bound_source: Optional[str] = None
    probe: Optional[ProbeReport] = None
    gap: Optional[float] = None
    tol: float = 1e-8
    timing: Optional[Dict[str, float]] = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(CheckEntry(name=name, passed=bool(passed), detail=detail))

    def finish(self) -> "PipelineReport":
        if self.status != "infeasible":
            self.status = "pass" if all(c.passed for c in self.checks) else "fail"
        return self

    def to_json(self) -> str:
        data = self.model_dump()
        if data.get("timing") is None:
            data.pop("timing", None)
        return json.dumps(data, sort_keys=True, indent=2) + "\n"


def value_str(v: Union[Fraction, float]) -> str:
    return fraction_str(v) if isinstance(v, Fraction) else repr(float(v))
