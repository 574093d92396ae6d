from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .conic import CopositiveProgram, CpTensorProgram, EqualityConstraint, MembershipMap, MultiplierSlot
from .errors import CptpError, ParseError
from .poly import Polynomial
from .tensor import DenseMatrix, SymmetricTensor
from .utils import as_fraction, fraction_str

log = logging.getLogger(__name__)

PROGRAM_TAG = "cptp-program"
DUAL_TAG = "copositive-program"

# --------------------------------------------------------------------------------------
# Line cursor
# --------------------------------------------------------------------------------------

@dataclass
class _Line:
    no: int
    text: str
    tokens: List[str] = field(default_factory=list)

    def col(self, k: int) -> int:
        """1-based column of token k."""
        pos = 0
        for i, tok in enumerate(self.tokens):
            pos = self.text.index(tok, pos)
            if i == k:
                return pos + 1
            pos += len(tok)
        return len(self.text) + 1


class _Cursor:
    def __init__(self, text: str):
        self.lines: List[_Line] = []
        for i, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0].rstrip()
            if body.strip():
                self.lines.append(_Line(i, body, body.split()))
        self.pos = 0
        self.last = len(text.splitlines())

    def peek(self) -> Optional[_Line]:
        return self.lines[self.pos] if self.pos < len(self.lines) else None

    def next(self, what: str) -> _Line:
        ln = self.peek()
        if ln is None:
            raise ParseError(f"unexpected end of input, expected {what}", line=self.last + 1, column=1)
        self.pos += 1
        return ln


def _rational(ln: _Line, k: int) -> Fraction:
    try:
        return as_fraction(ln.tokens[k])
    except (CptpError, IndexError):
        raise ParseError(f"expected a rational, got {ln.tokens[k] if k < len(ln.tokens) else 'nothing'!r}",
                         line=ln.no, column=ln.col(k)) from None


def _int(ln: _Line, k: int, minimum: int = 0) -> int:
    try:
        v = int(ln.tokens[k])
    except (ValueError, IndexError):
        raise ParseError("expected an integer", line=ln.no, column=ln.col(k)) from None
    if v < minimum:
        raise ParseError(f"expected an integer >= {minimum}", line=ln.no, column=ln.col(k))
    return v


def _expect(ln: _Line, word: str, arity: Optional[int] = None) -> None:
    if ln.tokens[0] != word:
        raise ParseError(f"expected {word!r}, got {ln.tokens[0]!r}", line=ln.no, column=ln.col(0))
    if arity is not None and len(ln.tokens) != arity + 1:
        raise ParseError(f"{word!r} takes {arity} arguments", line=ln.no, column=ln.col(0))


def _is_header(ln: Optional[_Line]) -> bool:
    return ln is not None and ln.tokens[0][0].isalpha()

# --------------------------------------------------------------------------------------
# Tensors
# --------------------------------------------------------------------------------------

def tensor_lines(t: SymmetricTensor) -> List[str]:
    lines = [f"symtensor {t.order} {t.dim}"]
    for idx, v in t.nonzero_items():
        lines.append(" ".join(str(i) for i in idx) + f" {fraction_str(v)}")
    return lines


def dump_tensor(t: SymmetricTensor) -> str:
    return "\n".join(tensor_lines(t)) + "\n"


def _read_tensor(cur: _Cursor) -> SymmetricTensor:
    head = cur.next("'symtensor d n'")
    _expect(head, "symtensor", 2)
    d, n = _int(head, 1, 1), _int(head, 2, 1)
    entries: Dict[Tuple[int, ...], Fraction] = {}
    while cur.peek() is not None and not _is_header(cur.peek()):
        ln = cur.next("tensor entry")
        if len(ln.tokens) != d + 1:
            raise ParseError(f"entry needs {d} indices and a value", line=ln.no, column=1)
        idx = tuple(_int(ln, k) for k in range(d))
        for k, i in enumerate(idx):
            if i >= n:
                raise ParseError(f"index {i} out of range for dimension {n}", line=ln.no, column=ln.col(k))
        if list(idx) != sorted(idx):
            raise ParseError("indices must be non-decreasing", line=ln.no, column=1)
        if idx in entries:
            raise ParseError(f"duplicate entry {idx}", line=ln.no, column=1)
        entries[idx] = _rational(ln, d)
    return SymmetricTensor(d, n, entries)


def parse_tensor(text: str) -> SymmetricTensor:
    cur = _Cursor(text)
    t = _read_tensor(cur)
    extra = cur.peek()
    if extra is not None:
        raise ParseError("trailing content after tensor", line=extra.no, column=1)
    return t

# --------------------------------------------------------------------------------------
# Polynomials
# --------------------------------------------------------------------------------------

def term_line(coef: Fraction, exps: Sequence[int]) -> str:
    return f"{fraction_str(coef)} : " + " ".join(str(e) for e in exps)


def parse_term(s: str, nvars: Optional[int] = None, line: Optional[int] = None) -> Tuple[Fraction, Tuple[int, ...]]:
    """`p/q : e1 e2 ... en`"""
    if ":" not in s:
        raise ParseError(f"term {s!r} is missing ':'", line=line, column=1)
    lhs, rhs = s.split(":", 1)
    try:
        coef = as_fraction(lhs)
    except CptpError:
        raise ParseError(f"bad coefficient {lhs.strip()!r}", line=line, column=1) from None
    try:
        exps = tuple(int(e) for e in rhs.split())
    except ValueError:
        raise ParseError(f"bad exponents in {s!r}", line=line, column=len(lhs) + 2) from None
    if any(e < 0 for e in exps) or (nvars is not None and len(exps) != nvars):
        raise ParseError(f"term {s!r} needs {nvars} nonnegative exponents", line=line, column=len(lhs) + 2)
    return coef, exps


def dump_polynomial(f: Polynomial) -> str:
    return "".join(term_line(c, e) + "\n" for e, c in f.sorted_terms())


def parse_polynomial(text: str, nvars: int) -> Polynomial:
    terms = []
    for i, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            terms.append(parse_term(body, nvars, line=i))
    return Polynomial.from_terms(nvars, terms)

# --------------------------------------------------------------------------------------
# Matrices
# --------------------------------------------------------------------------------------

def matrix_lines(m: DenseMatrix) -> List[str]:
    return [f"matrix {m.rows} {m.cols}"] + [" ".join(fraction_str(v) for v in row) for row in m.to_rows()]


def _read_matrix(cur: _Cursor) -> DenseMatrix:
    head = cur.next("'matrix rows cols'")
    _expect(head, "matrix", 2)
    r, c = _int(head, 1), _int(head, 2)
    rows = []
    for _ in range(r):
        ln = cur.next("matrix row")
        if len(ln.tokens) != c:
            raise ParseError(f"matrix row needs {c} entries", line=ln.no, column=1)
        rows.append([_rational(ln, k) for k in range(c)])
    return DenseMatrix.from_rows(rows, c)

# --------------------------------------------------------------------------------------
# Program exports
# --------------------------------------------------------------------------------------

def _vec(v: Sequence[Fraction]) -> str:
    return " ".join(fraction_str(x) for x in v)


def dump_program(prog: CpTensorProgram) -> str:
    lines = [f"{PROGRAM_TAG} {prog.kind}", "meta",
             f"order {prog.order}", f"base_dim {prog.base_dim}", f"t {prog.t}", f"alpha {_vec(prog.alpha)}",
             "objective", *tensor_lines(prog.objective)]
    for eq in prog.equalities:
        lines += [f"eq {eq.name} {fraction_str(eq.rhs)}", *tensor_lines(eq.tensor)]
    for mp in prog.maps:
        lines += [f"map {mp.name} {mp.image_dim}", *matrix_lines(mp.matrix)]
    lines.append("end")
    return "\n".join(lines) + "\n"


def _read_tag(cur: _Cursor, tag: str) -> str:
    ln = cur.next(f"'{tag} <kind>'")
    if ln.tokens[0] != tag:
        raise ParseError(f"expected a {tag} export, found {ln.tokens[0]!r}", line=ln.no, column=1)
    if len(ln.tokens) != 2 or ln.tokens[1] not in ("homogeneous", "inhomogeneous"):
        raise ParseError("kind must be homogeneous or inhomogeneous", line=ln.no, column=ln.col(1))
    return ln.tokens[1]


def _read_meta(cur: _Cursor, keys: Sequence[str]) -> Dict[str, _Line]:
    _expect(cur.next("'meta'"), "meta", 0)
    out: Dict[str, _Line] = {}
    for key in keys:
        ln = cur.next(key)
        _expect(ln, key)
        out[key] = ln
    return out


def _read_end(cur: _Cursor) -> None:
    ln = cur.next("'end'")
    _expect(ln, "end", 0)
    extra = cur.peek()
    if extra is not None:
        raise ParseError("trailing content after 'end'", line=extra.no, column=1)


def parse_program(text: str) -> CpTensorProgram:
    cur = _Cursor(text)
    kind = _read_tag(cur, PROGRAM_TAG)
    meta = _read_meta(cur, ("order", "base_dim", "t", "alpha"))
    order, base_dim, t = _int(meta["order"], 1, 1), _int(meta["base_dim"], 1, 1), _int(meta["t"], 1, 1)
    alpha = tuple(_rational(meta["alpha"], k) for k in range(1, len(meta["alpha"].tokens)))
    _expect(cur.next("'objective'"), "objective", 0)
    objective = _read_tensor(cur)
    eqs: List[EqualityConstraint] = []
    maps: List[MembershipMap] = []
    while cur.peek() is not None and cur.peek().tokens[0] in ("eq", "map"):
        ln = cur.next("block")
        _expect(ln, ln.tokens[0], 2)
        if ln.tokens[0] == "eq":
            eqs.append(EqualityConstraint(ln.tokens[1], _read_tensor(cur), _rational(ln, 2)))
        else:
            m = _read_matrix(cur)
            if m.rows != _int(ln, 2):
                raise ParseError(f"map {ln.tokens[1]} declares {ln.tokens[2]} rows, matrix has {m.rows}",
                                 line=ln.no, column=ln.col(2))
            maps.append(MembershipMap(ln.tokens[1], m))
    _read_end(cur)
    try:
        return CpTensorProgram(kind, order, base_dim, objective, tuple(eqs), tuple(maps), alpha, t)
    except CptpError as e:
        raise ParseError(f"inconsistent program export: {e}") from e


def dump_dual(dual: CopositiveProgram) -> str:
    lines = [f"{DUAL_TAG} {dual.kind}", "meta",
             f"order {dual.order}", f"base_dim {dual.base_dim}",
             f"lift_vector {_vec(dual.lift_vector)}", f"normalization_vector {_vec(dual.normalization_vector)}",
             "base", *tensor_lines(dual.base)]
    for v in dual.scalar_vars:
        lines += [f"scalar {v}", *tensor_lines(dual.coefficients[v])]
    for s in dual.slots:
        lines += [f"slot {s.name} {s.order} {s.dim}", *matrix_lines(s.adjoint)]
    lines.append("end")
    return "\n".join(lines) + "\n"


def parse_dual(text: str) -> CopositiveProgram:
    cur = _Cursor(text)
    kind = _read_tag(cur, DUAL_TAG)
    meta = _read_meta(cur, ("order", "base_dim", "lift_vector", "normalization_vector"))
    vec = {k: tuple(_rational(meta[k], i) for i in range(1, len(meta[k].tokens)))
           for k in ("lift_vector", "normalization_vector")}
    _expect(cur.next("'base'"), "base", 0)
    base = _read_tensor(cur)
    names: List[str] = []
    coeffs: Dict[str, SymmetricTensor] = {}
    slots: List[MultiplierSlot] = []
    while cur.peek() is not None and cur.peek().tokens[0] in ("scalar", "slot"):
        ln = cur.next("block")
        if ln.tokens[0] == "scalar":
            _expect(ln, "scalar", 1)
            names.append(ln.tokens[1])
            coeffs[ln.tokens[1]] = _read_tensor(cur)
        else:
            _expect(ln, "slot", 3)
            slots.append(MultiplierSlot(ln.tokens[1], _int(ln, 2, 1), _int(ln, 3, 1), _read_matrix(cur)))
    _read_end(cur)
    return CopositiveProgram(kind, _int(meta["order"], 1, 1), _int(meta["base_dim"], 1, 1), base,
                             tuple(names), coeffs, tuple(slots), vec["lift_vector"], vec["normalization_vector"])
