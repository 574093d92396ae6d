from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import InvalidArgumentError
from .tensor import MultiIndex, SymmetricTensor, orbit_multiplicity
from .utils import as_fraction, as_vector

log = logging.getLogger(__name__)

Exponent = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Sparse polynomial over `nvars` variables: exponent vector -> nonzero rational."""

    nvars: int
    terms: Mapping[Exponent, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.nvars < 1:
            raise InvalidArgumentError("a polynomial needs at least one variable")
        clean: Dict[Exponent, Fraction] = {}
        for e, c in dict(self.terms).items():
            e = tuple(int(v) for v in e)
            if len(e) != self.nvars or any(v < 0 for v in e):
                raise InvalidArgumentError(f"bad exponent {e} for {self.nvars} variables")
            c = as_fraction(c)
            if c != 0:
                clean[e] = c
        object.__setattr__(self, "terms", clean)

    @classmethod
    def from_terms(cls, nvars: int, terms: Iterable[Tuple[Any, Sequence[int]]]) -> "Polynomial":
        """Merge duplicate exponents, drop zeros."""
        acc: Dict[Exponent, Fraction] = {}
        for coef, exps in terms:
            e = tuple(int(v) for v in exps)
            acc[e] = acc.get(e, Fraction(0)) + as_fraction(coef)
        return cls(nvars, acc)

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars, {})

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self.terms}) <= 1

    def sorted_terms(self) -> List[Tuple[Exponent, Fraction]]:
        return sorted(self.terms.items())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.nvars, tuple(self.sorted_terms())))

    def __add__(self, other: "Polynomial") -> "Polynomial":
        if other.nvars != self.nvars:
            raise InvalidArgumentError("cannot add polynomials over different variable counts")
        return Polynomial.from_terms(self.nvars, [(c, e) for e, c in self.terms.items()]
                                     + [(c, e) for e, c in other.terms.items()])

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(f"x{i + 1}^{p}" if p > 1 else f"x{i + 1}" for i, p in enumerate(e) if p)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    def pad(self, nvars: int) -> "Polynomial":
        """Same polynomial viewed in more variables; the new ones carry no terms."""
        if nvars < self.nvars:
            raise InvalidArgumentError(f"cannot pad {self.nvars} variables down to {nvars}")
        extra = (0,) * (nvars - self.nvars)
        return Polynomial(nvars, {e + extra: c for e, c in self.terms.items()})


@dataclass(frozen=True)
class HomoDecomposition:
    """Homogeneous parts keyed by degree; missing degrees are empty."""

    nvars: int
    parts: Mapping[int, Polynomial]

    def part(self, degree: int) -> Polynomial:
        return self.parts.get(degree, Polynomial.zero(self.nvars))

    def recombine(self) -> Polynomial:
        out = Polynomial.zero(self.nvars)
        for p in self.parts.values():
            out = out + p
        return out

# --------------------------------------------------------------------------------------
# Evaluation and degree splitting
# --------------------------------------------------------------------------------------

def evaluate(f: Polynomial, x: Sequence[Any]) -> Fraction:
    x = as_vector(x)
    if len(x) != f.nvars:
        raise InvalidArgumentError(f"point of length {len(x)} for {f.nvars} variables")
    total = Fraction(0)
    for e, c in f.terms.items():
        term = c
        for xi, p in zip(x, e):
            if p:
                term *= xi ** p
        total += term
    return total


def decompose(f: Polynomial) -> HomoDecomposition:
    buckets: Dict[int, Dict[Exponent, Fraction]] = {}
    for e, c in f.terms.items():
        buckets.setdefault(sum(e), {})[e] = c
    return HomoDecomposition(f.nvars, {d: Polynomial(f.nvars, t) for d, t in sorted(buckets.items())})


def top_component(f: Polynomial) -> Polynomial:
    if f.is_zero():
        raise InvalidArgumentError("the zero polynomial has no top-degree component")
    return decompose(f).part(f.degree)

# --------------------------------------------------------------------------------------
# Polynomial <-> tensor
# --------------------------------------------------------------------------------------

def _weight(d: int, counts: Iterable[int]) -> Fraction:
    num = 1
    for c in counts:
        num *= math.factorial(c)
    return Fraction(num, math.factorial(d))


def coefficient_tensor(f: Polynomial, d: int) -> SymmetricTensor:
    """
    The order-d tensor in n+1 coordinates with f(x) = <A, M_d(1, x)>.
    Coordinate 0 is the constant slot, variable i sits at coordinate i+1.
    """
    if d < 1:
        raise InvalidArgumentError("coefficient tensor order must be >= 1")
    if d < f.degree:
        raise InvalidArgumentError(f"order {d} is below the polynomial degree {f.degree}")
    entries: Dict[MultiIndex, Fraction] = {}
    for e, c in f.terms.items():
        slack = d - sum(e)
        idx: List[int] = [0] * slack
        for i, p in enumerate(e):
            idx.extend([i + 1] * p)
        entries[tuple(idx)] = _weight(d, [slack, *e]) * c
    return SymmetricTensor(d, f.nvars + 1, entries)


def homogeneous_tensor(f: Polynomial, d: Optional[int] = None) -> SymmetricTensor:
    """The order-d tensor in n coordinates with f(x) = <A, M_d(x)>; no constant slot."""
    if not f.is_homogeneous():
        raise InvalidArgumentError("homogeneous_tensor needs a homogeneous polynomial")
    if d is None:
        if f.is_zero():
            raise InvalidArgumentError("the order of the zero form must be given explicitly")
        d = f.degree
    if d < 1 or (not f.is_zero() and f.degree != d):
        raise InvalidArgumentError(f"polynomial of degree {f.degree} is not a form of order {d}")
    entries: Dict[MultiIndex, Fraction] = {}
    for e, c in f.terms.items():
        idx: List[int] = []
        for i, p in enumerate(e):
            idx.extend([i] * p)
        entries[tuple(idx)] = _weight(d, e) * c
    return SymmetricTensor(d, f.nvars, entries)


def from_homogeneous_tensor(t: SymmetricTensor) -> Polynomial:
    """Read a symmetric tensor back as the form <t, M_d(x)>."""
    terms: Dict[Exponent, Fraction] = {}
    for k, v in t.entries.items():
        if v == 0:
            continue
        e = [0] * t.dim
        for i in k:
            e[i] += 1
        terms[tuple(e)] = orbit_multiplicity(k) * v
    return Polynomial(t.dim, terms)


def embed_tensor(t: SymmetricTensor, newdim: int) -> SymmetricTensor:
    """Zero-padding embedding of S^{d,n} into S^{d,newdim}."""
    if newdim < t.dim:
        raise InvalidArgumentError(f"cannot embed dimension {t.dim} into {newdim}")
    return SymmetricTensor(t.order, newdim, dict(t.entries))
