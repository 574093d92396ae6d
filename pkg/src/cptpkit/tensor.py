from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement, product
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple

from .errors import InvalidArgumentError
from .utils import Vector, as_fraction, as_vector

log = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]

# --------------------------------------------------------------------------------------
# Multi-indices
# --------------------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _multiplicity(order: int, signature: Tuple[int, ...]) -> int:
    out = math.factorial(order)
    for c in signature:
        out //= math.factorial(c)
    return out


def orbit_multiplicity(idx: Sequence[int]) -> int:
    """Number of distinct permutations of idx: d! / prod(m_k!)."""
    return _multiplicity(len(idx), tuple(sorted(Counter(idx).values())))


def canonical(idx: Sequence[int], order: int, dim: int) -> MultiIndex:
    if len(idx) != order:
        raise InvalidArgumentError(f"index {tuple(idx)} has length {len(idx)}, expected order {order}")
    for i in idx:
        if not 0 <= int(i) < dim:
            raise InvalidArgumentError(f"index {tuple(idx)} out of range for dimension {dim}")
    return tuple(sorted(int(i) for i in idx))


def canonical_indices(order: int, dim: int) -> Iterator[MultiIndex]:
    """All canonical multi-indices in lexicographic order."""
    return combinations_with_replacement(range(dim), order)

# --------------------------------------------------------------------------------------
# Matrices
# --------------------------------------------------------------------------------------

@dataclass(frozen=True)
class DenseMatrix:
    rows: int
    cols: int
    data: Tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if self.rows < 0 or self.cols < 0:
            raise InvalidArgumentError("matrix shape must be nonnegative")
        data = tuple(as_fraction(v) for v in self.data)
        if len(data) != self.rows * self.cols:
            raise InvalidArgumentError(
                f"matrix {self.rows}x{self.cols} needs {self.rows * self.cols} values, got {len(data)}")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Any]], cols: int | None = None) -> "DenseMatrix":
        rows = [list(r) for r in rows]
        width = cols if cols is not None else (len(rows[0]) if rows else 0)
        for r in rows:
            if len(r) != width:
                raise InvalidArgumentError("ragged matrix rows")
        return cls(len(rows), width, tuple(v for r in rows for v in r))

    @classmethod
    def identity(cls, n: int) -> "DenseMatrix":
        return cls(n, n, tuple(Fraction(int(i == j)) for i in range(n) for j in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "DenseMatrix":
        return cls(rows, cols, (Fraction(0),) * (rows * cols))

    def __getitem__(self, ij: Tuple[int, int]) -> Fraction:
        i, j = ij
        return self.data[i * self.cols + j]

    def row(self, i: int) -> Vector:
        return self.data[i * self.cols:(i + 1) * self.cols]

    def to_rows(self) -> List[List[Fraction]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def transpose(self) -> "DenseMatrix":
        return DenseMatrix(self.cols, self.rows,
                           tuple(self[i, j] for j in range(self.cols) for i in range(self.rows)))

    def matvec(self, v: Sequence[Any]) -> Vector:
        v = as_vector(v)
        if len(v) != self.cols:
            raise InvalidArgumentError(f"vector of length {len(v)} against {self.cols} columns")
        return tuple(sum((a * b for a, b in zip(self.row(i), v)), Fraction(0)) for i in range(self.rows))

    def vstack(self, other: "DenseMatrix") -> "DenseMatrix":
        if other.cols != self.cols:
            raise InvalidArgumentError("vstack needs equal column counts")
        return DenseMatrix(self.rows + other.rows, self.cols, self.data + other.data)

    def hstack(self, other: "DenseMatrix") -> "DenseMatrix":
        if other.rows != self.rows:
            raise InvalidArgumentError("hstack needs equal row counts")
        return DenseMatrix.from_rows([list(self.row(i)) + list(other.row(i)) for i in range(self.rows)],
                                     self.cols + other.cols)

# --------------------------------------------------------------------------------------
# Symmetric tensors
# --------------------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SymmetricTensor:
    """
    Order-d, dimension-n symmetric tensor stored once per permutation orbit,
    keyed by the sorted multi-index. Absent keys are zero.
    """

    order: int
    dim: int
    entries: Mapping[MultiIndex, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.order < 1 or self.dim < 1:
            raise InvalidArgumentError(f"order and dim must be >= 1, got ({self.order}, {self.dim})")
        clean: Dict[MultiIndex, Fraction] = {}
        for k, v in dict(self.entries).items():
            key = tuple(k)
            if key != canonical(key, self.order, self.dim):
                raise InvalidArgumentError(f"entry key {key} is not canonical (sorted)")
            clean[key] = as_fraction(v)
        object.__setattr__(self, "entries", clean)

    @classmethod
    def zeros(cls, order: int, dim: int) -> "SymmetricTensor":
        return cls(order, dim, {})

    @classmethod
    def from_any_indices(cls, order: int, dim: int, values: Mapping[Sequence[int], Any]) -> "SymmetricTensor":
        """Build from arbitrary-order index tuples; permutations of one orbit must agree."""
        out: Dict[MultiIndex, Fraction] = {}
        for k, v in values.items():
            key = canonical(k, order, dim)
            v = as_fraction(v)
            if key in out and out[key] != v:
                raise InvalidArgumentError(f"conflicting values for orbit {key}")
            out[key] = v
        return cls(order, dim, out)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.order, self.dim)

    def normalized(self) -> "SymmetricTensor":
        return SymmetricTensor(self.order, self.dim, {k: v for k, v in self.entries.items() if v != 0})

    def nonzero_items(self) -> List[Tuple[MultiIndex, Fraction]]:
        return sorted((k, v) for k, v in self.entries.items() if v != 0)

    def is_zero(self) -> bool:
        return not any(v != 0 for v in self.entries.values())

    def __getitem__(self, idx: Sequence[int]) -> Fraction:
        return entry(self, idx)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SymmetricTensor):
            return NotImplemented
        return self.shape == other.shape and self.nonzero_items() == other.nonzero_items()

    def __hash__(self) -> int:
        return hash((self.shape, tuple(self.nonzero_items())))

    def __repr__(self) -> str:
        return f"SymmetricTensor(order={self.order}, dim={self.dim}, nnz={len(self.nonzero_items())})"

    def _check_same_shape(self, other: "SymmetricTensor") -> None:
        if self.shape != other.shape:
            raise InvalidArgumentError(f"shape mismatch: {self.shape} vs {other.shape}")

    def __add__(self, other: "SymmetricTensor") -> "SymmetricTensor":
        self._check_same_shape(other)
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out.get(k, Fraction(0)) + v
        return SymmetricTensor(self.order, self.dim, out).normalized()

    def __neg__(self) -> "SymmetricTensor":
        return self.scale(-1)

    def __sub__(self, other: "SymmetricTensor") -> "SymmetricTensor":
        return self + (-other)

    def scale(self, c: Any) -> "SymmetricTensor":
        c = as_fraction(c)
        return SymmetricTensor(self.order, self.dim, {k: c * v for k, v in self.entries.items()}).normalized()

    def __mul__(self, c: Any) -> "SymmetricTensor":
        return self.scale(c)

    __rmul__ = __mul__

    def full_entries(self) -> Iterator[Tuple[MultiIndex, Fraction]]:
        """Every index tuple of the full (non-canonical) index space, zeros included."""
        for idx in product(range(self.dim), repeat=self.order):
            yield idx, self.entries.get(tuple(sorted(idx)), Fraction(0))

    def to_nested(self) -> Any:
        """Dense nested lists; handy for comparing small tensors against displayed matrices."""
        def build(prefix: Tuple[int, ...]) -> Any:
            if len(prefix) == self.order:
                return self.entries.get(tuple(sorted(prefix)), Fraction(0))
            return [build(prefix + (i,)) for i in range(self.dim)]
        return build(())

# --------------------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------------------

def rank_one_power(x: Sequence[Any], d: int) -> SymmetricTensor:
    """M_d(x): the d-fold outer product x o x o ... o x."""
    x = as_vector(x)
    if d < 1 or not x:
        raise InvalidArgumentError("rank_one_power needs d >= 1 and a nonempty vector")
    support = [i for i, v in enumerate(x) if v != 0]
    entries: Dict[MultiIndex, Fraction] = {}
    for idx in combinations_with_replacement(support, d):
        val = Fraction(1)
        for i in idx:
            val *= x[i]
        entries[idx] = val
    return SymmetricTensor(d, len(x), entries)


def inner(a: SymmetricTensor, b: SymmetricTensor) -> Fraction:
    if a.shape != b.shape:
        raise InvalidArgumentError(f"inner product shape mismatch: {a.shape} vs {b.shape}")
    small, big = (a, b) if len(a.entries) <= len(b.entries) else (b, a)
    total = Fraction(0)
    for k, v in small.entries.items():
        w = big.entries.get(k)
        if w:
            total += orbit_multiplicity(k) * v * w
    return total


def entry(t: SymmetricTensor, idx: Sequence[int]) -> Fraction:
    return t.entries.get(canonical(idx, t.order, t.dim), Fraction(0))


def form_value(t: SymmetricTensor, x: Sequence[Any]) -> Fraction:
    """<t, M_d(x)> without materialising M_d(x)."""
    x = as_vector(x)
    if len(x) != t.dim:
        raise InvalidArgumentError(f"point of length {len(x)} against tensor dimension {t.dim}")
    total = Fraction(0)
    for k, v in t.entries.items():
        if v == 0:
            continue
        term = orbit_multiplicity(k) * v
        for i in k:
            term *= x[i]
        total += term
    return total


def mode_multiply_uniform(t: SymmetricTensor, m: DenseMatrix) -> SymmetricTensor:
    """
    T x_1 M x_2 M ... x_d M for a p-by-n matrix M.

    Works on the associated form: the result's form is T(M^T z), expanded one factor at a
    time over canonical monomials, then divided back by orbit multiplicities.
    """
    if m.cols != t.dim:
        raise InvalidArgumentError(f"matrix has {m.cols} columns, tensor dimension is {t.dim}")
    if m.rows < 1:
        raise InvalidArgumentError("mode product needs a matrix with at least one row")
    linear = [{i: m[i, j] for i in range(m.rows) if m[i, j] != 0} for j in range(t.dim)]
    acc: Dict[MultiIndex, Fraction] = {}
    for key, v in t.entries.items():
        if v == 0:
            continue
        partial: Dict[MultiIndex, Fraction] = {(): v * orbit_multiplicity(key)}
        for j in key:
            nxt: Dict[MultiIndex, Fraction] = {}
            for k, c in partial.items():
                for i, w in linear[j].items():
                    nk = tuple(sorted(k + (i,)))
                    nxt[nk] = nxt.get(nk, Fraction(0)) + c * w
            partial = nxt
            if not partial:
                break
        for k, c in partial.items():
            acc[k] = acc.get(k, Fraction(0)) + c
    entries = {k: c / orbit_multiplicity(k) for k, c in acc.items() if c != 0}
    log.debug("mode product (%d,%d) -> (%d,%d): %d orbits", t.order, t.dim, t.order, m.rows, len(entries))
    return SymmetricTensor(t.order, m.rows, entries)


def adjoint_pairing_check(x: SymmetricTensor, a: SymmetricTensor, m: DenseMatrix) -> bool:
    """<x, a x M ... x M> == <x x M^T ... x M^T, a>, exactly."""
    if x.order != a.order or x.dim != m.rows or a.dim != m.cols:
        raise InvalidArgumentError(
            f"inconsistent shapes: x{ x.shape }, a{ a.shape }, m {m.rows}x{m.cols}")
    lhs = inner(x, mode_multiply_uniform(a, m))
    rhs = inner(mode_multiply_uniform(x, m.transpose()), a)
    return lhs == rhs


def tensor_sum(terms: Iterable[SymmetricTensor], order: int, dim: int) -> SymmetricTensor:
    out = SymmetricTensor.zeros(order, dim)
    for t in terms:
        out = out + t
    return out
