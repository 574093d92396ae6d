from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Any, Callable, Iterable, List, Sequence, Tuple, TypeVar

from .errors import InvalidArgumentError

T = TypeVar("T")
Vector = Tuple[Fraction, ...]


def ensure_dir(d: str) -> None:
    if d:
        os.makedirs(d, exist_ok=True)


def sha(s: str) -> str:
    return hashlib.sha256((s or "").encode("utf-8")).hexdigest()[:32]


def as_fraction(x: Any) -> Fraction:
    """Exact rational from int, Fraction, "p/q" / decimal strings; floats go through their repr."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise InvalidArgumentError(f"not a rational: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise InvalidArgumentError(f"not a rational: {x!r}") from e
    raise InvalidArgumentError(f"not a rational: {x!r}")


def as_vector(xs: Iterable[Any]) -> Vector:
    return tuple(as_fraction(x) for x in xs)


def fraction_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def parse_vector_arg(s: str) -> Vector:
    """Comma separated rationals as given on the command line, e.g. "1,1/2"."""
    parts = [p for p in (s or "").replace(" ", "").split(",") if p]
    return as_vector(parts)


def dot(x: Sequence[Fraction], y: Sequence[Fraction]) -> Fraction:
    if len(x) != len(y):
        raise InvalidArgumentError(f"length mismatch: {len(x)} vs {len(y)}")
    return sum((a * b for a, b in zip(x, y)), Fraction(0))


def map_chunks(fn: Callable[[Any], T], chunks: List[Any], threads: int) -> List[T]:
    """Run fn over chunks on a thread pool; order of results follows chunks."""
    if threads <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, chunks))
