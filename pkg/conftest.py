import os
import random
import sys
from fractions import Fraction

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "src"))

from cptpkit.poly import Polynomial  # noqa: E402
from cptpkit.pop import FiniteSet, PolyhedralSet, PopInstance  # noqa: E402

DATA = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data", "problems")


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def cubic():
    """x1^3 + x2^3 + x3^3 + x1 x2 + x2 x3 + x1 + x2 - 3"""
    return Polynomial.from_terms(3, [
        (1, (3, 0, 0)), (1, (0, 3, 0)), (1, (0, 0, 3)),
        (1, (1, 1, 0)), (1, (0, 1, 1)), (1, (1, 0, 0)), (1, (0, 1, 0)), (-3, (0, 0, 0)),
    ])


@pytest.fixture
def three_points():
    f = Polynomial.from_terms(2, [(4, (1, 0)), (-1, (0, 1)), (-2, (2, 0)), (-2, (1, 1)), (-1, (0, 2))])
    return PopInstance(f, FiniteSet.of([(0, 0), (0, 1), (1, 1)]))


@pytest.fixture
def simplex_bilinear():
    f = Polynomial(2, {(1, 1): Fraction(-2)})
    return PopInstance(f, PolyhedralSet.from_rows([[1, 1]], [1]), "homogeneous")


@pytest.fixture
def interval_quadratic():
    f = Polynomial(1, {(2,): Fraction(1), (1,): Fraction(-2)})
    return PopInstance(f, PolyhedralSet.from_rows([[1]], [1]), "inhomogeneous")
