import random
from fractions import Fraction as Q

import pytest

from cptpkit.errors import InvalidArgumentError
from cptpkit.tensor import (DenseMatrix, SymmetricTensor, adjoint_pairing_check, canonical_indices, entry,
                            form_value, inner, mode_multiply_uniform, orbit_multiplicity, rank_one_power,
                            tensor_sum)


def _random_tensor(rng, d, n, density=0.6):
    vals = {idx: Q(rng.randint(-6, 6), rng.randint(1, 4))
            for idx in canonical_indices(d, n) if rng.random() < density}
    return SymmetricTensor(d, n, vals)


def _random_matrix(rng, p, n):
    return DenseMatrix.from_rows([[Q(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(n)] for _ in range(p)])


def test_orbit_multiplicity():
    assert orbit_multiplicity((0, 1, 2)) == 6
    assert orbit_multiplicity((1, 1, 2)) == 3
    assert orbit_multiplicity((2, 2, 2)) == 1
    assert orbit_multiplicity((0, 0, 1, 1)) == 6


def test_rank_one_power_examples():
    t = rank_one_power([1, 2], 2)
    assert t.to_nested() == [[1, 2], [2, 4]]
    assert rank_one_power([Q(1, 2), Q(1, 2)], 3).to_nested() == [[[Q(1, 8)] * 2] * 2] * 2
    assert rank_one_power([0, 0, 0], 2).is_zero()
    with pytest.raises(InvalidArgumentError):
        rank_one_power([1], 0)


def test_inner_examples():
    x = rank_one_power([1, 2], 2)
    y = rank_one_power([3, 1], 2)
    # <M(x), M(y)> = (x.y)^2
    assert inner(x, y) == 25
    assert inner(x, SymmetricTensor.zeros(2, 2)) == 0
    with pytest.raises(InvalidArgumentError):
        inner(x, SymmetricTensor.zeros(2, 3))


def test_entry_any_permutation():
    t = SymmetricTensor(3, 4, {(0, 1, 2): Q(1, 6)})
    for idx in [(0, 1, 2), (2, 1, 0), (1, 0, 2)]:
        assert entry(t, idx) == Q(1, 6)
        assert t[idx] == Q(1, 6)
    assert entry(t, (3, 3, 3)) == 0
    with pytest.raises(InvalidArgumentError):
        entry(t, (0, 1, 4))
    with pytest.raises(InvalidArgumentError):
        entry(t, (0, 1))


def test_non_canonical_keys_rejected():
    with pytest.raises(InvalidArgumentError):
        SymmetricTensor(2, 2, {(1, 0): 1})
    t = SymmetricTensor.from_any_indices(2, 2, {(1, 0): 3, (0, 1): 3})
    assert t[(0, 1)] == 3
    with pytest.raises(InvalidArgumentError):
        SymmetricTensor.from_any_indices(2, 2, {(1, 0): 3, (0, 1): 2})


def test_arithmetic():
    a = SymmetricTensor(2, 2, {(0, 0): 1, (0, 1): 2})
    b = SymmetricTensor(2, 2, {(0, 1): -2, (1, 1): 5})
    assert (a + b) == SymmetricTensor(2, 2, {(0, 0): 1, (1, 1): 5})
    assert (a - a).is_zero()
    assert (2 * a)[(0, 1)] == 4
    assert tensor_sum([a, b, -b], 2, 2) == a


def test_mode_multiply_identity_and_projection():
    t = SymmetricTensor(2, 2, {(0, 0): 1, (0, 1): 2, (1, 1): 3})
    assert mode_multiply_uniform(t, DenseMatrix.identity(2)) == t
    # first row of M picks coordinate 0: T(M^T z) = T(z0, 0)
    m = DenseMatrix.from_rows([[1, 0]])
    assert mode_multiply_uniform(t, m) == SymmetricTensor(2, 1, {(0, 0): 1})


def test_mode_multiply_rank_one():
    rng = random.Random(7)
    for _ in range(20):
        n, p, d = rng.randint(1, 3), rng.randint(1, 3), rng.randint(1, 3)
        x = [Q(rng.randint(-3, 3)) for _ in range(n)]
        m = _random_matrix(rng, p, n)
        assert mode_multiply_uniform(rank_one_power(x, d), m) == rank_one_power(m.matvec(x), d)


def test_form_value_matches_inner():
    rng = random.Random(3)
    for _ in range(50):
        d, n = rng.randint(1, 3), rng.randint(1, 4)
        t = _random_tensor(rng, d, n)
        x = [Q(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(n)]
        assert form_value(t, x) == inner(t, rank_one_power(x, d))


def test_adjoint_identity_suite():
    rng = random.Random(2024)
    for _ in range(500):
        d = rng.randint(1, 3)
        n, p = rng.randint(1, 4), rng.randint(1, 4)
        x = _random_tensor(rng, d, p)
        a = _random_tensor(rng, d, n)
        m = _random_matrix(rng, p, n)
        assert adjoint_pairing_check(x, a, m)


def test_adjoint_shape_mismatch():
    with pytest.raises(InvalidArgumentError):
        adjoint_pairing_check(SymmetricTensor.zeros(2, 2), SymmetricTensor.zeros(2, 3), DenseMatrix.identity(3))


def test_dense_matrix_helpers():
    a = DenseMatrix.from_rows([[1, 2], [3, 4]])
    assert a.transpose().to_rows() == [[1, 3], [2, 4]]
    assert a.matvec([1, 1]) == (3, 7)
    assert a.vstack(DenseMatrix.identity(2)).rows == 4
    assert DenseMatrix.zeros(2, 1).hstack(a).to_rows() == [[0, 1, 2], [0, 3, 4]]
    with pytest.raises(InvalidArgumentError):
        DenseMatrix.from_rows([[1, 2], [3]])
