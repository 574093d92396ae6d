import random
from fractions import Fraction as Q

import pytest

from cptpkit.conic import (DualAssignment, build_homogeneous_cptp, build_inhomogeneous_cptp, build_lifted_program,
                           build_lifting_data, dual_homogeneous, dual_inhomogeneous, lift_homogeneous_point,
                           lift_point, lift_recession_direction, lifted_atom, normalization_split, recession_atom,
                           solve_lifted_finite)
from cptpkit.errors import InfeasibleError, InvalidArgumentError
from cptpkit.oracle import copositive_check, dual_feasibility_check
from cptpkit.poly import Polynomial, evaluate
from cptpkit.pop import FiniteSet, PolyhedralSet, PopInstance, brute_force_solve, sample_feasible_points
from cptpkit.tensor import SymmetricTensor, adjoint_pairing_check, inner, mode_multiply_uniform, rank_one_power

H = Q(1, 2)


def test_lifting_data_examples(simplex_bilinear, interval_quadratic):
    d0 = build_lifting_data(simplex_bilinear)
    assert d0.A.to_rows() == [[-1, -1, 1], [1, 0, 0], [0, 1, 0], [0, 0, 1]]
    d1 = build_lifting_data(simplex_bilinear, (1, 1))
    assert d1.A.to_rows() == [[0, 0, 1], [1, 0, 0], [0, 1, 0], [0, 0, 1]]
    d2 = build_lifting_data(interval_quadratic, (1,))
    assert d2.A.to_rows() == [[0, 1], [1, 0], [0, 1]]
    assert d2.Abar.to_rows() == [[1, -1, -1]]
    assert d2.Aprime.to_rows() == [[0, 0, 1], [0, 1, 0], [0, 0, 1]]
    assert d2.abar == (0, 1, 1)
    assert d2.Atensor == rank_one_power((1, -1, -1), 2)


def test_lifting_data_errors(interval_quadratic, three_points):
    with pytest.raises(InvalidArgumentError):
        build_lifting_data(PopInstance(interval_quadratic.objective, PolyhedralSet.from_rows([[1]], [2])), (1,))
    with pytest.raises(InvalidArgumentError):
        build_lifting_data(interval_quadratic, (1,), t=0)
    with pytest.raises(InvalidArgumentError):
        build_lifting_data(three_points)


def test_t_rows(interval_quadratic):
    data = build_lifting_data(interval_quadratic, (1,), t=3)
    assert data.Abar.to_rows() == [[1, -1, -1]] * 3


def test_lift_homogeneous_point(simplex_bilinear):
    d0 = build_lifting_data(simplex_bilinear)
    assert lift_homogeneous_point((H, H), d0) == (H, H, 1)
    assert lift_homogeneous_point((0, 0), d0) == (0, 0, 1)
    d1 = build_lifting_data(simplex_bilinear, (1, 1))
    y = lift_homogeneous_point((H, H), d1)
    assert y == (H, H, 0)
    assert all(v >= 0 for v in d1.A.matvec(y))
    with pytest.raises(InvalidArgumentError):
        lift_homogeneous_point((1, 1), d1)


def test_homogeneous_program(simplex_bilinear):
    data = build_lifting_data(simplex_bilinear, (1, 1))
    prog = build_homogeneous_cptp(simplex_bilinear, data)
    assert prog.base_dim == 3 and prog.order == 2
    assert prog.objective.to_nested() == [[0, -1, 0], [-1, 0, 0], [0, 0, 0]]
    assert prog.equalities[0].tensor.to_nested() == [[1, 1, 1]] * 3
    assert prog.maps[0].matrix == data.A and prog.maps[0].image_dim == 4
    X = lifted_atom(prog, (H, H), data)
    assert inner(prog.objective, X) == -H
    with pytest.raises(InvalidArgumentError):
        build_inhomogeneous_cptp(simplex_bilinear, data)


def test_zero_objective_program():
    p = PopInstance(Polynomial.zero(2), PolyhedralSet.from_rows([[1, 1]], [1]), "homogeneous")
    prog = build_homogeneous_cptp(p, build_lifting_data(p, (1, 1), order=2))
    assert prog.objective.is_zero()
    assert len(prog.equalities) == 1


def test_inhomogeneous_program(interval_quadratic):
    data = build_lifting_data(interval_quadratic, (1,))
    prog = build_inhomogeneous_cptp(interval_quadratic, data)
    assert prog.base_dim == 3
    assert prog.objective.to_nested() == [[0, -1, 0], [-1, 1, 0], [0, 0, 0]]
    norm, hom = prog.equalities
    assert (norm.tensor, norm.rhs) == (rank_one_power((0, 1, 1), 2), 1)
    assert (hom.tensor, hom.rhs) == (rank_one_power((1, -1, -1), 2), 0)
    assert [m.image_dim for m in prog.maps] == [1, 3]
    X = lifted_atom(prog, (1,), data)
    assert X == rank_one_power((1, 1, 0), 2)
    assert inner(prog.objective, X) == -1
    assert inner(norm.tensor, X) == 1 and inner(hom.tensor, X) == 0


def test_constant_objective_tensor():
    p = PopInstance(Polynomial(1, {(0,): Q(5)}), PolyhedralSet.from_rows([[1]], [1]))
    prog = build_inhomogeneous_cptp(p, build_lifting_data(p, (1,)))
    assert prog.objective == SymmetricTensor(1, 3, {(0,): 5})


def test_lifted_atoms_feasible_and_preserve_objective(rng):
    cases = [
        (Polynomial.from_terms(2, [(-2, (1, 1)), (1, (2, 0))]), PolyhedralSet.from_rows([[1, 1]], [1]), "homogeneous"),
        (Polynomial.from_terms(2, [(1, (2, 1)), (-3, (1, 0)), (2, (0, 0))]),
         PolyhedralSet.from_rows([[1, 2], [2, 1]], [3, 3]), "inhomogeneous"),
    ]
    for f, F, kind in cases:
        p = PopInstance(f, F, kind)
        for alpha in [None, (Q(1, 3), Q(1, 3))]:
            data = build_lifting_data(p, alpha)
            prog = (build_homogeneous_cptp if kind == "homogeneous" else build_inhomogeneous_cptp)(p, data)
            for x in sample_feasible_points(F, 25, rng):
                v = lift_point(prog, x, data)
                X = rank_one_power(v, prog.order)
                for eq in prog.equalities:
                    assert inner(eq.tensor, X) == eq.rhs
                for mp in prog.maps:
                    assert all(c >= 0 for c in mp.matrix.matvec(v))
                    assert mode_multiply_uniform(X, mp.matrix) == rank_one_power(mp.matrix.matvec(v), prog.order)
                assert inner(prog.objective, X) == evaluate(f, x)


def test_recession_lifts():
    p = PopInstance(Polynomial(2, {(1, 1): Q(1)}), PolyhedralSet.from_rows([[1, -1]], [1]), "homogeneous")
    data = build_lifting_data(p)
    assert lift_recession_direction((1, 1), data) == (1, 1, 0)
    prog = build_homogeneous_cptp(p, data)
    R = recession_atom(prog, (1, 1), data)
    assert inner(prog.equalities[0].tensor, R) == 0
    with pytest.raises(InvalidArgumentError):
        lift_recession_direction((1, 0), data)


def test_lifted_program_atoms(three_points):
    lp = build_lifted_program(three_points)
    assert lp.c_atom((1, 1)) == rank_one_power((1, 1, 1), 2)
    assert lp.r_atom((0, 1)) == rank_one_power((0, 0, 1), 2)
    assert lp.cone.is_trivial()


def test_solve_lifted_finite(three_points):
    res = solve_lifted_finite(three_points)
    assert res.value == -2 == brute_force_solve(three_points).value
    assert res.argmins == [(0, 1), (1, 1)]
    assert res.atoms == [rank_one_power((1, 0, 1), 2), rank_one_power((1, 1, 1), 2)]
    assert res.program.objective.to_nested() == [[0, 2, -H], [2, -2, -1], [-H, -1, -1]]
    assert res.hull_member((1, 0)).to_nested() == [[1, 0, 1], [0, 0, 0], [1, 0, 1]]
    assert res.hull_member((H, H)).to_nested() == [[1, H, 1], [H, H, H], [1, H, 1]]
    with pytest.raises(InvalidArgumentError):
        res.hull_member((1, 1))


def test_solve_lifted_finite_small_sets():
    f = Polynomial(1, {(1,): Q(3)})
    single = solve_lifted_finite(PopInstance(f, FiniteSet.of([(2,)])))
    assert single.value == 6 and len(single.atoms) == 1
    two = solve_lifted_finite(PopInstance(f, FiniteSet.of([(2,), (1,)])))
    assert two.argmins == [(1,)]
    with pytest.raises(InfeasibleError):
        solve_lifted_finite(PopInstance(f, FiniteSet.of([], nvars=1)))


def test_homogeneous_dual_candidates(simplex_bilinear):
    data = build_lifting_data(simplex_bilinear, (1, 1))
    dual = dual_homogeneous(build_homogeneous_cptp(simplex_bilinear, data), data)
    assert dual.scalar_vars == ("lambda",)
    assert [(s.order, s.dim) for s in dual.slots] == [(2, 4)]
    assert dual.slots[0].adjoint == data.A.transpose()
    expr = dual.assemble(DualAssignment({"lambda": -3}))
    assert expr == dual.base + rank_one_power((1, 1, 1), 2).scale(3)
    assert dual_feasibility_check(dual, DualAssignment({"lambda": -3}), depth=2).feasible
    bad = dual_feasibility_check(dual, DualAssignment({"lambda": 0}), depth=2)
    assert not bad.feasible
    assert bad.verdict.witness == (H, H, 0)


def test_zero_objective_dual():
    p = PopInstance(Polynomial.zero(2), PolyhedralSet.from_rows([[1, 1]], [1]), "homogeneous")
    data = build_lifting_data(p, (1, 1), order=2)
    dual = dual_homogeneous(build_homogeneous_cptp(p, data), data)
    assert dual.assemble(DualAssignment()).is_zero()
    assert dual_feasibility_check(dual, DualAssignment(), depth=1).feasible


def test_inhomogeneous_dual(interval_quadratic):
    data = build_lifting_data(interval_quadratic, (1,))
    prog = build_inhomogeneous_cptp(interval_quadratic, data)
    dual = dual_inhomogeneous(prog, data)
    assert dual.scalar_vars == ("lambda", "mu")
    assert [(s.name, s.dim) for s in dual.slots] == [("U1", 1), ("U2", 3)]
    zero = dual.assemble(DualAssignment({"lambda": 0, "mu": 0}))
    assert zero == prog.objective
    assert copositive_check(zero, depth=2).status == "NotCopositive"
    # along (1, eps, 0) the linear term dominates, so mu = 0 never certifies
    lam_only = dual.assemble(DualAssignment({"lambda": -4, "mu": 0}))
    assert lam_only == prog.objective + rank_one_power((0, 1, 1), 2).scale(4)
    assert copositive_check(lam_only, depth=2).status == "NotCopositive"
    both = dual.assemble(DualAssignment({"lambda": -2, "mu": -2}))
    v = copositive_check(both, depth=6)
    assert v.status == "Copositive" and v.margin > 0


def test_dual_rejects_mismatch(simplex_bilinear, interval_quadratic):
    data = build_lifting_data(simplex_bilinear, (1, 1))
    prog = build_homogeneous_cptp(simplex_bilinear, data)
    with pytest.raises(InvalidArgumentError):
        dual_inhomogeneous(prog)
    with pytest.raises(InvalidArgumentError):
        dual_homogeneous(prog, build_lifting_data(simplex_bilinear))
    dual = dual_homogeneous(prog)
    with pytest.raises(InvalidArgumentError):
        dual.assemble(DualAssignment({"mu": 1}))
    with pytest.raises(InvalidArgumentError):
        dual.assemble(DualAssignment(multipliers={"U": SymmetricTensor.zeros(2, 3)}))


def test_multiplier_enters_with_adjoint(simplex_bilinear):
    data = build_lifting_data(simplex_bilinear, (1, 1))
    prog = build_homogeneous_cptp(simplex_bilinear, data)
    dual = dual_homogeneous(prog, data)
    U = rank_one_power((1, 0, 0, 1), 2)
    expr = dual.assemble(DualAssignment({"lambda": 0}, {"U": U}))
    assert expr == prog.objective - mode_multiply_uniform(U, data.A.transpose())
    X = rank_one_power((H, H, 0), 2)
    assert adjoint_pairing_check(U, X, data.A)


def test_weak_duality_on_atoms(simplex_bilinear, rng):
    data = build_lifting_data(simplex_bilinear, (1, 1))
    prog = build_homogeneous_cptp(simplex_bilinear, data)
    dual = dual_homogeneous(prog, data)
    lam = Q(-3)
    assert dual_feasibility_check(dual, DualAssignment({"lambda": lam}), depth=2).feasible
    for x in sample_feasible_points(data.feasible, 30, rng):
        assert lam <= inner(prog.objective, lifted_atom(prog, x, data))


def test_normalization_split_reconstructs():
    rng = random.Random(8)
    a = (Q(1), Q(1, 2), Q(1))
    for _ in range(20):
        gens = [tuple(Q(rng.randint(0, 4)) for _ in range(3)) for _ in range(4)]
        gens.append((0, 0, 0))
        split = normalization_split(gens, a)
        X = SymmetricTensor.zeros(2, 3)
        for g in gens:
            X = X + rank_one_power(g, 2)
        assert split.reconstruct(2, 3) == X
        for lam, z in split.positive:
            assert sum(ai * zi for ai, zi in zip(a, z)) == 1
    with pytest.raises(InvalidArgumentError):
        normalization_split([(1, -3, 0)], a)
