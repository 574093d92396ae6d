from fractions import Fraction as Q

import pytest

from cptpkit.conic import build_dual, build_cptp, build_lifting_data
from cptpkit.errors import ParseError
from cptpkit.formats import (dump_dual, dump_polynomial, dump_program, dump_tensor, parse_dual, parse_polynomial,
                             parse_program, parse_tensor, parse_term)
from cptpkit.poly import coefficient_tensor
from cptpkit.schemas import ProblemFile, load_problem
from cptpkit.tensor import SymmetricTensor


def test_tensor_text(cubic):
    t = coefficient_tensor(cubic, 3)
    text = dump_tensor(t)
    assert text.splitlines()[0] == "symtensor 3 4"
    assert "0 0 0 -3/1" in text.splitlines()
    assert parse_tensor(text) == t
    assert parse_tensor("# comment\nsymtensor 2 2\n0 1 1/2  # off-diagonal\n") == SymmetricTensor(2, 2, {(0, 1): Q(1, 2)})


@pytest.mark.parametrize("text,line", [
    ("symtensor 2 2\n1 0 1\n", 2),
    ("symtensor 2 2\n0 2 1\n", 2),
    ("symtensor 2 2\n0 1 x\n", 2),
    ("symtensor 2 2\n0 1 1\n0 1 2\n", 3),
    ("symtensor 2\n", 1),
    ("symtensor 2 2\n0 1 1\nsymtensor 1 1\n", 3),
])
def test_tensor_parse_errors(text, line):
    with pytest.raises(ParseError) as e:
        parse_tensor(text)
    assert e.value.line == line


def test_terms_and_polynomials(cubic):
    assert parse_term("-3/2 : 1 0") == (Q(-3, 2), (1, 0))
    with pytest.raises(ParseError):
        parse_term("1 : 1 0", nvars=3)
    with pytest.raises(ParseError):
        parse_term("1 1 0")
    assert parse_polynomial(dump_polynomial(cubic), 3) == cubic


def test_program_export(simplex_bilinear, interval_quadratic):
    for p, alpha, t in [(simplex_bilinear, (1, 1), 1), (interval_quadratic, (1,), 3)]:
        prog = build_cptp(p, build_lifting_data(p, alpha, t))
        text = dump_program(prog)
        back = parse_program(text)
        assert dump_program(back) == text
        assert back.kind == p.kind and back.t == t
        assert [e.name for e in back.equalities] == [e.name for e in prog.equalities]
        assert back.objective == prog.objective


def test_dual_export(interval_quadratic):
    data = build_lifting_data(interval_quadratic, (1,))
    dual = build_dual(build_cptp(interval_quadratic, data), data)
    text = dump_dual(dual)
    back = parse_dual(text)
    assert back.scalar_vars == ("lambda", "mu")
    assert back.base == dual.base and back.normalization_vector == (0, 1, 1)
    assert dump_dual(back) == text


def test_export_tags_are_checked(simplex_bilinear):
    prog = build_cptp(simplex_bilinear, build_lifting_data(simplex_bilinear, (1, 1)))
    dual_text = dump_dual(build_dual(prog))
    with pytest.raises(ParseError) as e:
        parse_program(dual_text)
    assert e.value.line == 1
    with pytest.raises(ParseError):
        parse_dual(dump_program(prog))
    with pytest.raises(ParseError):
        parse_program(dump_program(prog) + "extra\n")


def test_problem_file_normalizes_terms(data_dir):
    with open(f"{data_dir}/simplex_bilinear.json", encoding="utf-8") as f:
        pf = load_problem(f.read())
    assert pf.objective == ["-2/1 : 1 1"]
    assert pf.alpha == ["1/1", "1/1"]
    again = ProblemFile.from_instance(pf.to_instance(), alpha=(1, 1))
    assert again.digest() == pf.digest()


def test_problem_file_errors():
    with pytest.raises(ParseError) as e:
        load_problem('{\n  "nvars": 2,\n  "objective": [,]\n}')
    assert e.value.line == 3
    with pytest.raises(ParseError):
        load_problem('{"nvars": 1, "objective": ["1 : 1"], "constraints": {"B": [[1]]}}')
    with pytest.raises(ParseError):
        load_problem('{"nvars": 1, "objective": ["1 : 1 1"], "constraints": {"points": [[0]]}}')
    with pytest.raises(ParseError):
        load_problem('{"nvars": 0, "objective": [], "constraints": {"points": []}}')


def test_problem_file_errors_carry_position():
    text = ('{\n'
            '  "nvars": 1,\n'
            '  "objective": ["1 : 1"],\n'
            '  "constraints": {"B": [[1]]}\n'
            '}')
    with pytest.raises(ParseError) as e:
        load_problem(text)
    assert e.value.line == 4 and e.value.column == 3
    assert "line 4" in str(e.value)
    text = ('{\n'
            '  "nvars": 2,\n'
            '  "objective": ["1 : 1 0"],\n'
            '  "constraints": {"points": [[0, 0]]},\n'
            '  "alpha": ["1"]\n'
            '}')
    with pytest.raises(ParseError, match="alpha has 1 entries") as e:
        load_problem(text)
    assert e.value.line == 5


def test_term_objects_accepted():
    pf = load_problem('{"nvars": 2, "objective": [{"coef": "1/2", "exp": [2, 0]}], "constraints": {"points": [[1, 0]]}}')
    assert pf.objective == ["1/2 : 2 0"]
