import itertools

import pytest
from hypothesis import given, strategies as st

from maxwellkit.bracket import (
    MAXWELL, bracket_reduce, code_of, energy_differential, enumerate_all, generic_table,
    maxwell_residuals, parse_bracket, parse_second, parse_triple, primitive_table,
    second_reduce, triple_reduce,
)
from maxwellkit.errors import DegenerateBracket, InvalidTriple, ParseError
from maxwellkit.models import get_model, uncalibrated_ideal
from maxwellkit.symcore import Evaluator, Field, is_zero, parse_expr, to_text

MODELS = ("ideal", "generalized", "vdw", "feynman")


def _codes(key):
    return tuple(int(c) for c in key.strip("()").replace("(", "").replace(")", "").split(","))


@pytest.fixture(scope="module")
def tables():
    return {name: primitive_table(get_model(name)) for name in MODELS}


@pytest.mark.parametrize("model", MODELS)
def test_triples_match_frozen_oracle(model, oracle, tables):
    data = oracle["models"][model]
    m, t = get_model(model), tables[model]
    for key, want in data["triples"].items():
        tr = _codes(key)
        if want is None:
            with pytest.raises(DegenerateBracket):
                triple_reduce(tr, t)
            continue
        e = triple_reduce(tr, t)
        for (px, py), w in zip(data["points"], want):
            got = float(m.evaluator(px, py)(e))
            assert got == pytest.approx(w, rel=1e-9, abs=1e-12), (key, px, py)


@pytest.mark.parametrize("model", ("ideal", "vdw"))
def test_second_derivatives_match_frozen_oracle(model, oracle, tables):
    data = oracle["models"][model]
    m, t = get_model(model), tables[model]
    for key, want in data["second"].items():
        a, b, c, d, e = _codes(key)
        if want is None:
            with pytest.raises(DegenerateBracket):
                second_reduce((a, b, c), d, e, t)
            continue
        expr = second_reduce((a, b, c), d, e, t)
        for (px, py), w in zip(data["points"], want):
            got = float(m.evaluator(px, py)(expr))
            assert got == pytest.approx(w, rel=1e-8, abs=1e-10), (key, px, py)


def test_generic_table_matches_oracle_under_unit_jacobian(oracle):
    t = generic_table(True)
    data = oracle["generic"]
    for key, want in data["triples"].items():
        e = triple_reduce(_codes(key), t)
        for vals, w in zip(data["assignments"], want):
            fields = {Field("f"): vals["f"], Field("g"): vals["g"],
                      Field("f", 1, 0): vals["f_1"], Field("f", 0, 1): vals["f_2"],
                      Field("g", 1, 0): vals["g_1"], Field("g", 0, 1): vals["g_2"]}
            got = float(Evaluator(vals["x"], vals["y"], fields=fields)(e))
            assert got == pytest.approx(w, rel=1e-9, abs=1e-12), key


def test_generic_table_never_mentions_g2():
    t = generic_table(True)
    for tr in itertools.permutations(range(1, 9), 3):
        assert "g_2" not in to_text(triple_reduce(tr, t))


def test_primitive_rows():
    t = generic_table(False)
    row = lambda i: (to_text(t.dx(i)), to_text(t.dy(i)))
    assert row(1) == ("1", "0") and row(2) == ("0", "1")
    assert row(3) == ("f_1", "f_2") and row(4) == ("g_1", "g_2")


@pytest.mark.parametrize("which, dx, dy", [
    ("E13", "y - g*f_1", "-g*f_2"),
    ("E14", "y + f*g_1", "f*g_2"),
    ("E23", "-g*f_1", "-x - g*f_2"),
    ("E24", "f*g_1", "f*g_2 - x"),
])
def test_energy_differentials(which, dx, dy):
    ex, ey = energy_differential(which)
    assert is_zero(ex - parse_expr(dx)) and is_zero(ey - parse_expr(dy))


def test_energy_differential_rejects_non_energy():
    with pytest.raises(InvalidTriple):
        energy_differential("T")


def test_maxwell_residuals_vanish_iff_calibrated():
    assert all(is_zero(r) for r in maxwell_residuals(generic_table(True)))
    free = maxwell_residuals(generic_table(False))
    assert not any(is_zero(r) for r in free)
    raw = primitive_table(uncalibrated_ideal())
    assert not any(is_zero(r, True) for r in maxwell_residuals(raw))
    for name in MODELS:
        t = primitive_table(get_model(name))
        assert all(is_zero(r, t.positive) for r in maxwell_residuals(t)), name


def test_maxwell_table_labels():
    assert [m[0] for m in MAXWELL][0] == "(2,4,1) - (3,1,4)"


def test_worked_reductions():
    t = generic_table(True)
    assert is_zero(triple_reduce((4, 3, 2), t) - parse_expr("g_1/f_1"))
    # (4,3,1) = g_2/f_2 with g_2 eliminated
    assert is_zero(triple_reduce((4, 3, 1), t) - parse_expr("(1 + f_2*g_1)/(f_1*f_2)"))
    assert is_zero(triple_reduce((4, 1, 3), t) - parse_expr("-1/f_2"))


@given(st.permutations(range(1, 9)))
def test_bracket_antisymmetry_and_chain(perm):
    a, b, c, d, e, f = perm[:6]
    t = generic_table(True)
    ab_cd = bracket_reduce((a, b, c, d), t)
    assert is_zero(ab_cd + bracket_reduce((b, a, c, d), t))
    chain = bracket_reduce((a, b, e, f), t) * bracket_reduce((e, f, c, d), t)
    assert is_zero(ab_cd - chain)


@given(st.permutations(range(1, 9)))
def test_triple_reciprocity_and_cyclic_rule(perm):
    i, j, k = perm[:3]
    t = generic_table(True)
    assert is_zero(triple_reduce((i, j, k), t) * triple_reduce((j, i, k), t) - 1)
    cyc = triple_reduce((i, j, k), t) * triple_reduce((j, k, i), t) * triple_reduce((k, i, j), t)
    assert is_zero(cyc + 1)


def test_trivial_triples_and_errors():
    t = generic_table(True)
    assert triple_reduce((3, 3, 1), t) == parse_expr("1")
    assert triple_reduce((1, 3, 1), t) == parse_expr("0")
    with pytest.raises(InvalidTriple):
        triple_reduce((1, 2, 2), t)
    with pytest.raises(InvalidTriple):
        triple_reduce((9, 1, 2), t)
    with pytest.raises(InvalidTriple):
        bracket_reduce((1, 1, 2, 3), t)
    assert bracket_reduce((1, 2, 1, 2), t) == parse_expr("1")


def test_mixed_partials_coincide():
    t = generic_table(True)
    assert is_zero(second_reduce((5, 1, 2), 2, 1, t) - second_reduce((5, 2, 1), 1, 2, t))


def test_degenerate_pair_is_named():
    t = primitive_table(get_model("ideal"))
    with pytest.raises(DegenerateBracket, match=r"\(1,3,6\)"):
        triple_reduce((1, 3, 6), t)


def test_text_forms():
    assert parse_triple("(S,T,p)") == (4, 3, 1)
    assert parse_triple("( 4 , 3 , 1 )") == (4, 3, 1)
    assert parse_bracket("[x,y;u,v]") == (1, 2, 3, 4)
    assert parse_second("((5,1,2),2,1)") == ((5, 1, 2), 2, 1)
    assert code_of("E¹³") == 5 and code_of("H") == 6
    with pytest.raises(ParseError):
        parse_triple("(4,3)")
    with pytest.raises(InvalidTriple):
        parse_triple("(4,3,Q)")


def test_census_counts():
    generic = enumerate_all(generic_table(True))
    assert generic.enumerated == {"triples": 336, "brackets": 1680}
    assert (generic.triples, generic.brackets, generic.degenerate) == (336, 1680, [])
    ideal = enumerate_all(primitive_table(get_model("ideal")))
    assert ideal.enumerated == {"triples": 336, "brackets": 1680}
    # T, H and E are functions of one another on the ideal gas
    for code in ideal.degenerate:
        held = set(code[1:]) if len(code) == 3 else set(code[2:])
        assert held in ({3, 6}, {3, 8}, {6, 8}), code
