import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from afflog.core import CapExceededError, FinProbSpace, Signature, Structure
from afflog.evaluation import EvaluationError, carrier_cap, compile_formula, eval_all, evaluate
from afflog.formula import Inf, Sup, bounds, free_vars_ordered, parse
from afflog.generators import random_formula, random_signature, random_structure
from afflog.modelalg import FiniteField, convex_combine
from afflog.theories import PrASpec, build_pra, element_mask

from oracles import naive_eval


def two_point():
    return Structure.build(Signature(), ["0", "1"], lambda i, j: int(i != j))


def test_diameter_of_two_point_space():
    assert evaluate(two_point(), parse("sup x. sup y. d(x,y)")) == 1


def test_inf_mu_on_pra_is_zero():
    M = build_pra(PrASpec([F(1, 3), F(2, 3)]))
    assert evaluate(M, parse("inf x. mu(x)")) == 0


def test_eval_all_constant_and_distance():
    S = two_point()
    assert eval_all(S, parse("1"), 1) == [1, 1]
    assert eval_all(S, parse("d(x,y)")) == [0, 1, 1, 0]


def test_meet_with_named_atom_on_m2():
    M = build_pra(PrASpec([F(1, 2), F(1, 2)], named=("a0",)))
    f = parse("mu(cap(x, a0))", M.signature)
    values = dict(zip(M.carrier, eval_all(M, f)))
    # the named atom a, its complement, and the bottom and top elements
    assert values["{}"] == 0
    assert values["{a0}"] == F(1, 2)
    assert values["{a0,a1}"] == F(1, 2)
    assert values["{a1}"] == 0


def test_half_half_combination_value_identity():
    rng = random.Random(7)
    sig = random_signature(rng, unary=1, binary=1)
    M, N = random_structure(rng, sig, 3), random_structure(rng, sig, 2)
    field = FiniteField(FinProbSpace.from_weights([F(1, 2), F(1, 2)]), (M, N))
    K = convex_combine(field)
    f = parse("P0(x) + 1/2*(sup y. R0(x, y))")
    for a, b in itertools.product(range(3), range(2)):
        lhs = evaluate(K, f, {"x": field.section_index((a, b))})
        assert lhs == F(1, 2) * evaluate(M, f, {"x": a}) + F(1, 2) * evaluate(N, f, {"x": b})


def test_assignment_accepts_labels_and_indices():
    S = two_point()
    assert evaluate(S, parse("d(x,y)"), {"x": "0", "y": 1}) == 1


def test_unbound_variable_and_unknown_symbol():
    S = two_point()
    with pytest.raises(EvaluationError):
        evaluate(S, parse("d(x,y)"), {"x": 0})
    with pytest.raises(Exception):
        evaluate(S, parse("P(x)"), {"x": 0})


def test_cap_from_environment(monkeypatch):
    monkeypatch.setenv("AFFLOG_CAP", "3")
    assert carrier_cap() == 3
    with pytest.raises(CapExceededError):
        eval_all(two_point(), parse("d(x,y)"))
    assert carrier_cap(10) == 10


def test_pra_elements_by_mask():
    M = build_pra([F(1, 2), F(1, 2)])
    assert element_mask(M, "{a0,a1}") == 3


def _case(seed):
    rng = random.Random(seed)
    sig = random_signature(rng, unary=2, binary=1, functions=1, constants=1)
    return rng, sig, random_structure(rng, sig, rng.randint(1, 4))


@given(st.integers(0, 10**6))
def test_compiled_evaluation_matches_direct_recursion(seed):
    rng, sig, S = _case(seed)
    f = random_formula(rng, sig, ("x", "y"), depth=3)
    vs = free_vars_ordered(f)
    c = compile_formula(S, f, vs)
    for tup in itertools.product(range(S.size), repeat=len(vs)):
        assert c(tup) == naive_eval(S, f, dict(zip(vs, tup)))


@given(st.integers(0, 10**6))
def test_quantifiers_are_monotone(seed):
    rng, sig, S = _case(seed)
    body = random_formula(rng, sig, ("x", "y"), depth=2)
    inner = compile_formula(S, body, ("x", "y"))
    sup = compile_formula(S, Sup("x", body), ("y",))
    inf = compile_formula(S, Inf("x", body), ("y",))
    for y in range(S.size):
        for c in range(S.size):
            assert inf((y,)) <= inner((c, y)) <= sup((y,))


@given(st.integers(0, 10**6))
def test_values_stay_in_structural_interval(seed):
    rng, sig, S = _case(seed)
    f = random_formula(rng, sig, ("x",), depth=3)
    b = bounds(f, sig)
    assert all(b.lo <= v <= b.hi for v in eval_all(S, f, ("x",)))
