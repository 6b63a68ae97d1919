import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from afflog.convex import FinMeasure, PointCloud, vertices
from afflog.core import CapExceededError, FinProbSpace
from afflog.generators import random_weights
from afflog.modelalg import convex_combine, direct_multiple
from afflog.theories import (PMP_AXIOMS, PRA_AXIOMS, PMPSystem, PrASpec, TheoryError,
                             all_uniform_systems, axiom_values, build_classical, build_pmp_z,
                             build_pra, canonical_form, cell_basis, class_defect, class_values,
                             ergodic_decompose, generates, invariant_elements, is_classical,
                             is_ergodic, isomorphic, pmp_qf_type_measure, pmp_qf_vector,
                             pra_cell_vector, pra_type_measure, recombined_system,
                             shift_invariant, unit_vector, verify_isomorphism)

from oracles import label_atoms, naive_eval, orbit_partition

H = F(1, 2)


def random_spec(rng, k=None):
    k = k or rng.randint(1, 3)
    return PrASpec(random_weights(rng, k))


def random_system(rng, n=None):
    n = n or rng.randint(1, 5)
    perm = list(range(n))
    rng.shuffle(perm)
    return PMPSystem.uniform(perm)


# ---------------------------------------------------------------------------
# probability algebras


def test_pra_carrier_and_measure():
    M = build_pra(PrASpec([F(1, 3), F(2, 3)]))
    assert M.carrier == ("{}", "{a0}", "{a1}", "{a0,a1}")
    assert [M.value("mu", [e]) for e in M.carrier] == [0, F(1, 3), F(2, 3), 1]
    assert M.dist("{a0}", "{a1}") == 1
    assert M.apply("neg", ["{a0}"]) == M.index("{a1}")


@given(st.integers(0, 10**6))
def test_pra_metric_is_measure_of_symmetric_difference(seed):
    spec = random_spec(random.Random(seed))
    M = build_pra(spec)
    w = dict(zip(spec.labels, spec.weights))
    for a in M.carrier:
        for b in M.carrier:
            diff = label_atoms(a) ^ label_atoms(b)
            assert M.dist(a, b) == sum((w[x] for x in diff), F(0))


@given(st.integers(0, 10**6))
def test_pra_axioms_hold(seed):
    M = build_pra(random_spec(random.Random(seed)))
    assert set(axiom_values(M, PRA_AXIOMS).values()) == {0}


def test_pra_spec_validation():
    with pytest.raises(TheoryError):
        PrASpec([H, F(1, 3)])
    with pytest.raises(TheoryError):
        PrASpec([1], named=("b",))
    with pytest.raises(TheoryError):
        PrASpec([H, H], labels=("mu", "a1"), named=("mu",))
    with pytest.raises(CapExceededError):
        build_pra([F(1, 11)] * 11)


def test_named_atoms_are_constants():
    M = build_pra(PrASpec([H, H], named=("a0",)))
    assert M.constant("a0") == M.index("{a0}")


def test_pra_type_measure_examples():
    M = build_pra(PrASpec([F(1, 3), F(2, 3)]))
    assert pra_type_measure(M, ["{a0}"]) == FinMeasure.from_weights([(1, 0), (0, 1)], [F(1, 3), F(2, 3)])
    # [DERIVED] cells of ({a0}, one): only x & y and neg x & y are nonempty
    assert pra_cell_vector(M, ["{a0}", "{a0,a1}"]) == (F(1, 3), 0, F(2, 3), 0)


@given(st.integers(0, 10**6))
def test_cell_vector_matches_cell_formulas(seed):
    rng = random.Random(seed)
    M = build_pra(random_spec(rng))
    n = rng.randint(1, 3)
    tup = [rng.randrange(M.size) for _ in range(n)]
    env = {f"x{i}": a for i, a in enumerate(tup)}
    assert pra_cell_vector(M, tup) == tuple(naive_eval(M, f, env) for f in cell_basis(n))
    assert sum(pra_cell_vector(M, tup)) == 1


def test_unit_vector():
    assert unit_vector(3, 1) == (0, 1, 0)


# ---------------------------------------------------------------------------
# classical structures


def test_classical_builder_is_classical():
    C = build_classical(3, {"P": (1, {0}), "R": (2, {(0, 1), (1, 2)})})
    assert is_classical(C) and class_defect(C) == 0
    assert C.value("R", ["0", "1"]) == 1 and C.value("R", ["1", "0"]) == 0
    with pytest.raises(TheoryError):
        build_classical(2, {"P": (1, [0, H])})


def test_direct_multiple_of_classical_is_not():
    C2 = build_classical(2, {"P": (1, {0})})
    L = direct_multiple(FinProbSpace.uniform(2), C2)
    vals = class_values(L)
    # [DERIVED] the section (0,1) has P = 1/2 and distance 1/2 from the diagonal
    assert vals["P two-valued"] == H and vals["d two-valued"] == H
    assert class_defect(L) == H and not is_classical(L)


def test_non_boolean_structure_values():
    M = build_pra(PrASpec([F(1, 3), F(2, 3)]))
    assert class_defect(M) == F(1, 3)


# ---------------------------------------------------------------------------
# measure-preserving systems


def test_two_by_two_system():
    s = PMPSystem.uniform([1, 0, 3, 2])
    assert s.orbits() == [(0, 1), (2, 3)]
    assert invariant_elements(s) == [0, 3, 12, 15]
    assert not is_ergodic(s)
    assert canonical_form(s) == ((2, H), (2, H))


def test_cycle_is_ergodic():
    s = PMPSystem.uniform([1, 2, 0])
    assert is_ergodic(s) and invariant_elements(s) == [0, 7]
    assert s.image(1) == 2 and s.image(1, -1) == 4 and s.image(1, 3) == 1


def test_system_validation():
    with pytest.raises(TheoryError):
        PMPSystem.uniform([0, 0])
    with pytest.raises(TheoryError):
        PMPSystem(FinProbSpace.from_weights([F(1, 3), F(2, 3)]), (1, 0))


def test_isomorphism_invariant():
    a = PMPSystem.uniform([1, 0, 2])
    b = PMPSystem.uniform([0, 2, 1])
    assert isomorphic(a, b)
    assert not isomorphic(a, PMPSystem.uniform([1, 2, 0]))


@given(st.integers(0, 10**6))
def test_pmp_axioms_and_transform_tables(seed):
    s = random_system(random.Random(seed), n=random.Random(seed).randint(1, 3))
    M = build_pmp_z(s)
    assert set(axiom_values(M, PMP_AXIOMS).values()) == {0}
    for m in range(M.size):
        assert M.apply("T", [m]) == s.image(m)
        assert M.apply("Tinv", [m]) == s.image(m, -1)


@given(st.integers(0, 10**6))
def test_decomposition_matches_orbits(seed):
    s = random_system(random.Random(seed))
    dec = ergodic_decompose(s)
    assert {frozenset(c.atoms) for c in dec.components} == orbit_partition(s.transform)
    assert dec.weights == tuple(F(len(c.atoms), s.size) for c in dec.components)
    assert all(is_ergodic(c.system) for c in dec.components)
    assert dec.verified
    assert canonical_form(recombined_system(dec)) == canonical_form(s)


def test_broken_isomorphism_is_rejected():
    s = PMPSystem.uniform([1, 0, 3, 2])
    dec = ergodic_decompose(s)
    K = convex_combine(dec.field)
    bad = list(dec.isomorphism)
    bad[0], bad[1] = bad[1], bad[0]
    assert verify_isomorphism(K, build_pmp_z(s), dec.isomorphism)
    assert not verify_isomorphism(K, build_pmp_z(s), bad)


def test_uniform_system_count():
    assert sum(len(all_uniform_systems(n)) for n in range(1, 7)) == 873


def test_swap_qf_type():
    s = PMPSystem.uniform([1, 0])
    vec = pmp_qf_vector(s, [1], 1)
    # [DERIVED] atom 0 lies in the cell (1,0,1) and atom 1 in (0,1,0)
    assert {i: v for i, v in enumerate(vec) if v} == {2: H, 5: H}
    assert shift_invariant(vec, 1, 1)
    assert pmp_qf_type_measure(s, [1], 1).weights == (H, H)


@given(st.integers(0, 10**6))
def test_qf_type_window_zero_is_the_algebra_type(seed):
    rng = random.Random(seed)
    s = random_system(rng)
    tup = [rng.randrange(1 << s.size) for _ in range(rng.randint(1, 2))]
    assert pmp_qf_vector(s, tup, 0) == pra_cell_vector(build_pmp_z(s), tup)


@given(st.integers(0, 10**6))
def test_qf_types_are_shift_invariant(seed):
    rng = random.Random(seed)
    s = random_system(rng)
    tup = [rng.randrange(1 << s.size) for _ in range(rng.randint(1, 2))]
    h = rng.randint(1, 2)
    vec = pmp_qf_vector(s, tup, h)
    assert sum(vec) == 1 and shift_invariant(vec, len(tup), h)


def test_generation():
    assert generates(PMPSystem.uniform([1, 0]), [1])
    assert not generates(PMPSystem.uniform([1, 0, 3, 2]), [0b0101])
    assert generates(PMPSystem.uniform([1, 0, 3, 2]), [0b0001, 0b0100])


def test_ergodic_systems_give_extreme_cylinder_measures():
    # [DERIVED] vertex enumeration over all systems on at most 4 uniform atoms
    rows = []
    for m in range(1, 5):
        for s in all_uniform_systems(m):
            for a in range(1 << m):
                if generates(s, [a]):
                    rows.append((pmp_qf_vector(s, [a], 2), is_ergodic(s)))
    V = set(vertices(PointCloud.dedup([v for v, _ in rows])).points)
    assert all((v in V) == erg for v, erg in rows)
    # a non-generating tuple of a non-ergodic system can still land on a vertex
    v = pmp_qf_vector(PMPSystem.uniform([1, 0, 3, 2]), [0b0101], 2)
    assert v in V


def test_small_algebras():
    one = build_pra([1])
    assert one.carrier == ("{}", "{a0}")
    assert build_pra([H, H]).size == 4
    M = build_pra([F(1, 3), F(2, 3)])
    assert M.value("mu", [M.apply("cup", ["{a0}", "{a1}"])]) == 1


def test_one_type_examples():
    M = build_pra([F(1, 3), F(2, 3)])
    assert pra_cell_vector(M, ["{a0,a1}"]) == (1, 0)
    assert pra_cell_vector(M, ["{a0}"]) == (F(1, 3), F(2, 3))
    v = pra_cell_vector(M, ["{a1}", "{a1}"])
    assert v[1] == v[2] == 0 and (v[0], v[3]) == (F(2, 3), F(1, 3))


def test_classical_relation_table():
    C = build_classical(3, {"P": (1, {0})})
    assert [C.value("P", [e]) for e in C.carrier] == [1, 0, 0]
    assert build_classical(2).size == 2


def test_invariant_element_examples():
    assert invariant_elements(PMPSystem.uniform([0, 1])) == [0, 1, 2, 3]
    swap = PMPSystem.uniform([1, 0])
    assert invariant_elements(swap) == [0, 3] and is_ergodic(swap)
    assert is_ergodic(PMPSystem.uniform([0]))


def test_decomposition_examples():
    cyc = ergodic_decompose(PMPSystem.uniform([1, 2, 0]))
    assert cyc.weights == (1,) and cyc.isomorphism == tuple(range(8))
    dec = ergodic_decompose(PMPSystem.uniform([1, 0, 3, 2]))
    assert dec.weights == (H, H)
    assert all(c.system.transform == (1, 0) for c in dec.components)
    # orbit lengths 3, 2, 1
    six = ergodic_decompose(PMPSystem.uniform([1, 2, 0, 4, 3, 5]))
    assert six.weights == (H, F(1, 3), F(1, 6)) and six.verified
