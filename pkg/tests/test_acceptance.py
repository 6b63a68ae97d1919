"""Acceptance criteria, one test each, with a PASS/FAIL line printed per criterion."""

import io
import itertools
import json
import random
import time
from contextlib import contextmanager
from fractions import Fraction as F
from pathlib import Path

from afflog.cli import run
from afflog.convex import (AffineFunctional, FinMeasure, PointCloud, barycenter, check_certificate,
                           choquet_leq, concave_envelope, is_boundary, lp_solve,
                           maximal_rep, vertices)
from afflog.core import FinProbSpace
from afflog.evaluation import evaluate
from afflog.formula import FormulaClass, Max, Min, Scale, Sum, parse, prenex, to_text
from afflog.generators import (random_affine_formula, random_field, random_formula, random_section,
                               random_signature, random_structure, random_weights)
from afflog.modelalg import (CRInstance, FiniteField, convex_combine, cr_defect, direct_multiple,
                             los_check)
from afflog.theories import (PrASpec, all_uniform_systems, build_classical, build_pmp_z, build_pra,
                             canonical_form, cell_basis, class_defect, ergodic_decompose,
                             is_ergodic, pra_type_measure, recombined_system, unit_vector)
from afflog.typespace import FormulaBasis, affine_approx_search, realized_types, simplex_diagnostic

from oracles import orbit_partition, random_lp

SEED = 20240611
GOLDEN = Path(__file__).parent / "golden"


@contextmanager
def criterion(capsys, number, title, limit=None):
    """Print ``PASS``/``FAIL`` for a criterion; a time limit counts as part of it."""
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        took = time.perf_counter() - start
        if ok and limit is not None and took >= limit:
            ok = False
            title += f" (over the {limit} s limit)"
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {title} [{took:.2f} s]")
    assert limit is None or took < limit, f"criterion {number} took {took:.1f} s"


def test_criterion_1_los_exactness(capsys):
    rng = random.Random(SEED + 1)
    with criterion(capsys, 1, "Łoś identity on 200 random triples", limit=60):
        for _ in range(200):
            sig = random_signature(rng, unary=1, binary=1, functions=rng.randint(0, 1),
                                   constants=rng.randint(0, 1))
            field = random_field(rng, sig, max_factors=4, max_size=6)
            f = random_affine_formula(rng, sig, free=("x",), quantifiers=2)
            rep = los_check(field, f, {"x": random_section(rng, field)}, strict=True)
            assert rep.lhs == rep.rhs


def _convex_pair(rng, sig):
    f1 = random_affine_formula(rng, sig, free=("x",), quantifiers=1)
    f2 = random_affine_formula(rng, sig, free=("x",), quantifiers=1)
    return f1, f2


def test_criterion_2_convex_combination_identity(capsys):
    rng = random.Random(SEED + 2)
    checked = 0
    with criterion(capsys, 2, "convex-combination identity and inequality direction"):
        for _ in range(100):
            sig = random_signature(rng)
            field = random_field(rng, sig, max_factors=3, max_size=4, max_product=36)
            K = convex_combine(field)
            sec = {"x": random_section(rng, field)}
            f1, f2 = _convex_pair(rng, sig)
            assert los_check(field, f1, sec, combined=K).equal
            candidates = [Sum(Max(f1, f2), Scale(F(1, 2), f1)), Min(f1, f2),
                          random_formula(rng, sig, ("x",), depth=3)]
            for g in candidates:
                rep = los_check(field, g, sec, combined=K)
                if rep.formula_class in (FormulaClass.CONVEX, FormulaClass.CONCAVE):
                    checked += 1
                    assert rep.consistent
        assert checked >= 200


def _pra_check(M, n, cap):
    tc = realized_types(M, FormulaBasis.of(cell_basis(n)), cap=cap)
    diag = simplex_diagnostic(tc)
    k = 2 ** n
    assert diag.is_simplex and diag.report.verify()
    assert set(diag.report.vertices.points) == {unit_vector(k, i) for i in range(k)}
    for p, prov in zip(tc.points, tc.provenance):
        for tup in prov:
            assert barycenter(pra_type_measure(M, tup)) == p


def test_criterion_3_pra_type_spaces(capsys):
    with criterion(capsys, 3, "PrA cell clouds are simplices on unit vectors", limit=30):
        for weights in ([F(1, 2)] * 2, [F(1, 8)] * 8):
            M = build_pra(PrASpec(weights))
            for n in (1, 2):
                _pra_check(M, n, cap=1 << 16)


def test_criterion_4_non_simplex_witness(capsys):
    with criterion(capsys, 4, "M2 with a named atom has 4 extreme types and no simplex", limit=5):
        M = build_pra(PrASpec([F(1, 2), F(1, 2)], named=("a0",)))
        basis = FormulaBasis.of([parse("mu(cap(x, a0))", M.signature),
                                 parse("mu(cap(x, neg(a0)))", M.signature)])
        diag = simplex_diagnostic(realized_types(M, basis))
        assert diag.vertex_count == 4
        assert not diag.is_simplex and diag.report.verify()


def test_criterion_5_ergodic_decomposition(capsys):
    rng = random.Random(SEED + 5)
    systems = [s for n in range(1, 7) for s in all_uniform_systems(n)]
    with criterion(capsys, 5, f"ergodic decomposition of all {len(systems)} systems", limit=300):
        for s in systems:
            dec = ergodic_decompose(s)
            assert {frozenset(c.atoms) for c in dec.components} == orbit_partition(s.transform)
            assert dec.weights == tuple(F(len(c.atoms), s.size) for c in dec.components)
            assert all(is_ergodic(c.system) for c in dec.components)
            assert dec.verified
            assert canonical_form(recombined_system(dec)) == canonical_form(s)
            K = convex_combine(dec.field)
            S = build_pmp_z(s)
            for _ in range(20):
                f = random_affine_formula(rng, S.signature, free=("x",), quantifiers=2)
                sec = random_section(rng, dec.field)
                rep = los_check(dec.field, f, {"x": sec}, combined=K, strict=True)
                assert rep.equal
                assert evaluate(S, f, {"x": dec.isomorphism[dec.field.section_index(sec)]}) == rep.lhs


def _random_cloud(rng):
    dim = rng.randint(1, 4)
    pts = [tuple(F(rng.randint(0, 4), 4) for _ in range(dim)) for _ in range(rng.randint(1, 10))]
    return PointCloud.dedup(pts)


def _random_measure_on(rng, pts):
    k = rng.randint(1, min(4, len(pts)))
    chosen = rng.sample(list(pts), k)
    return FinMeasure.from_weights(chosen, random_weights(rng, k))


def _convex_function(rng, dim):
    pieces = [AffineFunctional(tuple(F(rng.randint(-3, 3), 2) for _ in range(dim)), F(rng.randint(-2, 2)))
              for _ in range(rng.randint(1, 3))]
    return lambda y: max(h(y) for h in pieces)


def test_criterion_6_choquet_suite(capsys):
    rng = random.Random(SEED + 6)
    with criterion(capsys, 6, "envelopes, Jensen, Choquet order and boundary representations", limit=60):
        for _ in range(50):
            C = _random_cloud(rng)
            vals = [F(rng.randint(-4, 4), 4) for _ in C]
            value = dict(zip(C.points, vals))
            V = vertices(C)
            for v in V:
                assert concave_envelope(C, vals, v) == value[v]
            reps = {}
            for _ in range(10):
                mu = _random_measure_on(rng, C.points)
                assert mu.integrate(value.__getitem__) <= concave_envelope(C, vals, barycenter(mu))
                # push every atom to its boundary representation: a dilation of mu
                pts, ws = [], []
                for p, w in mu.support:
                    if p not in reps:
                        reps[p] = maximal_rep(p, C)
                        assert is_boundary(reps[p], C) and barycenter(reps[p]) == p
                    rep = reps[p]
                    pts += rep.points
                    ws += [w * x for x in rep.weights]
                nu = FinMeasure.from_weights(pts, ws)
                res = choquet_leq(mu, nu)
                assert res.holds and res.verify(mu, nu)
                assert barycenter(mu) == barycenter(nu)
                for _ in range(20):
                    f = _convex_function(rng, C.dim)
                    assert mu.integrate(f) <= nu.integrate(f)


def _random_classical(rng):
    n = rng.randint(1, 3)
    rels = {"P": (1, {i for i in range(n) if rng.random() < 0.5}),
            "R": (2, {(i, j) for i in range(n) for j in range(n) if rng.random() < 0.5})}
    return build_classical(n, rels)


def test_criterion_7_classicality(capsys):
    rng = random.Random(SEED + 7)
    with criterion(capsys, 7, "classicality conditions and antitone affine approximation", limit=30):
        made = 0
        while made < 20:
            M, N = _random_classical(rng), _random_classical(rng)
            assert class_defect(M) == 0 and class_defect(N) == 0
            if max(M.size, N.size) < 2:
                continue
            w = F(rng.randint(1, 11), 12)
            K = convex_combine(FiniteField.of([w, 1 - w], [M, N]))
            assert class_defect(K) > 0
            made += 1
        C2 = build_classical(2, {"P": (1, {0}), "Q": (1, {1})})
        PQ4 = build_classical(4, {"P": (1, {0, 1}), "Q": (1, {1, 2})})
        for S in (C2, PQ4):
            sig = S.signature
            p, q = parse("P(x)", sig), parse("Q(x)", sig)
            r = parse("sup y. (P(y) + Q(y) - 1 - d(x, y))", sig)
            bases = [FormulaBasis.of(fs, ["x"]) for fs in ([p], [p, q], [p, q, r])]
            for target in ("max(P(x), Q(x))", "min(P(x), Q(x))", "abs(P(x) - Q(x))"):
                t = parse(target, sig)
                errors = [affine_approx_search(t, [S], b).error for b in bases]
                assert errors == sorted(errors, reverse=True)


def test_criterion_8_cr_defect_trend(capsys):
    M2 = build_pra(PrASpec([F(1, 2), F(1, 2)]))
    inst = CRInstance((parse("mu(x)", M2.signature),), (F(1, 2), F(1, 2)))
    with criterion(capsys, 8, "CR defect on L1(uniform n, M2) for n = 1, 2, 4", limit=60):
        values = [cr_defect(direct_multiple(FinProbSpace.uniform(n), M2, cap=1 << 8), inst)
                  for n in (1, 2, 4)]
        assert values == sorted(values, reverse=True)
        assert values == [F(1, 4), F(1, 8), F(1, 16)]


def test_criterion_9_infrastructure(capsys, monkeypatch):
    rng = random.Random(SEED + 9)
    with criterion(capsys, 9, "round trips, prenex, LP certificates, golden determinism"):
        for _ in range(500):
            sig = random_signature(rng, unary=2, binary=1, functions=1, constants=1)
            f = random_formula(rng, sig, ("x", "y"), depth=4)
            assert parse(to_text(f), sig) == f
        for _ in range(100):
            sig = random_signature(rng, unary=1, binary=1, functions=1, constants=1)
            f = random_formula(rng, sig, ("x", "y"), depth=3)
            g = prenex(f)
            S = random_structure(rng, sig, rng.randint(1, 4))
            for env in itertools.product(range(S.size), repeat=2):
                e = dict(zip(("x", "y"), env))
                assert evaluate(S, g, e) == evaluate(S, f, e)
        for _ in range(200):
            assert check_certificate(lp_solve(**random_lp(rng)))
        monkeypatch.chdir(GOLDEN / "inputs")
        cases = json.loads((GOLDEN / "cases.json").read_text())
        for name, argv in sorted(cases.items()):
            outs = []
            for _ in range(2):
                buf = io.StringIO()
                code = run(argv, stdout=buf)
                outs.append(f"exit {code}\n" + buf.getvalue())
            assert outs[0] == outs[1] == (GOLDEN / "expected" / f"{name}.out").read_text()

