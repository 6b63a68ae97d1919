import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from afflog.convex import (AffineFunctional, FinMeasure, GeometryError, PointCloud,
                           affine_max_at_vertices, barycenter, choquet_leq, concave_envelope,
                           hull_membership, in_hull, is_boundary, is_simplex, maximal_rep,
                           separate, vertex_indices, vertices)

from oracles import choquet_leq_1d, hull_vertices_1d, hull_vertices_2d, in_hull_2d

H = F(1, 2)
SQUARE = PointCloud(((0, 0), (1, 0), (0, 1), (1, 1), (H, H)))


def random_cloud(rng, dim=2, den=4):
    n = rng.randint(1, 8)
    return PointCloud.dedup([tuple(F(rng.randint(0, den), den) for _ in range(dim)) for _ in range(n)])


def random_measure(rng, dim=2, den=4):
    k = rng.randint(1, 4)
    pts = [tuple(F(rng.randint(0, den), den) for _ in range(dim)) for _ in range(k)]
    cuts = sorted(rng.sample(range(1, 12), k - 1))
    ws = [F(b - a, 12) for a, b in zip([0, *cuts], [*cuts, 12])]
    return FinMeasure.from_weights(pts, ws)


def spread(rng, mu, den=8):
    """A dilation of ``mu``: each atom split symmetrically in a random direction."""
    pts, ws = [], []
    for p, w in mu.support:
        v = tuple(F(rng.randint(-2, 2), den) for _ in p)
        pts += [tuple(a + b for a, b in zip(p, v)), tuple(a - b for a, b in zip(p, v))]
        ws += [w / 2, w / 2]
    return FinMeasure.from_weights(pts, ws)


def test_cloud_validation():
    with pytest.raises(GeometryError):
        PointCloud(())
    with pytest.raises(GeometryError):
        PointCloud(((0,), (0,)))
    with pytest.raises(GeometryError):
        PointCloud(((0,), (0, 1)))
    assert len(PointCloud.dedup([(0,), (0,), (1,)])) == 2


def test_measure_validation():
    with pytest.raises(GeometryError):
        FinMeasure((((0,), F(1, 2)),))
    with pytest.raises(GeometryError):
        FinMeasure((((0,), F(3, 2)), ((1,), F(-1, 2))))
    assert FinMeasure.from_weights([(0,), (1,), (0,)], [H, 0, H]).support == (((0,), 1),)


def test_barycenter():
    mu = FinMeasure.from_weights([(0, 0), (1, 0), (0, H)], [H, F(1, 3), F(1, 6)])
    assert barycenter(mu) == (F(1, 3), F(1, 12))
    assert barycenter(FinMeasure.from_weights([(0, 0), (1, 0), (0, 1)], [H, F(1, 3), F(1, 6)])) == (F(1, 3), F(1, 6))


def test_membership_certificates():
    inside = hull_membership((F(1, 4), F(3, 4)), SQUARE)
    assert inside.inside and inside.verify((F(1, 4), F(3, 4)), SQUARE)
    outside = hull_membership((2, 0), SQUARE)
    assert not outside.inside and outside.verify((2, 0), SQUARE)
    with pytest.raises(GeometryError):
        hull_membership((0,), SQUARE)


def test_separate_square():
    # [DERIVED] the best unit-l1 functional has value 1 at (2,0) and is x1 - 1
    h = separate((F(2), F(0)), SQUARE)
    assert h == AffineFunctional((1, 0), F(-1))
    with pytest.raises(GeometryError):
        separate((H, H), SQUARE)


def test_vertices_on_the_line():
    C = PointCloud(((0,), (F(1, 3),), (F(2, 3),), (1,)))
    assert vertices(C).points == ((0,), (1,))
    assert vertex_indices(C) == [0, 3]


def test_vertices_of_square_keep_cloud_order():
    assert vertices(SQUARE).points == ((0, 0), (1, 0), (0, 1), (1, 1))


@given(st.integers(0, 10**6))
def test_vertices_match_monotone_chain(seed):
    C = random_cloud(random.Random(seed))
    assert set(vertices(C).points) == hull_vertices_2d(C.points)


@given(st.integers(0, 10**6))
def test_vertices_match_1d_oracle(seed):
    C = random_cloud(random.Random(seed), dim=1)
    assert {p[0] for p in vertices(C).points} == hull_vertices_1d([p[0] for p in C.points])


@given(st.integers(0, 10**6))
def test_membership_matches_2d_oracle(seed):
    rng = random.Random(seed)
    C = random_cloud(rng)
    p = (F(rng.randint(-1, 9), 8), F(rng.randint(-1, 9), 8))
    m = hull_membership(p, C)
    assert m.inside == in_hull_2d(p, C.points) == in_hull(p, C)
    assert m.verify(p, C)


def test_concave_envelope_example():
    C = PointCloud(((0,), (H,), (1,)))
    assert concave_envelope(C, [0, -1, 0], (H,)) == 0
    assert concave_envelope(C, [0, 1, 0], (H,)) == 1
    with pytest.raises(GeometryError):
        concave_envelope(C, [0, 1, 0], (2,))
    with pytest.raises(GeometryError):
        concave_envelope(C, [0, 1], (H,))


@given(st.integers(0, 10**6))
def test_concave_envelope_dominates_values(seed):
    rng = random.Random(seed)
    C = random_cloud(rng)
    vals = [F(rng.randint(-4, 4), 4) for _ in C]
    for p, v in zip(C, vals):
        assert concave_envelope(C, vals, p) >= v


def test_choquet_examples():
    mu = FinMeasure.dirac((H, H))
    nu = FinMeasure.from_weights([(0, 0), (1, 1)], [H, H])
    up = choquet_leq(mu, nu)
    assert up.holds and up.verify(mu, nu)
    down = choquet_leq(nu, mu)
    assert not down.holds and down.verify(nu, mu)
    with pytest.raises(GeometryError):
        choquet_leq(mu, FinMeasure.dirac((0,)))


@given(st.integers(0, 10**6))
def test_choquet_matches_call_prices_on_the_line(seed):
    rng = random.Random(seed)
    mu = random_measure(rng, dim=1)
    nu = spread(rng, mu) if rng.random() < 0.5 else random_measure(rng, dim=1)
    res = choquet_leq(mu, nu)
    as_pairs = lambda m: [(p[0], w) for p, w in m.support]
    assert res.holds == choquet_leq_1d(as_pairs(mu), as_pairs(nu))
    assert res.verify(mu, nu)


@given(st.integers(0, 10**6))
def test_choquet_dilations_hold_in_the_plane(seed):
    rng = random.Random(seed)
    mu = random_measure(rng)
    nu = spread(rng, mu)
    res = choquet_leq(mu, nu)
    assert res.holds and res.verify(mu, nu)
    back = choquet_leq(nu, mu)
    assert back.verify(nu, mu)
    assert back.holds == (nu == mu or set(nu.support) == set(mu.support))


def test_maximal_rep_of_the_center():
    rep = maximal_rep((H, H), SQUARE)
    # [DERIVED] the weight on (0,0) is minimized first, forcing the other diagonal
    assert rep == FinMeasure.from_weights([(1, 0), (0, 1)], [H, H])
    assert is_boundary(rep, SQUARE)
    assert not is_boundary(FinMeasure.dirac((H, H)), SQUARE)
    with pytest.raises(GeometryError):
        maximal_rep((2, 2), SQUARE)


@given(st.integers(0, 10**6))
def test_maximal_rep_is_boundary_and_above(seed):
    rng = random.Random(seed)
    C = random_cloud(rng)
    p = rng.choice(C.points)
    rep = maximal_rep(p, C)
    assert barycenter(rep) == p and is_boundary(rep, C)
    assert choquet_leq(FinMeasure.dirac(p), rep).holds
    assert maximal_rep(p, C) == rep


def test_simplex_checks():
    tri = PointCloud(((0, 0), (1, 0), (0, 1), (F(1, 4), F(1, 4))))
    rep = is_simplex(tri)
    assert rep.is_simplex and rep.verify() and len(rep.vertices) == 3
    sq = is_simplex(SQUARE)
    assert not sq.is_simplex and sq.verify()
    assert sq.witness_point == (H, H)
    assert is_simplex(PointCloud(((1, 2),))).is_simplex


@given(st.integers(0, 10**6))
def test_simplex_report_is_verifiable(seed):
    C = random_cloud(random.Random(seed))
    rep = is_simplex(C)
    assert rep.verify()
    assert rep.is_simplex == (len(rep.vertices) <= 3 and len(hull_vertices_2d(C.points)) == len(rep.vertices))


@given(st.integers(0, 10**6))
def test_affine_max_attained_at_vertices(seed):
    rng = random.Random(seed)
    C = random_cloud(rng)
    w = (F(rng.randint(-3, 3)), F(rng.randint(-3, 3)))
    rep = affine_max_at_vertices(C, w)
    assert rep.equal and rep.argmax_vertices
    assert set(rep.argmax_vertices) <= set(rep.argmax_cloud)


def test_membership_small_cases():
    C = PointCloud(((0, 0), (1, 0), (0, 1)))
    assert hull_membership((1, 0), C).coefficients == (0, 1, 0)
    mid = hull_membership((H, H), C)
    assert mid.inside and mid.coefficients == (0, H, H)


def test_vertex_examples():
    tri = PointCloud(((0, 0), (1, 0), (0, 1)))
    assert vertices(tri) == tri
    assert vertices(PointCloud(((3, 4),))).points == ((3, 4),)


def test_barycenter_trivial_cases():
    assert barycenter(FinMeasure.dirac((H, 1))) == (H, 1)
    assert barycenter(FinMeasure.from_weights([(0,), (1,)], [H, H])) == (H,)


def test_envelope_of_zero_values():
    assert all(concave_envelope(SQUARE, [0] * 5, p) == 0 for p in SQUARE)


def test_choquet_line_examples():
    mid = FinMeasure.dirac((H,))
    ends = FinMeasure.from_weights([(0,), (1,)], [H, H])
    same = choquet_leq(ends, ends)
    assert same.holds and same.dilation == ((H, 0), (0, H))
    assert choquet_leq(mid, ends).holds
    no = choquet_leq(ends, mid)
    assert not no.holds and no.verify(ends, mid)
    # |x - 1/2| also separates the two
    f = lambda y: abs(y[0] - H)
    assert ends.integrate(f) > mid.integrate(f)


def test_boundary_examples():
    assert is_boundary(FinMeasure.dirac((1, 0)), SQUARE)
    line = PointCloud(((0,), (H,), (1,)))
    uni = FinMeasure.from_weights(line.points, [F(1, 3)] * 3)
    assert not is_boundary(uni, line)
    reps = [maximal_rep(p, line) for p in uni.points]
    pushed = FinMeasure.from_weights([q for r in reps for q in r.points],
                                     [F(1, 3) * w for r in reps for w in r.weights])
    assert is_boundary(pushed, line) and pushed.weights == (H, H)


def test_maximal_rep_examples():
    assert maximal_rep((1, 0), SQUARE) == FinMeasure.dirac((1, 0))
    seg = PointCloud(((0,), (1,)))
    assert maximal_rep((H,), seg) == FinMeasure.from_weights([(0,), (1,)], [H, H])
    other = FinMeasure.from_weights([(0, 0), (1, 1)], [H, H])
    assert barycenter(other) == barycenter(maximal_rep((H, H), SQUARE)) and other != maximal_rep((H, H), SQUARE)


def test_standard_simplex():
    E = PointCloud(((1, 0, 0), (0, 1, 0), (0, 0, 1)))
    assert is_simplex(E).is_simplex


def test_affine_max_examples():
    assert affine_max_at_vertices(SQUARE, (0, 0)).equal
    rep = affine_max_at_vertices(SQUARE, (1, 0))
    assert rep.max_cloud == 1 and rep.argmax_vertices == (1, 3)
