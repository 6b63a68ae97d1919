"""Finite-dimensional convex geometry over exact rational point clouds."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from ..core import AfflogError, as_rational
from .lp import LPResult, lp_solve

Point = tuple[Fraction, ...]


class GeometryError(AfflogError):
    """Bad geometric input, such as a point outside the hull where one is required."""


def point(coords: Iterable) -> Point:
    return tuple(as_rational(c) for c in coords)


@dataclass(frozen=True)
class PointCloud:
    """A nonempty ordered list of distinct points of one dimension."""

    points: tuple[Point, ...]

    def __post_init__(self) -> None:
        pts = tuple(point(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise GeometryError("a point cloud must be nonempty")
        d = len(pts[0])
        if any(len(p) != d for p in pts):
            raise GeometryError("points of a cloud must share one dimension")
        if len(set(pts)) != len(pts):
            raise GeometryError("points of a cloud must be distinct")

    @classmethod
    def dedup(cls, points: Iterable[Sequence]) -> "PointCloud":
        """Cloud of the distinct points, in order of first appearance."""
        seen: dict[Point, None] = {}
        for p in points:
            seen.setdefault(point(p), None)
        return cls(tuple(seen))

    @property
    def dim(self) -> int:
        return len(self.points[0])

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def index(self, p: Sequence) -> int:
        return self.points.index(point(p))


@dataclass(frozen=True)
class FinMeasure:
    """A finitely supported probability measure on points."""

    support: tuple[tuple[Point, Fraction], ...]

    def __post_init__(self) -> None:
        sup = tuple((point(p), as_rational(w)) for p, w in self.support)
        object.__setattr__(self, "support", sup)
        if not sup:
            raise GeometryError("a measure needs nonempty support")
        if any(w <= 0 for _, w in sup):
            raise GeometryError("measure weights must be positive")
        if sum(w for _, w in sup) != 1:
            raise GeometryError("measure weights must sum to 1")
        if len({p for p, _ in sup}) != len(sup):
            raise GeometryError("support points must be distinct")
        if len({len(p) for p, _ in sup}) != 1:
            raise GeometryError("support points must share one dimension")

    @classmethod
    def dirac(cls, p: Sequence) -> "FinMeasure":
        return cls(((point(p), Fraction(1)),))

    @classmethod
    def from_weights(cls, points: Sequence[Sequence], weights: Sequence) -> "FinMeasure":
        """Merge repeated points and drop zero weights."""
        acc: dict[Point, Fraction] = {}
        for p, w in zip(points, weights):
            w = as_rational(w)
            if w:
                q = point(p)
                acc[q] = acc.get(q, Fraction(0)) + w
        return cls(tuple(acc.items()))

    @property
    def points(self) -> tuple[Point, ...]:
        return tuple(p for p, _ in self.support)

    @property
    def weights(self) -> tuple[Fraction, ...]:
        return tuple(w for _, w in self.support)

    @property
    def dim(self) -> int:
        return len(self.support[0][0])

    def integrate(self, f) -> Fraction:
        return sum((w * as_rational(f(p)) for p, w in self.support), Fraction(0))


def _dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def combination(points: Sequence[Point], coefs: Sequence[Fraction]) -> Point:
    d = len(points[0])
    out = [Fraction(0)] * d
    for p, c in zip(points, coefs):
        if c:
            for k in range(d):
                out[k] += c * p[k]
    return tuple(out)


def barycenter(mu: FinMeasure) -> Point:
    return combination(mu.points, mu.weights)


# ---------------------------------------------------------------------------
# hull membership


@dataclass(frozen=True)
class AffineFunctional:
    """``h(x) = w.x + c``."""

    w: Point
    c: Fraction

    def __call__(self, x: Sequence[Fraction]) -> Fraction:
        return _dot(self.w, x) + self.c


@dataclass(frozen=True)
class Membership:
    """Either convex coefficients reproducing the point or a separating functional.

    When outside, ``functional`` satisfies ``h(p) > 0 >= h(c)`` for every
    cloud point ``c``.
    """

    inside: bool
    coefficients: tuple[Fraction, ...] | None = None
    functional: AffineFunctional | None = None

    def verify(self, p: Sequence, C: PointCloud) -> bool:
        p = point(p)
        if self.inside:
            lam = self.coefficients
            return (lam is not None and len(lam) == len(C) and all(x >= 0 for x in lam)
                    and sum(lam) == 1 and combination(C.points, lam) == p)
        h = self.functional
        return h is not None and h(p) > 0 and all(h(c) <= 0 for c in C)


def _hull_lp(p: Point, C: PointCloud, objective: Sequence[Fraction] | None = None) -> LPResult:
    n, d = len(C), C.dim
    A_eq = [[C.points[i][k] for i in range(n)] for k in range(d)] + [[Fraction(1)] * n]
    b_eq = list(p) + [Fraction(1)]
    c = list(objective) if objective is not None else [Fraction(0)] * n
    return lp_solve(c, A_eq=A_eq, b_eq=b_eq)


def hull_membership(p: Sequence, C: PointCloud) -> Membership:
    """Decide ``p in conv(C)`` with an exact certificate either way."""
    p = point(p)
    if len(p) != C.dim:
        raise GeometryError(f"point of dimension {len(p)} against a cloud of dimension {C.dim}")
    if p in C.points:
        lam = [Fraction(0)] * len(C)
        lam[C.index(p)] = Fraction(1)
        return Membership(True, tuple(lam))
    res = _hull_lp(p, C)
    if res.optimal:
        return Membership(True, res.x)
    return Membership(False, functional=separate(p, C))


def separate(p: Point, C: PointCloud) -> AffineFunctional:
    """The functional ``w.x - t`` maximizing ``w.p - t`` under ``|w|_1 <= 1``.

    Variables are ``w+``, ``w-`` (nonnegative) and ``t`` (free).
    """
    d = C.dim
    c = list(p) + [-x for x in p] + [Fraction(-1)]
    A_ub = [list(q) + [-x for x in q] + [Fraction(-1)] for q in C]
    b_ub = [Fraction(0)] * len(C)
    A_ub.append([Fraction(1)] * (2 * d) + [Fraction(0)])
    b_ub.append(Fraction(1))
    res = lp_solve(c, A_ub=A_ub, b_ub=b_ub, free=[2 * d])
    if not res.optimal or res.optimum <= 0:
        raise GeometryError("point lies in the hull; no separating functional")
    x = res.x
    w = tuple(x[k] - x[d + k] for k in range(d))
    return AffineFunctional(w, -x[2 * d])


def in_hull(p: Sequence, C: PointCloud) -> bool:
    p = point(p)
    return p in C.points or _hull_lp(p, C).optimal


def vertices(C: PointCloud) -> PointCloud:
    """Extreme points of ``conv(C)``, in cloud order.

    Known vertices grow incrementally: a point outside their hull yields a
    separating functional whose lexicographically largest maximizer over the
    cloud is a new vertex.
    """
    pts = tuple(dict.fromkeys(C.points))
    found = {max(pts)}
    for q in pts:
        while q not in found:
            V = PointCloud(tuple(sorted(found)))
            if _hull_lp(q, V).optimal:
                break
            h = separate(q, V)
            top = max(h(c) for c in pts)
            found.add(max(c for c in pts if h(c) == top))
    return PointCloud(tuple(q for q in pts if q in found))


def vertex_indices(C: PointCloud) -> list[int]:
    """Index of the first occurrence of each vertex."""
    return [C.index(p) for p in vertices(C).points]


# ---------------------------------------------------------------------------
# envelopes and the Choquet order


def concave_envelope(C: PointCloud, values: Sequence, p: Sequence) -> Fraction:
    """``max { sum l_i f(c_i) : sum l_i c_i = p, l in the simplex }``."""
    vals = [as_rational(v) for v in values]
    if len(vals) != len(C):
        raise GeometryError("one value per cloud point is required")
    res = _hull_lp(point(p), C, vals)
    if not res.optimal:
        raise GeometryError("point lies outside the hull of the cloud")
    return res.optimum


@dataclass(frozen=True)
class ConvexWitness:
    """``f(y) = max_i (a_i . y + b_i)``, a convex function."""

    pieces: tuple[AffineFunctional, ...]

    def __call__(self, y: Sequence[Fraction]) -> Fraction:
        return max(h(y) for h in self.pieces)


@dataclass(frozen=True)
class ChoquetResult:
    """``holds`` with a dilation, or else a convex function that ``nu`` undercuts.

    ``dilation[i][j]`` is the mass sent from the i-th support point of mu to
    the j-th support point of nu.
    """

    holds: bool
    dilation: tuple[tuple[Fraction, ...], ...] | None = None
    witness: ConvexWitness | None = None

    def verify(self, mu: FinMeasure, nu: FinMeasure) -> bool:
        if self.holds:
            T = self.dilation
            if T is None or len(T) != len(mu.support):
                return False
            for i, (x, m) in enumerate(mu.support):
                row = T[i]
                if len(row) != len(nu.support) or any(t < 0 for t in row) or sum(row) != m:
                    return False
                if combination(nu.points, row) != tuple(m * xk for xk in x):
                    return False
            return all(sum(T[i][j] for i in range(len(T))) == w for j, w in enumerate(nu.weights))
        f = self.witness
        return f is not None and nu.integrate(f) < mu.integrate(f)


def choquet_leq(mu: FinMeasure, nu: FinMeasure) -> ChoquetResult:
    """Decide ``mu`` below ``nu`` in the Choquet order via a dilation LP."""
    if mu.dim != nu.dim:
        raise GeometryError("measures live in different dimensions")
    I, J, d = len(mu.support), len(nu.support), mu.dim
    nvar = I * J
    A_eq, b_eq = [], []
    for i, (_, m) in enumerate(mu.support):
        row = [Fraction(0)] * nvar
        for j in range(J):
            row[i * J + j] = Fraction(1)
        A_eq.append(row)
        b_eq.append(m)
    for j, (_, w) in enumerate(nu.support):
        row = [Fraction(0)] * nvar
        for i in range(I):
            row[i * J + j] = Fraction(1)
        A_eq.append(row)
        b_eq.append(w)
    for i, (x, m) in enumerate(mu.support):
        for k in range(d):
            row = [Fraction(0)] * nvar
            for j, y in enumerate(nu.points):
                row[i * J + j] = y[k]
            A_eq.append(row)
            b_eq.append(m * x[k])
    res = lp_solve([Fraction(0)] * nvar, A_eq=A_eq, b_eq=b_eq)
    if res.optimal:
        T = tuple(tuple(res.x[i * J + j] for j in range(J)) for i in range(I))
        return ChoquetResult(True, dilation=T)
    u = res.y_eq
    alpha = u[:I]
    ws = [u[I + J + i * d: I + J + (i + 1) * d] for i in range(I)]
    pieces = tuple(AffineFunctional(tuple(-v for v in ws[i]), -alpha[i]) for i in range(I))
    return ChoquetResult(False, witness=ConvexWitness(pieces))


def is_boundary(mu: FinMeasure, C: PointCloud) -> bool:
    """Whether ``mu`` is carried by the vertices of ``conv(C)``."""
    vs = set(vertices(C).points)
    return all(p in vs for p in mu.points)


def maximal_rep(p: Sequence, C: PointCloud) -> FinMeasure:
    """The lexicographically least vertex representation of ``p``.

    Weights on the vertices (in cloud order) are minimized one after the
    other, which makes the output deterministic.
    """
    p = point(p)
    V = vertices(C)
    n = len(V)
    A_eq = [[V.points[i][k] for i in range(n)] for k in range(V.dim)] + [[Fraction(1)] * n]
    b_eq = list(p) + [Fraction(1)]
    fixed: list[Fraction] = []
    x = None
    for i in range(n):
        c = [Fraction(0)] * n
        c[i] = Fraction(-1)
        rows = A_eq + [[Fraction(int(j == k)) for j in range(n)] for k in range(i)]
        res = lp_solve(c, A_eq=rows, b_eq=b_eq + fixed)
        if not res.optimal:
            raise GeometryError("point lies outside the hull of the cloud")
        fixed.append(res.x[i])
        x = res.x
    assert x is not None
    return FinMeasure.from_weights(V.points, x)


# ---------------------------------------------------------------------------
# simplices


def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    M = [list(r) for r in rows]
    pivots = []
    r = 0
    ncols = len(M[0]) if M else 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(M)) if M[i][c]), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = 1 / M[r][c]
        M[r] = [v * inv for v in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c]:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    return M, pivots


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    if not rows:
        return 0
    return len(_rref([list(map(as_rational, r)) for r in rows])[1])


def null_vector(rows: Sequence[Sequence[Fraction]], ncols: int) -> tuple[Fraction, ...] | None:
    """A nonzero ``a`` with ``rows @ a = 0``, or None when the columns are independent."""
    if not rows:
        return tuple(Fraction(int(j == 0)) for j in range(ncols)) if ncols else None
    M, pivots = _rref([list(map(as_rational, r)) for r in rows])
    free = [c for c in range(ncols) if c not in pivots]
    if not free:
        return None
    f = free[0]
    a = [Fraction(0)] * ncols
    a[f] = Fraction(1)
    for r, c in enumerate(pivots):
        a[c] = -M[r][f]
    return tuple(a)


def affinely_independent(points: Sequence[Point]) -> bool:
    if len(points) <= 1:
        return True
    base = points[0]
    diffs = [[a - b for a, b in zip(p, base)] for p in points[1:]]
    return rank(diffs) == len(points) - 1


@dataclass(frozen=True)
class SimplexReport:
    """``is_simplex`` together with a double representation when it fails."""

    is_simplex: bool
    vertices: PointCloud
    witness_point: Point | None = None
    representations: tuple[FinMeasure, FinMeasure] | None = None

    def verify(self) -> bool:
        if self.is_simplex:
            return affinely_independent(self.vertices.points)
        if self.representations is None:
            return False
        r1, r2 = self.representations
        vs = set(self.vertices.points)
        return (r1 != r2 and barycenter(r1) == barycenter(r2) == self.witness_point
                and all(p in vs for p in r1.points + r2.points))


def is_simplex(C: PointCloud) -> SimplexReport:
    """Whether ``conv(C)`` is a simplex, i.e. its vertices are affinely independent."""
    V = vertices(C)
    pts = V.points
    cols = len(pts)
    rows = [[p[k] for p in pts] for k in range(V.dim)] + [[Fraction(1)] * cols]
    a = null_vector(rows, cols)
    if a is None:
        return SimplexReport(True, V)
    s = sum(x for x in a if x > 0)
    pos = [x / s if x > 0 else Fraction(0) for x in a]
    neg = [-x / s if x < 0 else Fraction(0) for x in a]
    r1 = FinMeasure.from_weights(pts, pos)
    r2 = FinMeasure.from_weights(pts, neg)
    return SimplexReport(False, V, barycenter(r1), (r1, r2))


@dataclass(frozen=True)
class MaxReport:
    equal: bool
    max_cloud: Fraction
    max_vertices: Fraction
    argmax_cloud: tuple[int, ...]
    argmax_vertices: tuple[int, ...]


def affine_max_at_vertices(C: PointCloud, functional: AffineFunctional | Sequence) -> MaxReport:
    """Compare the maximum of an affine functional over the cloud and over its vertices.

    ``functional`` is an :class:`AffineFunctional` or a coefficient vector
    (with zero constant).  Argmax indices refer to cloud positions.
    """
    h = functional if isinstance(functional, AffineFunctional) else AffineFunctional(point(functional), Fraction(0))
    vals = [h(p) for p in C]
    vi = vertex_indices(C)
    mc = max(vals)
    mv = max(vals[i] for i in vi)
    return MaxReport(mc == mv, mc, mv, tuple(i for i, v in enumerate(vals) if v == mc),
                     tuple(i for i in vi if vals[i] == mv))


__all__ = [
    "AffineFunctional", "ChoquetResult", "ConvexWitness", "FinMeasure", "GeometryError",
    "MaxReport", "Membership", "Point", "PointCloud", "SimplexReport", "affine_max_at_vertices",
    "affinely_independent", "barycenter", "choquet_leq", "combination",
    "concave_envelope", "hull_membership", "in_hull", "is_boundary", "is_simplex", "maximal_rep",
    "null_vector", "point", "rank", "separate", "vertex_indices", "vertices",
]
