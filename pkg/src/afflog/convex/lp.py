"""Exact rational linear programming by the two-phase simplex method.

Problems are maximizations::

    max c.x   subject to   A_ub x <= b_ub,   A_eq x = b_eq,   x_j >= 0 (j not free)

Pivoting follows Bland's rule, so the method terminates and is fully
deterministic.  Every result carries a certificate that can be checked
with :func:`check_certificate`: primal and dual solutions at an optimum,
a Farkas vector when infeasible, and an improving ray when unbounded.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from ..core import AfflogError, as_rational

Vector = tuple[Fraction, ...]
Matrix = tuple[Vector, ...]


class LPError(AfflogError):
    """Malformed linear program (for example a dimension mismatch)."""


class LPStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class LPProblem:
    c: Vector
    A_ub: Matrix = ()
    b_ub: Vector = ()
    A_eq: Matrix = ()
    b_eq: Vector = ()
    free: frozenset[int] = frozenset()

    @property
    def n(self) -> int:
        return len(self.c)


@dataclass(frozen=True)
class LPResult:
    """Outcome of :func:`lp_solve`.

    At an optimum ``x`` is a primal solution and ``y_ub``, ``y_eq`` are dual
    multipliers.  When infeasible, ``y_ub``/``y_eq`` hold a Farkas vector
    ``u`` with ``u_ub >= 0``, ``A^T u >= 0`` (``= 0`` on free columns) and
    ``b.u < 0``.  When unbounded, ``x`` is a feasible point and ``ray`` an
    improving direction.
    """

    status: LPStatus
    optimum: Fraction | None = None
    x: Vector | None = None
    y_ub: Vector = ()
    y_eq: Vector = ()
    ray: Vector | None = None
    problem: LPProblem | None = field(default=None, repr=False, compare=False)

    @property
    def dual(self) -> Vector:
        return self.y_ub + self.y_eq

    @property
    def optimal(self) -> bool:
        return self.status == LPStatus.OPTIMAL


def _vec(v: Iterable, what: str) -> Vector:
    return tuple(as_rational(x) for x in v)


def _mat(A: Iterable[Iterable] | None, n: int, what: str) -> Matrix:
    if A is None:
        return ()
    rows = tuple(_vec(r, what) for r in A)
    for r in rows:
        if len(r) != n:
            raise LPError(f"{what}: row of length {len(r)}, expected {n}")
    return rows


def make_problem(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, free=()) -> LPProblem:
    c = _vec(c, "c")
    n = len(c)
    A_ub = _mat(A_ub, n, "A_ub")
    A_eq = _mat(A_eq, n, "A_eq")
    b_ub = _vec(b_ub or (), "b_ub")
    b_eq = _vec(b_eq or (), "b_eq")
    if len(b_ub) != len(A_ub):
        raise LPError("A_ub and b_ub have different numbers of rows")
    if len(b_eq) != len(A_eq):
        raise LPError("A_eq and b_eq have different numbers of rows")
    if free is True:
        free = range(n)
    free = frozenset(int(j) for j in (free or ()))
    if any(not 0 <= j < n for j in free):
        raise LPError("free variable index out of range")
    return LPProblem(c, A_ub, b_ub, A_eq, b_eq, free)


class _Tableau:
    def __init__(self, rows: list[list[Fraction]], rhs: list[Fraction], basis: list[int]):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis

    def pivot(self, r: int, e: int) -> None:
        rows, rhs = self.rows, self.rhs
        prow = rows[r]
        piv = prow[e]
        if piv != 1:
            inv = 1 / piv
            prow = [v * inv if v else v for v in prow]
            rows[r] = prow
            rhs[r] = rhs[r] * inv
        nz = [j for j, v in enumerate(prow) if v]
        pr = rhs[r]
        for i, row in enumerate(rows):
            if i == r:
                continue
            f = row[e]
            if f:
                for j in nz:
                    row[j] -= f * prow[j]
                rhs[i] -= f * pr
        self.basis[r] = e

    def reduced(self, cost: Sequence[Fraction]) -> list[Fraction]:
        """``z_j = c_B B^{-1} A_j - c_j`` for every column."""
        ncol = len(cost)
        z = [-cj for cj in cost]
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.rows[i]
                for j in range(ncol):
                    v = row[j]
                    if v:
                        z[j] += cb * v
        return z

    def run(self, cost: Sequence[Fraction], allowed: Sequence[bool]) -> int | None:
        """Simplex iterations; returns an unbounded entering column or None."""
        while True:
            z = self.reduced(cost)
            e = next((j for j, v in enumerate(z) if v < 0 and allowed[j]), None)
            if e is None:
                return None
            best = None
            for i, row in enumerate(self.rows):
                a = row[e]
                if a > 0:
                    ratio = self.rhs[i] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return e
            self.pivot(best[1], e)


def lp_solve(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, free=()) -> LPResult:
    """Maximize ``c.x`` exactly; see the module docstring for the form."""
    prob = c if isinstance(c, LPProblem) else make_problem(c, A_ub, b_ub, A_eq, b_eq, free)
    n = prob.n
    # standard-form columns: one per nonnegative variable, two per free one
    colmap: list[tuple[int, int]] = []
    for j in range(n):
        colmap.append((j, 1))
        if j in prob.free:
            colmap.append((j, -1))
    nx = len(colmap)
    m_ub, m_eq = len(prob.A_ub), len(prob.A_eq)
    m = m_ub + m_eq
    nslack = m_ub
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    sigma: list[int] = []
    for r in range(m):
        A_r = prob.A_ub[r] if r < m_ub else prob.A_eq[r - m_ub]
        b_r = prob.b_ub[r] if r < m_ub else prob.b_eq[r - m_ub]
        s = -1 if b_r < 0 else 1
        row = [s * A_r[j] * sgn for j, sgn in colmap] + [Fraction(0)] * nslack
        if r < m_ub:
            row[nx + r] = Fraction(s)
        rows.append(row)
        rhs.append(s * b_r)
        sigma.append(s)
    # initial basis: slack where it has a +1, otherwise an artificial column
    init_col: list[int] = []
    art_rows = [r for r in range(m) if not (r < m_ub and sigma[r] == 1)]
    nart = len(art_rows)
    ncol = nx + nslack + nart
    for row in rows:
        row.extend([Fraction(0)] * nart)
    for k, r in enumerate(art_rows):
        rows[r][nx + nslack + k] = Fraction(1)
    art_of = {r: nx + nslack + k for k, r in enumerate(art_rows)}
    for r in range(m):
        init_col.append(art_of.get(r, nx + r))
    tab = _Tableau(rows, rhs, list(init_col))

    is_art = [j >= nx + nslack for j in range(ncol)]
    if nart:
        cost1 = [Fraction(-1) if is_art[j] else Fraction(0) for j in range(ncol)]
        tab.run(cost1, [True] * ncol)
        z = tab.reduced(cost1)
        phase1 = sum((cost1[b] * tab.rhs[i] for i, b in enumerate(tab.basis)), Fraction(0))
        if phase1 < 0:
            y = [z[init_col[r]] + cost1[init_col[r]] for r in range(m)]
            u = [sigma[r] * y[r] for r in range(m)]
            return LPResult(LPStatus.INFEASIBLE, y_ub=tuple(u[:m_ub]), y_eq=tuple(u[m_ub:]), problem=prob)
        # drive artificials out of the basis where possible
        for i, b in enumerate(tab.basis):
            if is_art[b]:
                e = next((j for j in range(nx + nslack) if tab.rows[i][j]), None)
                if e is not None:
                    tab.pivot(i, e)
    cost2 = [Fraction(0)] * ncol
    for k, (j, sgn) in enumerate(colmap):
        cost2[k] = sgn * prob.c[j]
    allowed = [not a for a in is_art]
    e = tab.run(cost2, allowed)
    xs = [Fraction(0)] * ncol
    for i, b in enumerate(tab.basis):
        xs[b] = tab.rhs[i]
    x = [Fraction(0)] * n
    for k, (j, sgn) in enumerate(colmap):
        x[j] += sgn * xs[k]
    if e is not None:
        d = [Fraction(0)] * ncol
        d[e] = Fraction(1)
        for i, b in enumerate(tab.basis):
            d[b] = -tab.rows[i][e]
        ray = [Fraction(0)] * n
        for k, (j, sgn) in enumerate(colmap):
            ray[j] += sgn * d[k]
        return LPResult(LPStatus.UNBOUNDED, x=tuple(x), ray=tuple(ray), problem=prob)
    z = tab.reduced(cost2)
    y = [sigma[r] * (z[init_col[r]] + cost2[init_col[r]]) for r in range(m)]
    opt = sum((ci * xi for ci, xi in zip(prob.c, x)), Fraction(0))
    return LPResult(LPStatus.OPTIMAL, opt, tuple(x), tuple(y[:m_ub]), tuple(y[m_ub:]), problem=prob)


def _dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def _AT(prob: LPProblem, y_ub: Sequence[Fraction], y_eq: Sequence[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * prob.n
    for row, y in zip(prob.A_ub, y_ub):
        if y:
            for j, a in enumerate(row):
                out[j] += a * y
    for row, y in zip(prob.A_eq, y_eq):
        if y:
            for j, a in enumerate(row):
                out[j] += a * y
    return out


def primal_feasible(prob: LPProblem, x: Sequence[Fraction]) -> bool:
    if len(x) != prob.n:
        return False
    if any(x[j] < 0 for j in range(prob.n) if j not in prob.free):
        return False
    if any(_dot(r, x) > b for r, b in zip(prob.A_ub, prob.b_ub)):
        return False
    return all(_dot(r, x) == b for r, b in zip(prob.A_eq, prob.b_eq))


def check_certificate(res: LPResult, prob: LPProblem | None = None) -> bool:
    """Verify the certificate of ``res`` with exact arithmetic."""
    prob = prob or res.problem
    if prob is None:
        raise LPError("no problem attached to the result")
    if res.status == LPStatus.OPTIMAL:
        if not primal_feasible(prob, res.x):
            return False
        if len(res.y_ub) != len(prob.A_ub) or len(res.y_eq) != len(prob.A_eq):
            return False
        if any(y < 0 for y in res.y_ub):
            return False
        aty = _AT(prob, res.y_ub, res.y_eq)
        for j in range(prob.n):
            if j in prob.free:
                if aty[j] != prob.c[j]:
                    return False
            elif aty[j] < prob.c[j]:
                return False
        dual_obj = _dot(prob.b_ub, res.y_ub) + _dot(prob.b_eq, res.y_eq)
        return dual_obj == res.optimum == _dot(prob.c, res.x)
    if res.status == LPStatus.INFEASIBLE:
        if any(y < 0 for y in res.y_ub):
            return False
        aty = _AT(prob, res.y_ub, res.y_eq)
        for j in range(prob.n):
            if j in prob.free and aty[j] != 0:
                return False
            if j not in prob.free and aty[j] < 0:
                return False
        return _dot(prob.b_ub, res.y_ub) + _dot(prob.b_eq, res.y_eq) < 0
    # unbounded
    d = res.ray
    if d is None or not primal_feasible(prob, res.x):
        return False
    if any(d[j] < 0 for j in range(prob.n) if j not in prob.free):
        return False
    if any(_dot(r, d) > 0 for r in prob.A_ub):
        return False
    if any(_dot(r, d) != 0 for r in prob.A_eq):
        return False
    return _dot(prob.c, d) > 0
