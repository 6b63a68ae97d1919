"""Finite-basis views of affine type spaces.

Every object here is relative to a chosen finite list of affine formulas
(a basis): a tuple's type is shadowed by the vector of its basis values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .convex import PointCloud, SimplexReport, is_simplex, lp_solve, vertex_indices
from .core import AfflogError, FinProbSpace, PredicateSymbol, Signature, Structure, Table
from .evaluation import Compiled, carrier_cap, check_cap, eval_all
from .formula import (App, Atom, Formula, Inf, Sup, Term, Var, bounds, free_vars_ordered, is_affine,
                      to_text)
from .modelalg import FiniteField, convex_combine, direct_multiple


class TypeSpaceError(AfflogError):
    """Bad basis or inconsistent type-space request."""


@dataclass(frozen=True)
class FormulaBasis:
    """Distinct affine formulas over one declared variable tuple."""

    formulas: tuple[Formula, ...]
    variables: tuple[str, ...]

    def __post_init__(self) -> None:
        fs = tuple(self.formulas)
        vs = tuple(self.variables)
        object.__setattr__(self, "formulas", fs)
        object.__setattr__(self, "variables", vs)
        if len(set(fs)) != len(fs):
            raise TypeSpaceError("basis contains a duplicate formula")
        if len(set(vs)) != len(vs):
            raise TypeSpaceError("basis variables must be distinct")
        for f in fs:
            if not is_affine(f):
                raise TypeSpaceError(f"basis formula is not affine: {to_text(f)}")
            extra = [v for v in free_vars_ordered(f) if v not in vs]
            if extra:
                raise TypeSpaceError(f"basis formula {to_text(f)} uses undeclared variable {extra[0]!r}")

    @classmethod
    def of(cls, formulas: Sequence[Formula], variables: Sequence[str] | None = None) -> "FormulaBasis":
        """Basis over ``variables``, or over the free variables in order of first use."""
        if variables is None:
            seen: dict[str, None] = {}
            for f in formulas:
                for v in free_vars_ordered(f):
                    seen.setdefault(v, None)
            variables = tuple(seen)
        return cls(tuple(formulas), tuple(variables))

    @property
    def arity(self) -> int:
        return len(self.variables)

    def __len__(self) -> int:
        return len(self.formulas)

    def extend(self, more: Sequence[Formula]) -> "FormulaBasis":
        return FormulaBasis(self.formulas + tuple(more), self.variables)

    def texts(self) -> list[str]:
        return [to_text(f) for f in self.formulas]


@dataclass(frozen=True)
class TypeCloud:
    """Distinct basis-value vectors together with the tuples realizing each."""

    basis: FormulaBasis
    cloud: PointCloud
    provenance: tuple[tuple[tuple[str, ...], ...], ...]
    source: str = ""

    @property
    def points(self):
        return self.cloud.points

    def __len__(self) -> int:
        return len(self.cloud)


def value_vectors(M: Structure, basis: FormulaBasis, cap: int | None = None):
    """Basis values at every tuple of ``M`` in carrier order, as numerator rows."""
    k = basis.arity
    check_cap(M.size ** k, cap, what="tuple table")
    comps = [Compiled(M, f, basis.variables) for f in basis.formulas]
    tables = [c.table_numerators() for c in comps]
    return [c.den for c in comps], tables


def realized_types(M: Structure, basis: FormulaBasis, cap: int | None = None,
                   source: str = "") -> TypeCloud:
    """One point per distinct basis-value vector, in order of first realization."""
    dens, tables = value_vectors(M, basis, cap)
    k = basis.arity
    order: dict[tuple[int, ...], list[tuple[str, ...]]] = {}
    for pos, tup in enumerate(itertools.product(range(M.size), repeat=k)):
        key = tuple(t[pos] for t in tables)
        order.setdefault(key, []).append(tuple(M.carrier[i] for i in tup))
    pts = tuple(tuple(Fraction(v, d) for v, d in zip(key, dens)) for key in order)
    return TypeCloud(basis, PointCloud(pts), tuple(tuple(v) for v in order.values()), source)


def extreme_realized_types(tc: TypeCloud) -> TypeCloud:
    """The hull vertices of a realized cloud, keeping provenance."""
    idx = vertex_indices(tc.cloud)
    return TypeCloud(tc.basis, PointCloud(tuple(tc.points[i] for i in idx)),
                     tuple(tc.provenance[i] for i in idx), tc.source)


@dataclass(frozen=True)
class SimplexDiagnostic:
    is_simplex: bool
    vertex_count: int
    report: SimplexReport
    basis: tuple[str, ...]


def simplex_diagnostic(tc: TypeCloud) -> SimplexDiagnostic:
    rep = is_simplex(tc.cloud)
    return SimplexDiagnostic(rep.is_simplex, len(rep.vertices), rep, tuple(tc.basis.texts()))


def type_vector(M: Structure, basis: FormulaBasis, tup: Sequence[int | str]) -> tuple[Fraction, ...]:
    idx = [M.index(a) for a in tup]
    if len(idx) != basis.arity:
        raise TypeSpaceError(f"tuple of length {len(idx)} for a basis of arity {basis.arity}")
    return tuple(Compiled(M, f, basis.variables)(idx) for f in basis.formulas)


def convexity_identity_check(field: FiniteField, tuples: Sequence[Sequence[int | str]],
                             basis: FormulaBasis, combined: Structure | None = None) -> bool:
    """Whether the type of the combined tuple is the weighted sum of the factor types.

    ``tuples[w]`` is the tuple taken in the factor at atom ``w``.
    """
    if len(tuples) != len(field.factors):
        raise TypeSpaceError("one tuple per factor is required")
    if any(len(t) != basis.arity for t in tuples):
        raise TypeSpaceError("tuples must match the basis arity")
    K = combined if combined is not None else convex_combine(field)
    sections = [field.section_index([tuples[w][i] for w in range(len(tuples))]) for i in range(basis.arity)]
    lhs = type_vector(K, basis, sections)
    rhs = [Fraction(0)] * len(basis)
    for w, M, t in zip(field.space.weights, field.factors, tuples):
        for j, v in enumerate(type_vector(M, basis, t)):
            rhs[j] += w * v
    return lhs == tuple(rhs)


# ---------------------------------------------------------------------------
# type distance


@dataclass(frozen=True)
class TypeDistanceBound:
    """Bounds on the distance between two types.

    ``upper`` is the least ``sum_i d(a'_i, b'_i)`` found over realizations
    ``a'`` of the basis type of ``a`` and ``b'`` of that of ``b``, searched
    in ``M`` and in ``L^1(uniform k, M)`` for ``k <= budget``; ``lower`` is
    ``max |phi(a) - phi(b)| / L_phi`` over the basis.
    """

    upper: Fraction
    lower: Fraction
    witness_k: int
    witness: tuple[tuple[str, ...], tuple[str, ...]]


def atomic_formulas(sig: Signature, variables: Sequence[str], term_depth: int = 0) -> list[Formula]:
    """Atomic formulas over terms of bounded depth built from variables and constants.

    ``d(t, t)`` and ``d(s, t)`` with ``s`` after ``t`` are skipped.
    """
    terms: list[Term] = [Var(v) for v in variables] + [App(c, ()) for c in sorted(sig.constants)]
    for _ in range(term_depth):
        new = list(terms)
        for f in sig.functions:
            if f.arity == 0:
                continue
            for args in itertools.product(terms, repeat=f.arity):
                t = App(f.name, tuple(args))
                if t not in new:
                    new.append(t)
        terms = new
    out: list[Formula] = []
    for p in (sig.metric, *sig.predicates):
        for args in itertools.product(terms, repeat=p.arity):
            if p.name == "d":
                a, b = terms.index(args[0]), terms.index(args[1])
                if a >= b:
                    continue
            out.append(Atom(p.name, tuple(args)))
    return out


def _tuple_dist(S: Structure, a: Sequence[int], b: Sequence[int]) -> Fraction:
    return sum((S.dist(x, y) for x, y in zip(a, b)), Fraction(0))


def type_distance_upper(M: Structure, a: Sequence[int | str], b: Sequence[int | str],
                        basis: FormulaBasis | None = None, budget: int = 3,
                        cap: int | None = None) -> TypeDistanceBound:
    if len(a) != len(b):
        raise TypeSpaceError("tuples must have the same length")
    n = len(a)
    if basis is None:
        vs = tuple(f"x{i}" for i in range(n))
        basis = FormulaBasis.of(atomic_formulas(M.signature, vs, term_depth=1), vs)
    if basis.arity != n:
        raise TypeSpaceError("basis arity must match the tuple length")
    ai = [M.index(x) for x in a]
    bi = [M.index(x) for x in b]
    ta, tb = type_vector(M, basis, ai), type_vector(M, basis, bi)
    lower = Fraction(0)
    for f, u, v in zip(basis.formulas, ta, tb):
        L = bounds(f, M.signature).lipschitz
        if L > 0:
            lower = max(lower, abs(u - v) / L)
    best = None
    for k in range(1, budget + 1):
        S = M if k == 1 else direct_multiple(FinProbSpace.uniform(k), M, cap=cap)
        if S.size ** n > carrier_cap(cap):
            break
        dens, tables = value_vectors(S, basis, cap)
        key_a = tuple(int(v * d) for v, d in zip(ta, dens))
        key_b = tuple(int(v * d) for v, d in zip(tb, dens))
        ra, rb = [], []
        for pos, t in enumerate(itertools.product(range(S.size), repeat=n)):
            key = tuple(tab[pos] for tab in tables)
            if key == key_a:
                ra.append(t)
            if key == key_b:
                rb.append(t)
        for x in ra:
            for y in rb:
                dist = _tuple_dist(S, x, y)
                if best is None or dist < best[0]:
                    best = (dist, k, (tuple(S.carrier[i] for i in x), tuple(S.carrier[i] for i in y)))
        if best is not None and best[0] == lower:
            break
    assert best is not None
    return TypeDistanceBound(best[0], lower, best[1], best[2])


# ---------------------------------------------------------------------------
# Morleyization and affine approximation


def morleyize(M: Structure, fs: Sequence[Formula], names: Sequence[str] | None = None,
              cap: int | None = None) -> tuple[Signature, Structure]:
    """Name each formula by a fresh predicate whose table is the formula's values.

    The new predicate's arguments are the formula's free variables in order
    of first occurrence; interval and Lipschitz constant come from the
    structural bounds.
    """
    sig = M.signature
    names = list(names) if names is not None else []
    if not names:
        i = 0
        for _ in fs:
            while f"P_{i}" in sig.symbol_names():
                i += 1
            names.append(f"P_{i}")
            i += 1
    if len(names) != len(fs):
        raise TypeSpaceError("one name per formula is required")
    taken = set(sig.symbol_names())
    new_syms, tables = [], {}
    for name, f in zip(names, fs):
        if name in taken:
            raise TypeSpaceError(f"predicate name {name!r} collides with an existing symbol")
        taken.add(name)
        vs = free_vars_ordered(f)
        b = bounds(f, sig)
        L = b.lipschitz if b.lipschitz > 0 else Fraction(1)
        new_syms.append(PredicateSymbol(name, len(vs), b.lo, b.hi, L))
        tables[name] = Table.from_values(len(vs), M.size, eval_all(M, f, vs, cap=cap))
    sig2 = sig.extend(predicates=new_syms)
    preds = dict(M.predicates)
    preds.update(tables)
    return sig2, Structure(sig2, M.carrier, M.metric, preds, dict(M.functions))


@dataclass(frozen=True)
class ApproxResult:
    """``target ~ c_0 + sum_i c_i * basis_i`` with uniform error ``error`` on the models."""

    constant: Fraction
    coefficients: tuple[Fraction, ...]
    error: Fraction


def affine_approx_search(target: Formula, models: Sequence[Structure], basis: FormulaBasis,
                         cap: int | None = None) -> ApproxResult:
    """Chebyshev fit of ``target`` by the basis, over every tuple of every model."""
    if not models:
        raise TypeSpaceError("at least one model is required")
    variables = tuple(basis.variables) + tuple(v for v in free_vars_ordered(target)
                                               if v not in basis.variables)
    rows: dict[tuple[Fraction, ...], None] = {}
    for M in models:
        check_cap(M.size ** len(variables), cap, what="tuple table")
        tv = Compiled(M, target, variables).table()
        bt = [Compiled(M, f, variables).table() for f in basis.formulas]
        for pos, t in enumerate(tv):
            rows.setdefault((t, *(b[pos] for b in bt)), None)
    k = len(basis)
    # variables: c_0, c_1..c_k (free), eps >= 0 ; maximize -eps
    A_ub, b_ub = [], []
    for r in rows:
        t, vals = r[0], r[1:]
        A_ub.append([Fraction(-1)] + [-v for v in vals] + [Fraction(-1)])
        b_ub.append(-t)
        A_ub.append([Fraction(1)] + list(vals) + [Fraction(-1)])
        b_ub.append(t)
    c = [Fraction(0)] * (k + 1) + [Fraction(-1)]
    res = lp_solve(c, A_ub=A_ub, b_ub=b_ub, free=range(k + 1))
    if not res.optimal:
        raise TypeSpaceError(f"approximation LP is {res.status}")
    return ApproxResult(res.x[0], tuple(res.x[1:k + 1]), res.x[k + 1])


# ---------------------------------------------------------------------------
# Tarski-Vaught


@dataclass(frozen=True)
class TVFailure:
    formula: str
    parameters: tuple[str, ...]
    sup_model: Fraction
    sup_subset: Fraction


def tarski_vaught_check(M: Structure, A: Sequence[int | str], formulas: Sequence[Formula],
                        var: str = "x") -> list[TVFailure]:
    """Compare ``sup_x phi`` over ``M`` with the max over ``A`` at every parameter tuple from ``A``."""
    idx = sorted({M.index(a) for a in A})
    if not idx:
        raise TypeSpaceError("the subset must be nonempty")
    members = set(idx)
    for f in M.signature.functions:
        for args in itertools.product(idx, repeat=f.arity):
            if M.apply(f.name, args) not in members:
                raise TypeSpaceError(f"subset is not closed under {f.name!r}")
    out = []
    for f in formulas:
        if not is_affine(f):
            raise TypeSpaceError(f"formula is not affine: {to_text(f)}")
        params = tuple(v for v in free_vars_ordered(f) if v != var)
        c = Compiled(M, f, (var, *params))
        for ys in itertools.product(idx, repeat=len(params)):
            full = max(c.numerator((x, *ys)) for x in range(M.size))
            sub = max(c.numerator((x, *ys)) for x in idx)
            if full != sub:
                out.append(TVFailure(to_text(f), tuple(M.carrier[y] for y in ys),
                                     Fraction(full, c.den), Fraction(sub, c.den)))
    return out


def quantified_closure(fs: Sequence[Formula], variables: Sequence[str]) -> list[Formula]:
    """``fs`` together with ``sup v. f`` and ``inf v. f`` for each free variable ``v``."""
    out = list(fs)
    for f in fs:
        for v in free_vars_ordered(f):
            if v in variables:
                for q in (Sup(v, f), Inf(v, f)):
                    if q not in out:
                        out.append(q)
    return out
