"""Convex combinations, direct multiples, the Łoś identity and CR defects."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .core import AfflogError, FinProbSpace, Structure, Table, as_rational
from .evaluation import Compiled, check_cap, evaluate
from .formula import (Abs, Formula, FormulaClass, FormulaError, Inf, Max, Sup, affine_combination,
                      big_max, classify, free_vars, free_vars_ordered, is_affine, rename_free, sub)


@dataclass(frozen=True)
class FiniteField:
    """A field of structures over a finite probability space: one factor per atom."""

    space: FinProbSpace
    factors: tuple[Structure, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple(self.factors))
        if len(self.factors) != len(self.space):
            raise AfflogError(
                f"field has {len(self.space)} atoms but {len(self.factors)} factors")
        sig = self.factors[0].signature
        if any(M.signature != sig for M in self.factors):
            raise AfflogError("all factors of a field must share one signature")

    @classmethod
    def of(cls, weights: Sequence, factors: Sequence[Structure]) -> "FiniteField":
        return cls(FinProbSpace.from_weights(list(weights)), tuple(factors))

    @property
    def signature(self):
        return self.factors[0].signature

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(M.size for M in self.factors)

    @property
    def product_size(self) -> int:
        return math.prod(self.sizes)

    def strides(self) -> tuple[int, ...]:
        out, s = [], 1
        for n in reversed(self.sizes):
            out.append(s)
            s *= n
        return tuple(reversed(out))

    def section_index(self, section: Sequence[int | str]) -> int:
        """Position of a section (one element per atom) in the product carrier."""
        if len(section) != len(self.factors):
            raise AfflogError(f"a section needs {len(self.factors)} coordinates, got {len(section)}")
        return sum(s * M.index(e) for s, M, e in zip(self.strides(), self.factors, section))

    def section_of(self, index: int) -> tuple[int, ...]:
        out = []
        for n in reversed(self.sizes):
            index, r = divmod(index, n)
            out.append(r)
        return tuple(reversed(out))


def section_label(labels: Sequence[str]) -> str:
    return "(" + ",".join(labels) + ")"


def _dtype(bound: int):
    return np.int64 if bound < 2**62 else object


def _combine_table(field: FiniteField, tables: Sequence[Table], arity: int) -> Table:
    k = len(field.factors)
    weights = field.space.weights
    D = math.lcm(*(w.denominator * t.den for w, t in zip(weights, tables)))
    coefs = [w.numerator * D // (w.denominator * t.den) for w, t in zip(weights, tables)]
    bound = sum(c * max(map(abs, t.nums)) for c, t in zip(coefs, tables))
    dt = _dtype(bound)
    total = None
    for w_i, (c, t, M) in enumerate(zip(coefs, tables, field.factors)):
        shape = [1] * (k * arity)
        for j in range(arity):
            shape[j * k + w_i] = M.size
        arr = np.array(t.nums, dtype=dt).reshape(shape) * c
        total = arr if total is None else total + arr
    flat = np.asarray(total).reshape(-1)
    if flat.size == 1 and field.product_size ** arity != 1:
        flat = np.broadcast_to(flat, (field.product_size ** arity,))
    return Table(arity, field.product_size, D, tuple(int(v) for v in flat.tolist()))


def _combine_function(field: FiniteField, name: str, arity: int) -> tuple[int, ...]:
    k = len(field.factors)
    total = None
    for w_i, (s, M) in enumerate(zip(field.strides(), field.factors)):
        shape = [1] * (k * arity)
        for j in range(arity):
            shape[j * k + w_i] = M.size
        arr = np.array(M.functions[name], dtype=np.int64).reshape(shape) * s
        total = arr if total is None else total + arr
    return tuple(int(v) for v in np.asarray(total).reshape(-1).tolist())


def convex_combine(field: FiniteField, cap: int | None = None) -> Structure:
    """The convex combination of the factors, on the literal product carrier.

    Elements are sections in lexicographic order (first atom most
    significant); functions act coordinatewise and every predicate,
    including the metric, is the weighted average of the factor values.
    """
    N = field.product_size
    check_cap(N, cap, what="product carrier")
    sig = field.signature
    labels = tuple(section_label(c) for c in itertools.product(*(M.carrier for M in field.factors)))
    metric = _combine_table(field, [M.metric for M in field.factors], 2)
    preds = {p.name: _combine_table(field, [M.predicates[p.name] for M in field.factors], p.arity)
             for p in sig.predicates}
    funcs = {f.name: _combine_function(field, f.name, f.arity) for f in sig.functions}
    return Structure(sig, labels, metric, preds, funcs)


def direct_multiple(space: FinProbSpace, M: Structure, cap: int | None = None) -> Structure:
    """``L^1(space, M)``: the convex combination of the constant field."""
    return convex_combine(FiniteField(space, (M,) * len(space)), cap=cap)


def diagonal_index(M: Structure, k: int, a: int | str) -> int:
    """Index in ``L^1(k atoms, M)`` of the constant section at ``a``."""
    i = M.index(a)
    n = M.size
    return sum(i * n**e for e in range(k))


# ---------------------------------------------------------------------------
# Łoś


@dataclass(frozen=True)
class LosReport:
    lhs: Fraction
    rhs: Fraction
    equal: bool
    formula_class: FormulaClass

    @property
    def direction(self) -> str:
        """``"="``, ``"<"`` (lhs below rhs) or ``">"``."""
        if self.lhs == self.rhs:
            return "="
        return "<" if self.lhs < self.rhs else ">"

    @property
    def consistent(self) -> bool:
        """Whether the observed relation is the one the formula class predicts."""
        d = self.direction
        c = self.formula_class
        if c == FormulaClass.AFFINE:
            return d == "="
        if c == FormulaClass.CONVEX:
            return d in ("=", "<")
        if c == FormulaClass.CONCAVE:
            return d in ("=", ">")
        return True


def _normalize_sections(field: FiniteField, f: Formula,
                        sections: Mapping[str, Sequence] | Sequence[Sequence]) -> dict[str, tuple]:
    fv = free_vars_ordered(f)
    if isinstance(sections, Mapping):
        secs = {v: tuple(s) for v, s in sections.items()}
    else:
        sections = list(sections)
        if len(sections) != len(fv):
            raise AfflogError(f"formula has {len(fv)} free variables but {len(sections)} sections were given")
        secs = {v: tuple(s) for v, s in zip(fv, sections)}
    for v in fv:
        if v not in secs:
            raise AfflogError(f"no section given for variable {v!r}")
        if len(secs[v]) != len(field.factors):
            raise AfflogError(f"section for {v!r} must have one coordinate per atom")
    return secs


def los_check(field: FiniteField, f: Formula, sections, combined: Structure | None = None,
              strict: bool = False) -> LosReport:
    """Compare ``f`` in the combination with the integral of the factor values.

    For affine ``f`` the two sides agree exactly.  Other formulas are
    accepted and the report records the direction of the inequality;
    ``strict=True`` rejects them instead.
    """
    cls = classify(f)
    if strict and cls != FormulaClass.AFFINE:
        raise FormulaError(f"formula is {cls}, not affine")
    secs = _normalize_sections(field, f, sections)
    K = combined if combined is not None else convex_combine(field)
    fv = free_vars_ordered(f)
    lhs = evaluate(K, f, {v: field.section_index(secs[v]) for v in fv})
    rhs = Fraction(0)
    for w_i, (w, M) in enumerate(zip(field.space.weights, field.factors)):
        rhs += w * evaluate(M, f, {v: secs[v][w_i] for v in fv})
    return LosReport(lhs, rhs, lhs == rhs, cls)


# ---------------------------------------------------------------------------
# convex realization


@dataclass(frozen=True)
class CRInstance:
    """One instance of the convex-realization scheme.

    ``formulas`` are affine formulas in the realized variables ``xvars``
    and arbitrary parameters; ``weights`` are the convex weights of the
    combined tuples.
    """

    formulas: tuple[Formula, ...]
    weights: tuple[Fraction, ...]
    xvars: tuple[str, ...] = ("x",)

    def __post_init__(self) -> None:
        object.__setattr__(self, "formulas", tuple(self.formulas))
        object.__setattr__(self, "weights", tuple(as_rational(w) for w in self.weights))
        object.__setattr__(self, "xvars", tuple(self.xvars))
        if not self.formulas:
            raise AfflogError("a CR instance needs at least one formula")
        if not self.weights or any(w < 0 for w in self.weights):
            raise AfflogError("CR weights must be nonnegative")
        if sum(self.weights) != 1:
            raise AfflogError("CR weights must sum to 1")
        for f in self.formulas:
            if not is_affine(f):
                raise FormulaError("CR instance formulas must be affine")

    @property
    def params(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for f in self.formulas:
            for v in free_vars_ordered(f):
                if v not in self.xvars:
                    seen.setdefault(v, None)
        return tuple(seen)


def cr_sentence(inst: CRInstance) -> Formula:
    """The sentence ``sup_{x_j, y} inf_z max_i |phi_i(z,y) - sum_j l_j phi_i(x_j,y)|``."""
    taken = set(inst.params)
    for f in inst.formulas:
        taken |= set(free_vars(f))
    copies = []
    for j in range(len(inst.weights)):
        names = tuple(f"{x}_{j}" for x in inst.xvars)
        copies.append(names)
    zs = tuple(f"{x}_z" for x in inst.xvars)
    for names in (*copies, zs):
        clash = set(names) & taken
        if clash:
            raise AfflogError(f"variable name clash: {sorted(clash)}")
    terms = []
    for f in inst.formulas:
        avg = affine_combination(
            [(w, rename_free(f, dict(zip(inst.xvars, names)))) for w, names in zip(inst.weights, copies)])
        terms.append(Abs(sub(rename_free(f, dict(zip(inst.xvars, zs))), avg)))
    out: Formula = big_max(terms)
    for z in reversed(zs):
        out = Inf(z, out)
    for y in reversed(inst.params):
        out = Sup(y, out)
    for names in reversed(copies):
        for x in reversed(names):
            out = Sup(x, out)
    return out


def cr_defect(S: Structure, inst: CRInstance) -> Fraction:
    """Exact value of the CR sentence of ``inst`` in ``S``.

    Only value vectors matter, so the search runs over the distinct vectors
    ``(phi_i(z, y))_i`` for each parameter tuple ``y``.
    """
    xs, ys = inst.xvars, inst.params
    variables = xs + ys
    comp = [Compiled(S, f, variables) for f in inst.formulas]
    den = math.lcm(*(c.den for c in comp))
    scale = [den // c.den for c in comp]
    lam_den = math.lcm(*(w.denominator for w in inst.weights))
    lam = [w.numerator * (lam_den // w.denominator) for w in inst.weights]
    n = S.size
    best = None
    for y in itertools.product(range(n), repeat=len(ys)):
        vecs = sorted({tuple(c.numerator(x + y) * s for c, s in zip(comp, scale))
                       for x in itertools.product(range(n), repeat=len(xs))})
        vk = [tuple(v * lam_den for v in vec) for vec in vecs]
        for combo in itertools.product(range(len(vecs)), repeat=len(lam)):
            target = [sum(l * vecs[j][i] for l, j in zip(lam, combo)) for i in range(len(comp))]
            inner = min(max(abs(z[i] - target[i]) for i in range(len(comp))) for z in vk)
            if best is None or inner > best:
                best = inner
    return Fraction(best, den * lam_den)


# ---------------------------------------------------------------------------
# q-convex conditions


def qconvex_parts(condition: Formula) -> tuple[list[tuple[type, str]], list[Formula]]:
    """Split ``Q_1 x_1 ... Q_k x_k. max_i phi_i`` into prefix and affine disjuncts."""
    prefix = []
    f = condition
    while isinstance(f, (Sup, Inf)):
        prefix.append((type(f), f.var))
        f = f.body
    disjuncts: list[Formula] = []
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Max):
            stack.append(g.right)
            stack.append(g.left)
        elif is_affine(g):
            disjuncts.append(g)
        else:
            raise FormulaError("condition is not q-convex: matrix must be a max of affine formulas")
    if free_vars(condition):
        raise FormulaError("a q-convex condition must be a sentence")
    return prefix, disjuncts


@dataclass(frozen=True)
class QConvexReport:
    factor_values: tuple[Fraction, ...]
    combination_value: Fraction
    integral: Fraction
    premise: bool
    conclusion: bool

    @property
    def ok(self) -> bool:
        """Preservation holds and the value is at most the integral."""
        return (not self.premise or self.conclusion) and self.combination_value <= self.integral


def qconvex_preservation_check(field: FiniteField, condition: Formula,
                               combined: Structure | None = None) -> QConvexReport:
    qconvex_parts(condition)
    K = combined if combined is not None else convex_combine(field)
    vals = tuple(evaluate(M, condition) for M in field.factors)
    kv = evaluate(K, condition)
    integral = sum((w * v for w, v in zip(field.space.weights, vals)), Fraction(0))
    return QConvexReport(vals, kv, integral, all(v <= 0 for v in vals), kv <= 0)
