"""Seeded random structures, fields and formulas for tests and experiments.

Random structures keep off-diagonal distances in ``[1/2, 1]`` and every
symbol at Lipschitz constant 2, which makes them legal by construction.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Sequence

from .core import FinProbSpace, FunctionSymbol, PredicateSymbol, Signature, Structure
from .formula import (Abs, App, Atom, Formula, Inf, Max, Min, One, Scale, Sum, Sup, Term, Var)
from .modelalg import FiniteField

LIPSCHITZ = Fraction(2)


def random_signature(rng: random.Random, unary: int = 1, binary: int = 1,
                     functions: int = 0, constants: int = 0) -> Signature:
    preds = [PredicateSymbol(f"P{i}", 1, lipschitz=LIPSCHITZ) for i in range(unary)]
    preds += [PredicateSymbol(f"R{i}", 2, lipschitz=LIPSCHITZ) for i in range(binary)]
    funcs = [FunctionSymbol(f"f{i}", 1, lipschitz=LIPSCHITZ) for i in range(functions)]
    funcs += [FunctionSymbol(f"c{i}", 0) for i in range(constants)]
    return Signature(tuple(preds), tuple(funcs))


def _rat(rng: random.Random, den: int, lo: int = 0, hi: int | None = None) -> Fraction:
    hi = den if hi is None else hi
    return Fraction(rng.randint(lo, hi), den)


def random_structure(rng: random.Random, sig: Signature, size: int, den: int = 4) -> Structure:
    """A legal structure on ``size`` points with values on the grid ``1/den``."""
    carrier = [f"e{i}" for i in range(size)]
    dist = {}
    for i in range(size):
        for j in range(i + 1, size):
            dist[i, j] = _rat(rng, den, (den + 1) // 2, den)

    def metric(i, j):
        if i == j:
            return 0
        return dist[min(i, j), max(i, j)]

    preds = {}
    for p in sig.predicates:
        preds[p.name] = [_rat(rng, den) for _ in range(size ** p.arity)]
    funcs = {f.name: [rng.randrange(size) for _ in range(size ** f.arity)]
             for f in sig.functions}
    return Structure.build(sig, carrier, metric, preds, funcs)


def random_weights(rng: random.Random, k: int, den: int = 12) -> list[Fraction]:
    """``k`` positive rationals summing to 1."""
    cuts = sorted(rng.sample(range(1, den), k - 1)) if k > 1 else []
    edges = [0, *cuts, den]
    return [Fraction(b - a, den) for a, b in zip(edges, edges[1:])]


def random_field(rng: random.Random, sig: Signature, max_factors: int = 4,
                 max_size: int = 6, max_product: int | None = None) -> FiniteField:
    """A field of at most ``max_factors`` structures, each of at most ``max_size`` points."""
    k = rng.randint(1, max_factors)
    while True:
        sizes = [rng.randint(1, max_size) for _ in range(k)]
        prod = 1
        for s in sizes:
            prod *= s
        if max_product is None or prod <= max_product:
            break
    factors = tuple(random_structure(rng, sig, s) for s in sizes)
    return FiniteField(FinProbSpace.from_weights(random_weights(rng, k)), factors)


def random_section(rng: random.Random, field: FiniteField) -> tuple[int, ...]:
    return tuple(rng.randrange(M.size) for M in field.factors)


def random_term(rng: random.Random, sig: Signature, variables: Sequence[str], depth: int = 1) -> Term:
    consts = [f.name for f in sig.functions if f.arity == 0]
    unary = [f.name for f in sig.functions if f.arity == 1]
    if depth > 0 and unary and rng.random() < 0.3:
        return App(rng.choice(unary), (random_term(rng, sig, variables, depth - 1),))
    if consts and (not variables or rng.random() < 0.2):
        return App(rng.choice(consts), ())
    if not variables:
        raise ValueError("no variables or constants to build a term from")
    return Var(rng.choice(list(variables)))


def random_atom(rng: random.Random, sig: Signature, variables: Sequence[str]) -> Formula:
    syms = [sig.metric, *sig.predicates]
    p = rng.choice(syms)
    return Atom(p.name, tuple(random_term(rng, sig, variables) for _ in range(p.arity)))


def _coef(rng: random.Random) -> Fraction:
    return Fraction(rng.choice([-2, -1, 1, 2, 3]), rng.choice([1, 2, 3, 4]))


def random_affine_formula(rng: random.Random, sig: Signature, free: Sequence[str] = ("x",),
                          quantifiers: int = 2, width: int = 3) -> Formula:
    """A random affine formula with at most ``quantifiers`` quantifiers."""
    bound_names = [f"y{i}" for i in range(quantifiers)]

    def build(scope: list[str], q_left: int) -> tuple[Formula, int]:
        n = rng.randint(1, width)
        out: Formula | None = None
        for _ in range(n):
            if q_left > 0 and rng.random() < 0.4:
                v = bound_names[quantifiers - q_left]
                body, q_left = build(scope + [v], q_left - 1)
                part: Formula = (Sup if rng.random() < 0.5 else Inf)(v, body)
            elif scope:
                part = random_atom(rng, sig, scope)
            else:
                part = One()
            part = Scale(_coef(rng), part)
            out = part if out is None else Sum(out, part)
        if rng.random() < 0.3:
            out = Sum(out, Scale(_coef(rng), One()))
        assert out is not None
        return out, q_left

    f, _ = build(list(free), quantifiers)
    return f


def random_formula(rng: random.Random, sig: Signature, variables: Sequence[str] = ("x", "y"),
                   depth: int = 3) -> Formula:
    """A random formula using every connective."""
    if depth == 0 or rng.random() < 0.2:
        return One() if rng.random() < 0.1 else random_atom(rng, sig, variables)
    k = rng.randrange(7)

    def sub() -> Formula:
        return random_formula(rng, sig, variables, depth - 1)

    if k == 0:
        return Scale(_coef(rng), sub())
    if k == 1:
        return Sum(sub(), sub())
    if k == 2:
        return Max(sub(), sub())
    if k == 3:
        return Min(sub(), sub())
    if k == 4:
        return Abs(sub())
    v = rng.choice(list(variables))
    return (Sup if k == 5 else Inf)(v, sub())
