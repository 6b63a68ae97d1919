"""Exact evaluation of formulas in finite structures.

A formula is compiled once per structure into nested closures computing an
integer numerator over a denominator fixed at compile time.  Quantifiers
are exhaustive loops over the carrier.
"""

from __future__ import annotations

import itertools
import math
import os
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .core import AfflogError, CapExceededError, Structure
from .formula import (Abs, Atom, Formula, Inf, Max, Min, One, Scale, Sum, Sup, Term, Var,
                      check_formula, free_vars_ordered)

DEFAULT_CAP = 20000


class EvaluationError(AfflogError):
    """Unbound variable or other evaluation failure."""


def carrier_cap(cap: int | None = None) -> int:
    """The configured carrier-size guardrail (``AFFLOG_CAP`` or 20000)."""
    if cap is not None:
        return int(cap)
    env = os.environ.get("AFFLOG_CAP")
    if env:
        try:
            return int(env)
        except ValueError:
            raise AfflogError(f"AFFLOG_CAP must be an integer, got {env!r}") from None
    return DEFAULT_CAP


def check_cap(size: int, cap: int | None = None, what: str = "carrier") -> None:
    limit = carrier_cap(cap)
    if size > limit:
        raise CapExceededError(f"{what} of size {size} exceeds the cap {limit}")


Env = list
TermFn = Callable[[Env], int]
NumFn = Callable[[Env], int]


def _compile_term(t: Term, S: Structure, scope: Mapping[str, int]) -> TermFn:
    if isinstance(t, Var):
        if t.name not in scope:
            raise EvaluationError(f"unbound variable {t.name!r}")
        slot = scope[t.name]
        return lambda env: env[slot]
    table = S.functions[t.fn]
    n = S.size
    args = [_compile_term(a, S, scope) for a in t.args]
    if not args:
        c = table[0]
        return lambda env: c
    if len(args) == 1:
        (a0,) = args
        return lambda env: table[a0(env)]
    if len(args) == 2:
        a0, a1 = args
        return lambda env: table[a0(env) * n + a1(env)]

    def app(env):
        k = 0
        for a in args:
            k = k * n + a(env)
        return table[k]

    return app


def _compile(f: Formula, S: Structure, scope: dict[str, int], nslots: list[int]) -> tuple[int, NumFn]:
    """Return ``(den, fn)`` with ``f(env) == fn(env) / den``."""
    if isinstance(f, Atom):
        tab = S.table(f.pred)
        nums = tab.nums
        n = S.size
        if all(isinstance(a, Var) for a in f.args):
            for a in f.args:
                if a.name not in scope:
                    raise EvaluationError(f"unbound variable {a.name!r}")
            slots = [scope[a.name] for a in f.args]
            if len(slots) == 1:
                (s0,) = slots
                return tab.den, lambda env: nums[env[s0]]
            if len(slots) == 2:
                s0, s1 = slots
                return tab.den, lambda env: nums[env[s0] * n + env[s1]]
        args = [_compile_term(a, S, scope) for a in f.args]
        if not args:
            v = nums[0]
            return tab.den, lambda env: v
        if len(args) == 1:
            (a0,) = args
            return tab.den, lambda env: nums[a0(env)]
        if len(args) == 2:
            a0, a1 = args
            return tab.den, lambda env: nums[a0(env) * n + a1(env)]

        def atom(env):
            k = 0
            for a in args:
                k = k * n + a(env)
            return nums[k]

        return tab.den, atom
    if isinstance(f, One):
        return 1, lambda env: 1
    if isinstance(f, Scale):
        d, g = _compile(f.body, S, scope, nslots)
        p, q = f.r.numerator, f.r.denominator
        if p == 0:
            return 1, lambda env: 0
        if p == 1:
            return d * q, g
        return d * q, lambda env: p * g(env)
    if isinstance(f, (Sum, Max, Min)):
        d1, g1 = _compile(f.left, S, scope, nslots)
        d2, g2 = _compile(f.right, S, scope, nslots)
        d = math.lcm(d1, d2)
        k1, k2 = d // d1, d // d2
        if isinstance(f, Sum):
            if k1 == 1 and k2 == 1:
                return d, lambda env: g1(env) + g2(env)
            return d, lambda env: k1 * g1(env) + k2 * g2(env)
        if isinstance(f, Max):
            return d, lambda env: max(k1 * g1(env), k2 * g2(env))
        return d, lambda env: min(k1 * g1(env), k2 * g2(env))
    if isinstance(f, Abs):
        d, g = _compile(f.body, S, scope, nslots)
        return d, lambda env: abs(g(env))
    if isinstance(f, (Sup, Inf)):
        slot = nslots[0]
        nslots[0] += 1
        inner = dict(scope)
        inner[f.var] = slot
        d, g = _compile(f.body, S, inner, nslots)
        rng = range(S.size)
        if isinstance(f, Sup):
            def sup(env):
                best = None
                for c in rng:
                    env[slot] = c
                    v = g(env)
                    if best is None or v > best:
                        best = v
                return best
            return d, sup

        def inf(env):
            best = None
            for c in rng:
                env[slot] = c
                v = g(env)
                if best is None or v < best:
                    best = v
            return best
        return d, inf
    raise TypeError(f"not a formula: {f!r}")


class Compiled:
    """A formula compiled against one structure and a variable order."""

    def __init__(self, S: Structure, f: Formula, variables: Sequence[str]):
        check_formula(f, S.signature)
        missing = [v for v in free_vars_ordered(f) if v not in variables]
        if missing:
            raise EvaluationError(f"unbound variable {missing[0]!r}")
        if len(set(variables)) != len(variables):
            raise EvaluationError("duplicate variable in the variable order")
        self.structure = S
        self.formula = f
        self.variables = tuple(variables)
        scope = {v: i for i, v in enumerate(self.variables)}
        nslots = [len(self.variables)]
        self.den, self._fn = _compile(f, S, scope, nslots)
        self._nslots = nslots[0]

    def numerator(self, indices: Sequence[int]) -> int:
        env = list(indices) + [0] * (self._nslots - len(indices))
        return self._fn(env)

    def __call__(self, indices: Sequence[int]) -> Fraction:
        return Fraction(self.numerator(indices), self.den)

    def table_numerators(self) -> list[int]:
        """Numerators over ``den`` for every tuple, in carrier order."""
        k = len(self.variables)
        env = [0] * self._nslots
        fn = self._fn
        out = []
        for tup in itertools.product(range(self.structure.size), repeat=k):
            env[:k] = tup
            out.append(fn(env))
        return out

    def table(self) -> list[Fraction]:
        d = self.den
        return [Fraction(v, d) for v in self.table_numerators()]


def compile_formula(S: Structure, f: Formula, variables: Sequence[str] | None = None) -> Compiled:
    return Compiled(S, f, free_vars_ordered(f) if variables is None else variables)


def evaluate(S: Structure, f: Formula, assignment: Mapping[str, int | str] | None = None) -> Fraction:
    """The exact value of ``f`` in ``S`` under ``assignment``.

    Assignment values may be carrier labels or carrier indices.
    """
    assignment = dict(assignment or {})
    fv = free_vars_ordered(f)
    for v in fv:
        if v not in assignment:
            raise EvaluationError(f"unbound variable {v!r}")
    c = Compiled(S, f, fv)
    return c([S.index(assignment[v]) for v in fv])


def resolve_variables(f: Formula, variables: Sequence[str] | int | None) -> tuple[str, ...]:
    """A declared variable order for ``f``.

    An integer ``n`` means the free variables in order of first occurrence,
    padded with unused dummies up to length ``n``.
    """
    fv = free_vars_ordered(f)
    if variables is None:
        return fv
    if isinstance(variables, int):
        if len(fv) > variables:
            raise EvaluationError(f"formula has {len(fv)} free variables, more than {variables}")
        pad = []
        i = 0
        while len(fv) + len(pad) < variables:
            name = f"_v{i}"
            i += 1
            if name not in fv:
                pad.append(name)
        return fv + tuple(pad)
    return tuple(variables)


def eval_all(S: Structure, f: Formula, variables: Sequence[str] | int | None = None,
             cap: int | None = None) -> list[Fraction]:
    """Values of ``f`` at every tuple over ``variables``, in carrier order."""
    vs = resolve_variables(f, variables)
    check_cap(S.size ** len(vs), cap, what="tuple table")
    return Compiled(S, f, vs).table()
