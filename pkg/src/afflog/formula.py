"""Formula syntax: terms, affine and continuous formulas, parsing and printing.

Grammar (single-sorted)::

    formula := quant | sum
    quant   := ("sup" | "inf") ident "." formula
    sum     := prod (("+" | "-") prod)*
    prod    := ["-"] (rational "*" unit | rational | unit)
    unit    := "1" | ident "(" [terms] ")" | "max(" formula "," formula ")"
             | "min(" formula "," formula ")" | "abs(" formula ")" | "(" formula ")"
    term    := ident | ident "(" [terms] ")"

A bare identifier in term position is a variable unless a signature is
supplied that declares it as a constant (0-ary function symbol).
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Union

from .core import METRIC, AfflogError, Signature, format_rational

KEYWORDS = frozenset({"sup", "inf", "max", "min", "abs"})


class FormulaSyntaxError(AfflogError):
    def __init__(self, message: str, position: int | None = None):
        where = f" at position {position}" if position is not None else ""
        super().__init__(message + where)
        self.position = position


class FormulaError(AfflogError):
    """A formula does not fit the signature or the requested class."""


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class App:
    fn: str
    args: tuple["Term", ...] = ()


Term = Union[Var, App]


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class One:
    pass


@dataclass(frozen=True)
class Scale:
    r: Fraction
    body: "Formula"


@dataclass(frozen=True)
class Sum:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Sup:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Inf:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Max:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Min:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Abs:
    body: "Formula"


Formula = Union[Atom, One, Scale, Sum, Sup, Inf, Max, Min, Abs]
Quantifier = (Sup, Inf)
Lattice = (Max, Min, Abs)


def Dist(s: Term | str, t: Term | str) -> Atom:
    return Atom(METRIC, (_term(s), _term(t)))


def _term(t: Term | str) -> Term:
    return Var(t) if isinstance(t, str) else t


def atom(pred: str, *args: Term | str) -> Atom:
    return Atom(pred, tuple(_term(a) for a in args))


def neg(f: Formula) -> Formula:
    return Scale(Fraction(-1), f)


def sub(f: Formula, g: Formula) -> Formula:
    return Sum(f, neg(g))


def affine_combination(terms: Iterable[tuple[Fraction, Formula]], constant: Fraction = Fraction(0)) -> Formula:
    """``constant*1 + sum r_i * f_i`` as a left-nested sum."""
    parts: list[Formula] = [Scale(Fraction(r), f) for r, f in terms]
    if constant:
        parts.append(Scale(Fraction(constant), One()))
    if not parts:
        return Scale(Fraction(0), One())
    out = parts[0]
    for p in parts[1:]:
        out = Sum(out, p)
    return out


def big_max(fs: Iterable[Formula]) -> Formula:
    fs = list(fs)
    out = fs[0]
    for f in fs[1:]:
        out = Max(out, f)
    return out


# ---------------------------------------------------------------------------
# variables and substitution


def term_vars(t: Term) -> Iterator[str]:
    if isinstance(t, Var):
        yield t.name
    else:
        for a in t.args:
            yield from term_vars(a)


def _free_in_order(f: Formula, bound: frozenset[str], out: dict[str, None]) -> None:
    if isinstance(f, Atom):
        for t in f.args:
            for v in term_vars(t):
                if v not in bound:
                    out.setdefault(v, None)
    elif isinstance(f, One):
        return
    elif isinstance(f, (Scale, Abs)):
        _free_in_order(f.body, bound, out)
    elif isinstance(f, (Sum, Max, Min)):
        _free_in_order(f.left, bound, out)
        _free_in_order(f.right, bound, out)
    elif isinstance(f, Quantifier):
        _free_in_order(f.body, bound | {f.var}, out)
    else:
        raise TypeError(f"not a formula: {f!r}")


def free_vars_ordered(f: Formula) -> tuple[str, ...]:
    """Free variables in order of first occurrence (left to right)."""
    out: dict[str, None] = {}
    _free_in_order(f, frozenset(), out)
    return tuple(out)


def free_vars(f: Formula) -> frozenset[str]:
    return frozenset(free_vars_ordered(f))


def all_vars(f: Formula) -> set[str]:
    """Every variable name occurring in ``f``, free or bound."""
    out: set[str] = set()
    for node in walk(f):
        if isinstance(node, Atom):
            for t in node.args:
                out.update(term_vars(t))
        elif isinstance(node, Quantifier):
            out.add(node.var)
    return out


def walk(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, (Scale, Abs, Sup, Inf)):
        yield from walk(f.body)
    elif isinstance(f, (Sum, Max, Min)):
        yield from walk(f.left)
        yield from walk(f.right)


def fresh_name(base: str, taken: set[str] | frozenset[str]) -> str:
    name = base + "'"
    while name in taken:
        name += "'"
    return name


def substitute_term(t: Term, var: str, s: Term) -> Term:
    if isinstance(t, Var):
        return s if t.name == var else t
    return App(t.fn, tuple(substitute_term(a, var, s) for a in t.args))


def substitute(f: Formula, var: str, t: Term | str) -> Formula:
    """Capture-avoiding substitution of the term ``t`` for ``var``."""
    t = _term(t)
    if not isinstance(t, (Var, App)):
        raise TypeError(f"not a term: {t!r}")
    tv = set(term_vars(t))

    def go(g: Formula) -> Formula:
        if isinstance(g, Atom):
            return Atom(g.pred, tuple(substitute_term(a, var, t) for a in g.args))
        if isinstance(g, One):
            return g
        if isinstance(g, Scale):
            return Scale(g.r, go(g.body))
        if isinstance(g, Abs):
            return Abs(go(g.body))
        if isinstance(g, (Sum, Max, Min)):
            return type(g)(go(g.left), go(g.right))
        if isinstance(g, Quantifier):
            if g.var == var or var not in free_vars(g.body):
                return g
            if g.var in tv:
                new = fresh_name(g.var, tv | all_vars(g.body) | {var})
                body = substitute(g.body, g.var, Var(new))
                return type(g)(new, go(body))
            return type(g)(g.var, go(g.body))
        raise TypeError(f"not a formula: {g!r}")

    return go(f)


def rename_free(f: Formula, mapping: dict[str, str]) -> Formula:
    """Simultaneous capture-avoiding renaming of free variables."""
    if not mapping:
        return f
    tmp_taken = all_vars(f) | set(mapping) | set(mapping.values())
    temps = {}
    for v in mapping:
        tname = fresh_name("_r" + v, tmp_taken)
        tmp_taken.add(tname)
        temps[v] = tname
    for v, tname in temps.items():
        f = substitute(f, v, Var(tname))
    for v, tname in temps.items():
        f = substitute(f, tname, Var(mapping[v]))
    return f


# ---------------------------------------------------------------------------
# signature checks, bounds


def check_formula(f: Formula, sig: Signature) -> None:
    """Raise :class:`FormulaError` on unknown symbols or arity mismatches."""

    def check_term(t: Term) -> None:
        if isinstance(t, Var):
            return
        if not sig.has_function(t.fn):
            raise FormulaError(f"unknown function symbol {t.fn!r}")
        if sig.function(t.fn).arity != len(t.args):
            raise FormulaError(f"arity mismatch for {t.fn!r}")
        for a in t.args:
            check_term(a)

    for node in walk(f):
        if isinstance(node, Atom):
            if not sig.has_predicate(node.pred):
                raise FormulaError(f"unknown predicate symbol {node.pred!r}")
            if sig.predicate(node.pred).arity != len(node.args):
                raise FormulaError(f"arity mismatch for {node.pred!r}")
            for a in node.args:
                check_term(a)
        elif isinstance(node, Quantifier) and node.var in sig.constants:
            raise FormulaError(f"cannot quantify over constant {node.var!r}")


@dataclass(frozen=True)
class Bounds:
    """Structural value interval and per-variable Lipschitz constants."""

    lo: Fraction
    hi: Fraction
    lipschitz_by_var: tuple[tuple[str, Fraction], ...]

    @property
    def lipschitz(self) -> Fraction:
        """A single constant L with |f(a) - f(b)| <= L * sum_i d(a_i, b_i)."""
        return max((c for _, c in self.lipschitz_by_var), default=Fraction(0))


def _term_lip(t: Term, sig: Signature) -> dict[str, Fraction]:
    if isinstance(t, Var):
        return {t.name: Fraction(1)}
    L = sig.function(t.fn).lipschitz
    out: dict[str, Fraction] = {}
    for a in t.args:
        for v, c in _term_lip(a, sig).items():
            out[v] = out.get(v, Fraction(0)) + L * c
    return out


def _add(a: dict, b: dict, ka=Fraction(1), kb=Fraction(1)) -> dict:
    out = {v: ka * c for v, c in a.items()}
    for v, c in b.items():
        out[v] = out.get(v, Fraction(0)) + kb * c
    return out


def _bounds(f: Formula, sig: Signature) -> tuple[Fraction, Fraction, dict[str, Fraction]]:
    if isinstance(f, Atom):
        p = sig.predicate(f.pred)
        lip: dict[str, Fraction] = {}
        for a in f.args:
            lip = _add(lip, _term_lip(a, sig), kb=p.lipschitz)
        return p.lo, p.hi, lip
    if isinstance(f, One):
        return Fraction(1), Fraction(1), {}
    if isinstance(f, Scale):
        lo, hi, lip = _bounds(f.body, sig)
        r = f.r
        lo2, hi2 = (r * lo, r * hi) if r >= 0 else (r * hi, r * lo)
        return lo2, hi2, {v: abs(r) * c for v, c in lip.items()}
    if isinstance(f, Sum):
        la, ha, pa = _bounds(f.left, sig)
        lb, hb, pb = _bounds(f.right, sig)
        return la + lb, ha + hb, _add(pa, pb)
    if isinstance(f, (Max, Min)):
        la, ha, pa = _bounds(f.left, sig)
        lb, hb, pb = _bounds(f.right, sig)
        lip = {v: max(pa.get(v, Fraction(0)), pb.get(v, Fraction(0))) for v in {*pa, *pb}}
        if isinstance(f, Max):
            return max(la, lb), max(ha, hb), lip
        return min(la, lb), min(ha, hb), lip
    if isinstance(f, Abs):
        lo, hi, lip = _bounds(f.body, sig)
        if lo >= 0:
            return lo, hi, lip
        if hi <= 0:
            return -hi, -lo, lip
        return Fraction(0), max(-lo, hi), lip
    if isinstance(f, Quantifier):
        lo, hi, lip = _bounds(f.body, sig)
        return lo, hi, {v: c for v, c in lip.items() if v != f.var}
    raise TypeError(f"not a formula: {f!r}")


def bounds(f: Formula, sig: Signature) -> Bounds:
    check_formula(f, sig)
    lo, hi, lip = _bounds(f, sig)
    return Bounds(lo, hi, tuple(sorted(lip.items())))


# ---------------------------------------------------------------------------
# classification


class FormulaClass(str, enum.Enum):
    AFFINE = "affine"
    CONVEX = "convex"
    CONCAVE = "concave"
    DELTA_CONVEX = "delta-convex"
    CONTINUOUS = "continuous"

    def __str__(self) -> str:
        return self.value


A, CVX, CCV, DC, CONT = (FormulaClass.AFFINE, FormulaClass.CONVEX, FormulaClass.CONCAVE,
                         FormulaClass.DELTA_CONVEX, FormulaClass.CONTINUOUS)

_FLIP = {A: A, CVX: CCV, CCV: CVX, DC: DC, CONT: CONT}


def _is_convexish(c: FormulaClass) -> bool:
    return c in (A, CVX)


def _is_concaveish(c: FormulaClass) -> bool:
    return c in (A, CCV)


def classify(f: Formula) -> FormulaClass:
    """Most specific syntactic class of ``f``.

    Sound but not complete: a semantically affine formula written with
    lattice connectives may be reported as something weaker.
    """
    if isinstance(f, (Atom, One)):
        return A
    if isinstance(f, Scale):
        c = classify(f.body)
        return _FLIP[c] if f.r < 0 else c
    if isinstance(f, Sum):
        a, b = classify(f.left), classify(f.right)
        if a == A and b == A:
            return A
        if CONT in (a, b):
            return CONT
        if _is_convexish(a) and _is_convexish(b):
            return CVX
        if _is_concaveish(a) and _is_concaveish(b):
            return CCV
        return DC
    if isinstance(f, Max):
        a, b = classify(f.left), classify(f.right)
        if _is_convexish(a) and _is_convexish(b):
            return CVX
        return CONT if CONT in (a, b) else DC
    if isinstance(f, Min):
        a, b = classify(f.left), classify(f.right)
        if _is_concaveish(a) and _is_concaveish(b):
            return CCV
        return CONT if CONT in (a, b) else DC
    if isinstance(f, Abs):
        c = classify(f.body)
        if c == A:
            return CVX
        return CONT if c == CONT else DC
    if isinstance(f, Sup):
        c = classify(f.body)
        return c if _is_convexish(c) else CONT
    if isinstance(f, Inf):
        c = classify(f.body)
        return c if _is_concaveish(c) else CONT
    raise TypeError(f"not a formula: {f!r}")


def is_affine(f: Formula) -> bool:
    return not any(isinstance(n, Lattice) for n in walk(f))


def is_quantifier_free(f: Formula) -> bool:
    return not any(isinstance(n, Quantifier) for n in walk(f))


# ---------------------------------------------------------------------------
# prenex form


def prenex(f: Formula) -> Formula:
    """Pull every quantifier to the front.

    Valid for the whole grammar: each connective is monotone or antitone in
    each argument and carriers are nonempty, so quantifiers commute with
    them; ``abs`` is first rewritten as ``max(phi, -phi)``.  Bound
    variables are renamed apart (``x``, ``x'``, ...) as needed.
    """
    taken = set(all_vars(f))
    prefix, matrix = _prenex(f, taken)
    out = matrix
    for kind, v in reversed(prefix):
        out = kind(v, out)
    return out


def _prenex(f: Formula, taken: set[str]) -> tuple[list[tuple[type, str]], Formula]:
    if isinstance(f, (Atom, One)):
        return [], f
    if isinstance(f, Abs):
        return _prenex(Max(f.body, neg(f.body)), taken)
    if isinstance(f, Scale):
        pre, m = _prenex(f.body, taken)
        if f.r < 0:
            pre = [(Inf if k is Sup else Sup, v) for k, v in pre]
        return pre, Scale(f.r, m)
    if isinstance(f, Quantifier):
        pre, m = _prenex(f.body, taken)
        if any(v == f.var for _, v in pre):
            # the outer binder is vacuous: it is shadowed inside
            new = fresh_name(f.var, taken)
            taken.add(new)
            return [(type(f), new)] + pre, m
        return [(type(f), f.var)] + pre, m
    if isinstance(f, (Sum, Max, Min)):
        fv_a, fv_b = free_vars(f.left), free_vars(f.right)
        pa, ma = _prenex(f.left, taken)
        pb, mb = _prenex(f.right, taken)
        ren_a = {}
        for i, (k, v) in enumerate(pa):
            if v in fv_b:
                new = fresh_name(v, taken)
                taken.add(new)
                ren_a[v] = new
                pa[i] = (k, new)
        ma = rename_free(ma, ren_a)
        names_a = {v for _, v in pa}
        ren_b = {}
        for i, (k, v) in enumerate(pb):
            if v in names_a or v in fv_a:
                new = fresh_name(v, taken)
                taken.add(new)
                ren_b[v] = new
                pb[i] = (k, new)
        mb = rename_free(mb, ren_b)
        return pa + pb, type(f)(ma, mb)
    raise TypeError(f"not a formula: {f!r}")


def quantifier_depth(f: Formula) -> int:
    if isinstance(f, (Atom, One)):
        return 0
    if isinstance(f, (Scale, Abs)):
        return quantifier_depth(f.body)
    if isinstance(f, Quantifier):
        return 1 + quantifier_depth(f.body)
    return max(quantifier_depth(f.left), quantifier_depth(f.right))


def quantifier_count(f: Formula) -> int:
    return sum(isinstance(n, Quantifier) for n in walk(f))


# ---------------------------------------------------------------------------
# printing


def format_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if not t.args:
        return t.fn
    return f"{t.fn}({', '.join(format_term(a) for a in t.args)})"


def _unit(f: Formula) -> str:
    if isinstance(f, (Atom, One, Max, Min, Abs, Sum)):
        return to_text(f)
    return f"({to_text(f)})"


def _operand(f: Formula) -> str:
    return f"({to_text(f)})" if isinstance(f, Quantifier) else to_text(f)


def to_text(f: Formula) -> str:
    """Canonical text: sums fully parenthesized, quantifiers guarded."""
    if isinstance(f, Atom):
        return f"{f.pred}({', '.join(format_term(a) for a in f.args)})"
    if isinstance(f, One):
        return "1"
    if isinstance(f, Scale):
        return f"{format_rational(f.r)}*{_unit(f.body)}"
    if isinstance(f, Sum):
        return f"({_operand(f.left)} + {_operand(f.right)})"
    if isinstance(f, Sup):
        return f"sup {f.var}. {to_text(f.body)}"
    if isinstance(f, Inf):
        return f"inf {f.var}. {to_text(f.body)}"
    if isinstance(f, Max):
        return f"max({to_text(f.left)}, {to_text(f.right)})"
    if isinstance(f, Min):
        return f"min({to_text(f.left)}, {to_text(f.right)})"
    if isinstance(f, Abs):
        return f"abs({to_text(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\s*/\s*\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*'*)|(?P<op>[()+\-*.,]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise FormulaSyntaxError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), start))
        pos = m.end()
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, text: str, sig: Signature | None):
        self.toks = _tokenize(text)
        self.i = 0
        self.sig = sig

    def peek(self, k: int = 0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.next()
        if val != value or kind == "end":
            raise FormulaSyntaxError(f"expected {value!r}, found {val or 'end of input'!r}", pos)

    def at(self, value: str) -> bool:
        kind, val, _ = self.peek()
        return kind != "end" and val == value

    def formula(self) -> Formula:
        kind, val, pos = self.peek()
        if kind == "ident" and val in ("sup", "inf"):
            self.next()
            k2, var, p2 = self.next()
            if k2 != "ident" or var in KEYWORDS:
                raise FormulaSyntaxError("expected a variable after quantifier", p2)
            if self.sig is not None and (var in self.sig.constants):
                raise FormulaError(f"cannot quantify over constant {var!r}")
            self.expect(".")
            body = self.formula()
            return (Sup if val == "sup" else Inf)(var, body)
        return self.sum()

    def sum(self) -> Formula:
        left = self.prod()
        while self.at("+") or self.at("-"):
            _, op, _ = self.next()
            if self.peek()[0] == "ident" and self.peek()[1] in ("sup", "inf"):
                right = self.formula()
            else:
                right = self.prod()
            left = Sum(left, right if op == "+" else _negate(right))
        return left

    def prod(self) -> Formula:
        if self.at("-"):
            self.next()
            return _negate(self.prod())
        kind, val, pos = self.peek()
        if kind == "ident" and val in ("sup", "inf"):
            return self.formula()
        if kind == "num":
            self.next()
            num, _, den = val.replace(" ", "").partition("/")
            if den and int(den) == 0:
                raise FormulaSyntaxError("zero denominator", pos)
            r = Fraction(int(num), int(den) if den else 1)
            if self.at("*"):
                self.next()
                return Scale(r, self.unit())
            if val == "1":
                return One()
            return Scale(r, One())
        return self.unit()

    def unit(self) -> Formula:
        kind, val, pos = self.next()
        if kind == "num":
            if val == "1":
                return One()
            raise FormulaSyntaxError(f"unexpected number {val!r}", pos)
        if kind == "op" and val == "(":
            f = self.formula()
            self.expect(")")
            return f
        if kind == "ident":
            if val in ("max", "min"):
                self.expect("(")
                a = self.formula()
                self.expect(",")
                b = self.formula()
                self.expect(")")
                return Max(a, b) if val == "max" else Min(a, b)
            if val == "abs":
                self.expect("(")
                a = self.formula()
                self.expect(")")
                return Abs(a)
            if val in ("sup", "inf"):
                raise FormulaSyntaxError("quantifier needs parentheses here", pos)
            if not self.at("("):
                raise FormulaSyntaxError(f"expected '(' after predicate {val!r}", pos)
            self.next()
            args = self.terms()
            self.expect(")")
            if self.sig is not None:
                if not self.sig.has_predicate(val):
                    raise FormulaError(f"unknown predicate symbol {val!r}")
                if self.sig.predicate(val).arity != len(args):
                    raise FormulaError(f"arity mismatch for {val!r}")
            elif val == METRIC and len(args) != 2:
                raise FormulaError("arity mismatch for 'd'")
            return Atom(val, tuple(args))
        raise FormulaSyntaxError(f"unexpected {val or 'end of input'!r}", pos)

    def terms(self) -> list[Term]:
        if self.at(")"):
            return []
        out = [self.term()]
        while self.at(","):
            self.next()
            out.append(self.term())
        return out

    def term(self) -> Term:
        kind, val, pos = self.next()
        if kind != "ident" or val in KEYWORDS:
            raise FormulaSyntaxError(f"expected a term, found {val or 'end of input'!r}", pos)
        if self.at("("):
            self.next()
            args = self.terms()
            self.expect(")")
            self._check_fn(val, len(args))
            return App(val, tuple(args))
        if self.sig is not None and val in self.sig.constants:
            return App(val, ())
        if self.sig is not None and self.sig.has_function(val):
            raise FormulaError(f"arity mismatch for {val!r}")
        return Var(val)

    def _check_fn(self, name: str, arity: int) -> None:
        if self.sig is None:
            return
        if not self.sig.has_function(name):
            raise FormulaError(f"unknown function symbol {name!r}")
        if self.sig.function(name).arity != arity:
            raise FormulaError(f"arity mismatch for {name!r}")


def _negate(f: Formula) -> Formula:
    if isinstance(f, Scale):
        return Scale(-f.r, f.body)
    return Scale(Fraction(-1), f)


def parse(text: str, signature: Signature | None = None) -> Formula:
    p = _Parser(text, signature)
    f = p.formula()
    kind, val, pos = p.peek()
    if kind != "end":
        raise FormulaSyntaxError(f"unexpected {val!r}", pos)
    return f
