"""Signatures, finite metric structures and finite probability spaces.

All values are exact rationals.  Predicate and metric tables are stored as
integer numerators over one shared denominator per table, which keeps the
evaluator on fast integer arithmetic without giving up exactness; every
public accessor hands back :class:`fractions.Fraction`.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

METRIC = "d"

_RATIONAL_RE = re.compile(r"^\s*(-?\d+)(?:\s*/\s*(\d+))?\s*$")


class AfflogError(Exception):
    """Base class for all domain errors raised by the package."""


class SignatureError(AfflogError):
    pass


class StructureError(AfflogError):
    """A structure document or table is malformed or violates an axiom."""

    def __init__(self, message: str, violations: Sequence[str] = ()):
        super().__init__(message)
        self.violations = list(violations)


class FormatError(AfflogError):
    """Parse error in an external document, with position when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


class CapExceededError(AfflogError):
    pass


# ---------------------------------------------------------------------------
# rationals


def parse_rational(text: Any) -> Fraction:
    """Parse ``"p/q"`` or ``"n"`` (ints are accepted as well) exactly."""
    if isinstance(text, bool):
        raise FormatError(f"not a rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, Fraction):
        return text
    if not isinstance(text, str):
        raise FormatError(f"not a rational: {text!r}")
    m = _RATIONAL_RE.match(text)
    if not m:
        raise FormatError(f"not a rational: {text!r}")
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise FormatError(f"zero denominator in {text!r}")
    return Fraction(int(m.group(1)), den)


def format_rational(r: Fraction | int) -> str:
    r = Fraction(r)
    if r.denominator == 1:
        return str(r.numerator)
    return f"{r.numerator}/{r.denominator}"


def as_rational(value: Any) -> Fraction:
    if type(value) is Fraction:
        return value
    if isinstance(value, float):
        raise TypeError("floats are not accepted; use Fraction or 'p/q' strings")
    if isinstance(value, str):
        return parse_rational(value)
    return Fraction(value)


# ---------------------------------------------------------------------------
# tables


@dataclass(frozen=True)
class Table:
    """Rational values over ``carrier^arity`` in row-major carrier order.

    Stored canonically: ``den`` is the least common denominator and the
    numerators share no common factor with it.
    """

    arity: int
    size: int
    den: int
    nums: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.nums) != self.size**self.arity:
            raise StructureError(
                f"table of arity {self.arity} over {self.size} elements needs "
                f"{self.size ** self.arity} entries, got {len(self.nums)}"
            )
        if self.den <= 0:
            raise StructureError("table denominator must be positive")
        g = math.gcd(self.den, *self.nums) if self.nums else self.den
        if g != 1:
            object.__setattr__(self, "den", self.den // g)
            object.__setattr__(self, "nums", tuple(n // g for n in self.nums))

    @classmethod
    def from_values(cls, arity: int, size: int, values: Iterable[Any]) -> "Table":
        vals = [as_rational(v) for v in values]
        den = math.lcm(*(v.denominator for v in vals)) if vals else 1
        return cls(arity, size, den, tuple(v.numerator * (den // v.denominator) for v in vals))

    @classmethod
    def from_function(cls, arity: int, size: int, fn) -> "Table":
        return cls.from_values(
            arity, size, (fn(t) for t in itertools.product(range(size), repeat=arity))
        )

    def flat_index(self, idx: Sequence[int]) -> int:
        k = 0
        for i in idx:
            k = k * self.size + i
        return k

    def __getitem__(self, idx: Sequence[int]) -> Fraction:
        return Fraction(self.nums[self.flat_index(idx)], self.den)

    def values(self) -> list[Fraction]:
        return [Fraction(n, self.den) for n in self.nums]


def _nest(flat: Sequence[Any], size: int, arity: int) -> Any:
    if arity == 0:
        return flat[0]
    if arity == 1:
        return list(flat)
    step = size ** (arity - 1)
    return [_nest(flat[i * step:(i + 1) * step], size, arity - 1) for i in range(size)]


def _flatten(nested: Any, size: int, arity: int, what: str) -> list[Any]:
    if arity == 0:
        if isinstance(nested, list):
            raise FormatError(f"{what}: expected a scalar")
        return [nested]
    if not isinstance(nested, list) or len(nested) != size:
        raise FormatError(f"{what}: expected an array of length {size}")
    out: list[Any] = []
    for row in nested:
        out.extend(_flatten(row, size, arity - 1, what))
    return out


# ---------------------------------------------------------------------------
# signatures


@dataclass(frozen=True)
class PredicateSymbol:
    name: str
    arity: int
    lo: Fraction = Fraction(0)
    hi: Fraction = Fraction(1)
    lipschitz: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        for attr in ("lo", "hi", "lipschitz"):
            object.__setattr__(self, attr, as_rational(getattr(self, attr)))


@dataclass(frozen=True)
class FunctionSymbol:
    name: str
    arity: int
    lipschitz: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        object.__setattr__(self, "lipschitz", as_rational(self.lipschitz))


@dataclass(frozen=True)
class Signature:
    """Predicate and function symbols; the metric ``d`` is implicit.

    Continuity moduli are linear, ``delta(eps) = eps / L``, so each symbol
    carries a single Lipschitz constant with respect to the sum metric on
    tuples.
    """

    predicates: tuple[PredicateSymbol, ...] = ()
    functions: tuple[FunctionSymbol, ...] = ()
    metric_bound: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        object.__setattr__(self, "predicates", tuple(self.predicates))
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "metric_bound", as_rational(self.metric_bound))
        seen = {METRIC}
        for sym in (*self.predicates, *self.functions):
            if sym.name in seen:
                raise SignatureError(f"duplicate symbol name {sym.name!r}")
            seen.add(sym.name)
            if sym.arity < 0:
                raise SignatureError(f"negative arity for {sym.name!r}")
            if as_rational(sym.lipschitz) <= 0:
                raise SignatureError(f"Lipschitz constant of {sym.name!r} must be positive")
        for p in self.predicates:
            if p.lo > p.hi:
                raise SignatureError(f"empty value interval for {p.name!r}")
        if self.metric_bound <= 0:
            raise SignatureError("metric bound must be positive")

    @property
    def metric(self) -> PredicateSymbol:
        return PredicateSymbol(METRIC, 2, Fraction(0), self.metric_bound, Fraction(1))

    def predicate(self, name: str) -> PredicateSymbol:
        if name == METRIC:
            return self.metric
        for p in self.predicates:
            if p.name == name:
                return p
        raise KeyError(name)

    def function(self, name: str) -> FunctionSymbol:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def has_predicate(self, name: str) -> bool:
        return name == METRIC or any(p.name == name for p in self.predicates)

    def has_function(self, name: str) -> bool:
        return any(f.name == name for f in self.functions)

    @property
    def constants(self) -> frozenset[str]:
        return frozenset(f.name for f in self.functions if f.arity == 0)

    def symbol_names(self) -> frozenset[str]:
        return frozenset({METRIC, *(s.name for s in (*self.predicates, *self.functions))})

    def extend(self, predicates: Sequence[PredicateSymbol] = (),
               functions: Sequence[FunctionSymbol] = ()) -> "Signature":
        return Signature(self.predicates + tuple(predicates),
                         self.functions + tuple(functions), self.metric_bound)


# ---------------------------------------------------------------------------
# structures


@dataclass(frozen=True, eq=True)
class Structure:
    """A finite metric structure.

    Elements are addressed by their position in ``carrier``; the carrier
    order fixes every iteration and output order.
    """

    signature: Signature
    carrier: tuple[str, ...]
    metric: Table
    predicates: Mapping[str, Table] = field(default_factory=dict)
    functions: Mapping[str, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        carrier = tuple(self.carrier)
        object.__setattr__(self, "carrier", carrier)
        n = len(carrier)
        if n == 0:
            raise StructureError("carrier must be nonempty")
        if len(set(carrier)) != n:
            raise StructureError("carrier labels must be distinct")
        if self.metric.arity != 2 or self.metric.size != n:
            raise StructureError("metric table has the wrong shape")
        sig = self.signature
        preds = dict(self.predicates)
        funcs = {k: tuple(v) for k, v in self.functions.items()}
        for p in sig.predicates:
            t = preds.get(p.name)
            if t is None:
                raise StructureError(f"missing table for predicate {p.name!r}")
            if t.arity != p.arity or t.size != n:
                raise StructureError(f"table for {p.name!r} has the wrong shape")
        for f in sig.functions:
            t = funcs.get(f.name)
            if t is None:
                raise StructureError(f"missing table for function {f.name!r}")
            if len(t) != n**f.arity:
                raise StructureError(f"table for {f.name!r} has the wrong shape")
            if any(not 0 <= v < n for v in t):
                raise StructureError(f"function {f.name!r} leaves the carrier")
        extra = (set(preds) - {p.name for p in sig.predicates}) | (
            set(funcs) - {f.name for f in sig.functions})
        if extra:
            raise StructureError(f"tables for unknown symbols: {sorted(extra)}")
        # canonical dict order follows the signature
        object.__setattr__(self, "predicates", {p.name: preds[p.name] for p in sig.predicates})
        object.__setattr__(self, "functions", {f.name: funcs[f.name] for f in sig.functions})
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(carrier)})

    def __hash__(self) -> int:
        return hash((self.carrier, self.metric))

    @property
    def size(self) -> int:
        return len(self.carrier)

    def index(self, element: int | str) -> int:
        if isinstance(element, str):
            try:
                return self._index[element]  # type: ignore[attr-defined]
            except KeyError:
                raise StructureError(f"unknown element {element!r}") from None
        if not 0 <= element < self.size:
            raise StructureError(f"element index {element} out of range")
        return element

    def table(self, predicate: str) -> Table:
        return self.metric if predicate == METRIC else self.predicates[predicate]

    def dist(self, a: int | str, b: int | str) -> Fraction:
        return self.metric[(self.index(a), self.index(b))]

    def value(self, predicate: str, args: Sequence[int | str]) -> Fraction:
        return self.table(predicate)[tuple(self.index(a) for a in args)]

    def apply(self, function: str, args: Sequence[int | str]) -> int:
        t = self.functions[function]
        k = 0
        for a in args:
            k = k * self.size + self.index(a)
        return t[k]

    def constant(self, name: str) -> int:
        return self.functions[name][0]

    @classmethod
    def build(cls, signature: Signature, carrier: Sequence[str], metric,
              predicates: Mapping[str, Any] | None = None,
              functions: Mapping[str, Any] | None = None) -> "Structure":
        """Build from Python callables or flat value lists.

        ``metric`` and each predicate may be a callable on index tuples or a
        flat row-major sequence; functions likewise return carrier indices.
        """
        n = len(carrier)
        predicates = predicates or {}
        functions = functions or {}

        def mk(arity, spec):
            if callable(spec):
                return Table.from_function(arity, n, lambda t: spec(*t))
            return Table.from_values(arity, n, spec)

        ptabs = {p.name: mk(p.arity, predicates[p.name]) for p in signature.predicates}
        ftabs = {}
        for f in signature.functions:
            spec = functions[f.name]
            if callable(spec):
                ftabs[f.name] = tuple(spec(*t) for t in itertools.product(range(n), repeat=f.arity))
            else:
                ftabs[f.name] = tuple(spec)
        return cls(signature, tuple(carrier), mk(2, metric), ptabs, ftabs)


@dataclass(frozen=True)
class FinProbSpace:
    """Finitely many atoms with positive rational weights summing to 1."""

    atoms: tuple[tuple[str, Fraction], ...]

    def __post_init__(self) -> None:
        atoms = tuple((str(lab), as_rational(w)) for lab, w in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not atoms:
            raise StructureError("a probability space needs at least one atom")
        if len({lab for lab, _ in atoms}) != len(atoms):
            raise StructureError("atom labels must be distinct")
        if any(w <= 0 for _, w in atoms):
            raise StructureError("atom weights must be positive")
        if sum(w for _, w in atoms) != 1:
            raise StructureError("atom weights must sum to 1")

    @classmethod
    def from_weights(cls, weights: Sequence[Any], labels: Sequence[str] | None = None) -> "FinProbSpace":
        labels = labels if labels is not None else [f"w{i}" for i in range(len(weights))]
        return cls(tuple(zip(labels, weights)))

    @classmethod
    def uniform(cls, n: int) -> "FinProbSpace":
        return cls.from_weights([Fraction(1, n)] * n)

    @property
    def weights(self) -> tuple[Fraction, ...]:
        return tuple(w for _, w in self.atoms)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def max_atom(self) -> Fraction:
        return max(self.weights)


# ---------------------------------------------------------------------------
# validation


def _int_array(values: Sequence[int], shape: tuple[int, ...], bound: int) -> np.ndarray:
    # int64 when every product we form stays far from overflow
    dtype = np.int64 if bound < 2**62 else object
    return np.array(values, dtype=dtype).reshape(shape)


def validate_structure(S: Structure) -> list[str]:
    """Every metric, bound and Lipschitz violation of ``S``, with witnesses.

    The Lipschitz conditions are checked one coordinate at a time; with the
    sum metric on tuples this is equivalent to the full condition whenever
    the metric itself satisfies the triangle inequality.
    """
    out: list[str] = []
    n = S.size
    lab = S.carrier
    M = S.metric
    bound = S.signature.metric_bound
    mmax = max(map(abs, M.nums))
    D = _int_array(M.nums, (n, n), 2 * mmax + 1)

    def tup(ix) -> str:
        return ",".join(lab[int(i)] for i in ix)

    for i in range(n):
        for j in range(n):
            v = M.nums[i * n + j]
            if i == j and v != 0:
                out.append(f"metric reflexivity violated at ({lab[i]},{lab[j]})")
            if i != j and v == 0:
                out.append(f"metric separation violated at ({lab[i]},{lab[j]})")
            if i < j and v != M.nums[j * n + i]:
                out.append(f"metric symmetry violated at ({lab[i]},{lab[j]})")
            if v < 0 or Fraction(v, M.den) > bound:
                out.append(f"metric bound violated at ({lab[i]},{lab[j]})")
    for i in range(n):
        # d(i,k) <= d(i,j) + d(j,k) for all j, k
        bad = D[i][None, :] > D[i][:, None] + D
        for j, k in np.argwhere(bad):
            out.append(f"triangle inequality violated at ({lab[i]},{lab[int(j)]},{lab[int(k)]})")

    for p in S.signature.predicates:
        t = S.predicates[p.name]
        lo_num, hi_num = p.lo * t.den, p.hi * t.den
        for k, v in enumerate(t.nums):
            if v < lo_num or v > hi_num:
                ix = _unflat(k, n, p.arity)
                out.append(f"bound of {p.name} violated at ({tup(ix)})")
        if p.arity == 0:
            continue
        L = p.lipschitz
        bnd = 2 * max(map(abs, t.nums)) * M.den * L.denominator + L.numerator * mmax * t.den
        P = _int_array(t.nums, (n,) * p.arity, bnd)
        rhs = D * (L.numerator * t.den)
        for c in range(p.arity):
            Pc = np.moveaxis(P, c, 0).reshape(n, -1)
            for a in range(n - 1):
                lhs = abs(Pc[a + 1:] - Pc[a]) * (M.den * L.denominator)
                hits = np.argwhere(lhs > rhs[a, a + 1:, None])
                out.extend(_lipschitz_report(p.name, a, hits, c, n, p.arity, tup))
    for f in S.signature.functions:
        if f.arity == 0:
            continue
        L = f.lipschitz
        bnd = mmax * (L.numerator + L.denominator)
        F = np.array(S.functions[f.name], dtype=np.int64).reshape((n,) * f.arity)
        Df = D if bnd < 2**62 else D.astype(object)
        rhs = Df * L.numerator
        for c in range(f.arity):
            Fc = np.moveaxis(F, c, 0).reshape(n, -1)
            for a in range(n - 1):
                lhs = Df[Fc[a + 1:], Fc[a]] * L.denominator
                hits = np.argwhere(lhs > rhs[a, a + 1:, None])
                out.extend(_lipschitz_report(f.name, a, hits, c, n, f.arity, tup))
    return out


def _unflat(k: int, n: int, arity: int) -> tuple[int, ...]:
    ix = []
    for _ in range(arity):
        k, r = divmod(k, n)
        ix.append(r)
    return tuple(reversed(ix))


def _lipschitz_report(name, a, hits, c, n, arity, tup) -> list[str]:
    out = []
    for db, rest in hits:
        b = a + 1 + int(db)
        others = list(_unflat(int(rest), n, arity - 1))
        t1 = others[:c] + [a] + others[c:]
        t2 = others[:c] + [b] + others[c:]
        out.append(f"Lipschitz condition of {name} violated at ({tup(t1)}) vs ({tup(t2)})")
    return out


def check_structure(S: Structure) -> Structure:
    """Raise :class:`StructureError` unless ``S`` is a legal structure."""
    report = validate_structure(S)
    if report:
        raise StructureError(f"invalid structure: {report[0]}", report)
    return S


# ---------------------------------------------------------------------------
# documents


def _pairs_no_dupes(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise FormatError(f"duplicate key {k!r}")
        out[k] = v
    return out


def loads_json(text: str) -> Any:
    try:
        return json.loads(text, object_pairs_hook=_pairs_no_dupes)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, exc.lineno, exc.colno) from None


def dumps_json(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def signature_to_doc(sig: Signature) -> dict:
    return {
        "metric_bound": format_rational(sig.metric_bound),
        "predicates": [
            {"name": p.name, "arity": p.arity,
             "range": [format_rational(p.lo), format_rational(p.hi)],
             "lipschitz": format_rational(p.lipschitz)} for p in sig.predicates],
        "functions": [
            {"name": f.name, "arity": f.arity, "lipschitz": format_rational(f.lipschitz)}
            for f in sig.functions],
    }


def _require(doc: Mapping, key: str, what: str):
    if not isinstance(doc, Mapping) or key not in doc:
        raise FormatError(f"{what}: missing key {key!r}")
    return doc[key]


def signature_from_doc(doc: Mapping) -> Signature:
    if not isinstance(doc, Mapping):
        raise FormatError("signature must be an object")
    preds, funcs, seen = [], [], {METRIC}
    for p in doc.get("predicates", []):
        name = _require(p, "name", "predicate")
        if name in seen:
            raise FormatError(f"duplicate symbol name {name!r}")
        seen.add(name)
        lo, hi = p.get("range", ["0", "1"])
        preds.append(PredicateSymbol(name, int(_require(p, "arity", name)), parse_rational(lo),
                                     parse_rational(hi), parse_rational(p.get("lipschitz", "1"))))
    for f in doc.get("functions", []):
        name = _require(f, "name", "function")
        if name in seen:
            raise FormatError(f"duplicate symbol name {name!r}")
        seen.add(name)
        funcs.append(FunctionSymbol(name, int(_require(f, "arity", name)),
                                    parse_rational(f.get("lipschitz", "1"))))
    try:
        return Signature(tuple(preds), tuple(funcs), parse_rational(doc.get("metric_bound", "1")))
    except SignatureError as exc:
        raise FormatError(str(exc)) from None


def structure_to_doc(S: Structure) -> dict:
    n = S.size
    return {
        "signature": signature_to_doc(S.signature),
        "carrier": list(S.carrier),
        "metric": _nest([format_rational(v) for v in S.metric.values()], n, 2),
        "predicates": {name: _nest([format_rational(v) for v in t.values()], n, t.arity)
                       for name, t in S.predicates.items()},
        "functions": {f.name: _nest([S.carrier[v] for v in S.functions[f.name]], n, f.arity)
                      for f in S.signature.functions},
    }


def structure_from_doc(doc: Mapping, validate: bool = True) -> Structure:
    sig = signature_from_doc(_require(doc, "signature", "structure"))
    carrier = _require(doc, "carrier", "structure")
    if not isinstance(carrier, list) or not all(isinstance(c, str) for c in carrier):
        raise FormatError("carrier must be an array of strings")
    if len(set(carrier)) != len(carrier):
        raise FormatError("duplicate carrier element")
    n = len(carrier)
    index = {c: i for i, c in enumerate(carrier)}
    metric = Table.from_values(2, n, [parse_rational(v) for v in _flatten(
        _require(doc, "metric", "structure"), n, 2, "metric")])
    pdoc = doc.get("predicates", {})
    fdoc = doc.get("functions", {})
    preds = {}
    for p in sig.predicates:
        if p.name not in pdoc:
            raise FormatError(f"missing table for predicate {p.name!r}")
        preds[p.name] = Table.from_values(
            p.arity, n, [parse_rational(v) for v in _flatten(pdoc[p.name], n, p.arity, p.name)])
    funcs = {}
    for f in sig.functions:
        if f.name not in fdoc:
            raise FormatError(f"missing table for function {f.name!r}")
        try:
            funcs[f.name] = tuple(index[v] for v in _flatten(fdoc[f.name], n, f.arity, f.name))
        except (KeyError, TypeError):
            raise FormatError(f"function {f.name!r} names an unknown element") from None
    unknown = (set(pdoc) - {p.name for p in sig.predicates}) | (
        set(fdoc) - {f.name for f in sig.functions})
    if unknown:
        raise FormatError(f"tables for undeclared symbols: {sorted(unknown)}")
    S = Structure(sig, tuple(carrier), metric, preds, funcs)
    if validate:
        check_structure(S)
    return S


def store_structure(S: Structure) -> str:
    return dumps_json(structure_to_doc(S))


def load_structure(text: str, validate: bool = True) -> Structure:
    return structure_from_doc(loads_json(text), validate=validate)


def space_to_doc(space: FinProbSpace) -> dict:
    return {"atoms": [{"label": lab, "weight": format_rational(w)} for lab, w in space.atoms]}


def space_from_doc(doc: Mapping) -> FinProbSpace:
    atoms = _require(doc, "atoms", "probability space")
    try:
        return FinProbSpace(tuple((_require(a, "label", "atom"), parse_rational(_require(a, "weight", "atom")))
                                  for a in atoms))
    except StructureError as exc:
        raise FormatError(str(exc)) from None
