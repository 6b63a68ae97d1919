"""Example theories at finite scale: probability algebras, classical
structures and measure-preserving ℤ-systems."""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .convex import FinMeasure
from .core import (AfflogError, CapExceededError, FinProbSpace, FunctionSymbol, PredicateSymbol,
                   Signature, Structure, Table, as_rational)
from .evaluation import evaluate
from .formula import KEYWORDS, App, Atom, Formula, Var, parse
from .modelalg import FiniteField, convex_combine

PRA_CAP = 10
PMP_CAP = 8
_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
PRA_SYMBOLS = ("mu", "cup", "cap", "neg", "zero", "one")


class TheoryError(AfflogError):
    """Bad input to one of the theory builders."""


# ---------------------------------------------------------------------------
# probability algebras


@dataclass(frozen=True)
class PrASpec:
    weights: tuple[Fraction, ...]
    labels: tuple[str, ...] | None = None
    named: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        ws = tuple(as_rational(w) for w in self.weights)
        object.__setattr__(self, "weights", ws)
        if not ws or any(w <= 0 for w in ws) or sum(ws) != 1:
            raise TheoryError("atom weights must be positive and sum to 1")
        labels = tuple(self.labels) if self.labels is not None else tuple(f"a{i}" for i in range(len(ws)))
        if len(labels) != len(ws) or len(set(labels)) != len(labels):
            raise TheoryError("atom labels must be distinct, one per weight")
        object.__setattr__(self, "labels", labels)
        named = tuple(self.named)
        object.__setattr__(self, "named", named)
        for a in named:
            if a not in labels:
                raise TheoryError(f"named atom {a!r} is not an atom label")
            if not _IDENT.match(a) or a in KEYWORDS or a in PRA_SYMBOLS or a in ("d", "T", "Tinv"):
                raise TheoryError(f"atom {a!r} cannot be used as a constant name")


def pra_signature(named: Sequence[str] = (), extra_functions: Sequence[FunctionSymbol] = ()) -> Signature:
    return Signature(
        (PredicateSymbol("mu", 1),),
        (FunctionSymbol("cup", 2), FunctionSymbol("cap", 2), FunctionSymbol("neg", 1),
         FunctionSymbol("zero", 0), FunctionSymbol("one", 0),
         *extra_functions, *(FunctionSymbol(a, 0) for a in named)),
    )


def mask_label(mask: int, labels: Sequence[str]) -> str:
    return "{" + ",".join(lab for i, lab in enumerate(labels) if mask >> i & 1) + "}"


def _pra_tables(weights: Sequence[Fraction]):
    k = len(weights)
    N = 1 << k
    den = math.lcm(*(w.denominator for w in weights))
    wn = [w.numerator * (den // w.denominator) for w in weights]
    mu = [0] * N
    for m in range(1, N):
        low = (m & -m).bit_length() - 1
        mu[m] = mu[m & (m - 1)] + wn[low]
    metric = [mu[a ^ b] for a in range(N) for b in range(N)]
    cup = tuple(a | b for a in range(N) for b in range(N))
    cap = tuple(a & b for a in range(N) for b in range(N))
    neg = tuple((N - 1) ^ a for a in range(N))
    return N, den, mu, metric, cup, cap, neg


def build_pra(spec: PrASpec | Sequence, cap: int | None = None, *,
              extra_functions: Mapping[str, Sequence[int]] | None = None) -> Structure:
    """The finite probability algebra generated by atoms with the given weights.

    Elements are the unions of atoms, in bit-mask order (atom ``i`` is bit
    ``i``).  The metric is ``d(x, y) = mu(x symmetric-difference y)``.
    """
    if not isinstance(spec, PrASpec):
        spec = PrASpec(tuple(spec))
    k = len(spec.weights)
    limit = PRA_CAP if cap is None else cap
    if k > limit:
        raise_cap(k, limit)
    N, den, mu, metric, cup, cap_t, neg = _pra_tables(spec.weights)
    extra = dict(extra_functions or {})
    sig = pra_signature(spec.named, [FunctionSymbol(name, 1) for name in extra])
    funcs: dict[str, tuple[int, ...]] = {"cup": cup, "cap": cap_t, "neg": neg, "zero": (0,), "one": (N - 1,)}
    for name, table in extra.items():
        funcs[name] = tuple(table)
    for a in spec.named:
        funcs[a] = (1 << spec.labels.index(a),)
    carrier = tuple(mask_label(m, spec.labels) for m in range(N))
    return Structure(sig, carrier, Table(2, N, den, tuple(metric)), {"mu": Table(1, N, den, tuple(mu))}, funcs)


def raise_cap(k: int, limit: int):
    raise CapExceededError(f"{k} atoms exceed the cap of {limit} atoms (carrier 2^{k})")


def element_mask(M: Structure, element: int | str) -> int:
    """The bit mask of an element of an algebra built by :func:`build_pra`."""
    return M.index(element)


PRA_AXIOMS: tuple[tuple[str, str], ...] = (
    ("cup commutative", "sup x. sup y. d(cup(x, y), cup(y, x))"),
    ("cap commutative", "sup x. sup y. d(cap(x, y), cap(y, x))"),
    ("cup associative", "sup x. sup y. sup z. d(cup(cup(x, y), z), cup(x, cup(y, z)))"),
    ("cap associative", "sup x. sup y. sup z. d(cap(cap(x, y), z), cap(x, cap(y, z)))"),
    ("cup distributes", "sup x. sup y. sup z. d(cup(x, cap(y, z)), cap(cup(x, y), cup(x, z)))"),
    ("cap distributes", "sup x. sup y. sup z. d(cap(x, cup(y, z)), cup(cap(x, y), cap(x, z)))"),
    ("cup absorption", "sup x. sup y. d(cup(x, cap(x, y)), x)"),
    ("cap absorption", "sup x. sup y. d(cap(x, cup(x, y)), x)"),
    ("cup unit", "sup x. d(cup(x, zero), x)"),
    ("cap unit", "sup x. d(cap(x, one), x)"),
    ("complement cup", "sup x. d(cup(x, neg(x)), one)"),
    ("complement cap", "sup x. d(cap(x, neg(x)), zero)"),
    ("total measure", "1 - mu(one)"),
    ("modularity sup", "sup x. sup y. (mu(cup(x, y)) + mu(cap(x, y)) - mu(x) - mu(y))"),
    ("modularity inf", "sup x. sup y. (mu(x) + mu(y) - mu(cup(x, y)) - mu(cap(x, y)))"),
    ("metric upper", "sup x. sup y. (d(x, y) - mu(cup(cap(x, neg(y)), cap(y, neg(x)))))"),
    ("metric lower", "sup x. sup y. (mu(cup(cap(x, neg(y)), cap(y, neg(x)))) - d(x, y))"),
)


def axiom_values(M: Structure, axioms: Iterable[tuple[str, str]]) -> dict[str, Fraction]:
    """Value of each axiom sentence; an axiom holds when its value is 0."""
    return {name: evaluate(M, parse(text, M.signature)) for name, text in axioms}


def cell_formula(eps: Sequence[int], variables: Sequence[str]) -> Formula:
    """``mu(x_0^{e_0} cap ... cap x_{n-1}^{e_{n-1}})`` with ``x^0 = x``, ``x^1 = neg(x)``."""
    terms = [Var(v) if e == 0 else App("neg", (Var(v),)) for v, e in zip(variables, eps)]
    t = terms[0]
    for s in terms[1:]:
        t = App("cap", (t, s))
    return Atom("mu", (t,))


def cells(n: int) -> list[tuple[int, ...]]:
    return list(itertools.product((0, 1), repeat=n))


def cell_basis(n: int, variables: Sequence[str] | None = None) -> list[Formula]:
    variables = list(variables) if variables is not None else [f"x{i}" for i in range(n)]
    return [cell_formula(e, variables) for e in cells(n)]


def pra_cell_vector(M: Structure, tup: Sequence[int | str]) -> tuple[Fraction, ...]:
    """``(mu(cap_i a_i^{e_i}))_e`` for ``e`` in lexicographic order, read off the tables."""
    one = M.constant("one")
    cap_t, neg_t = M.functions["cap"], M.functions["neg"]
    n = M.size
    out = []
    idx = [M.index(a) for a in tup]
    for eps in cells(len(idx)):
        c = one
        for a, e in zip(idx, eps):
            c = cap_t[c * n + (a if e == 0 else neg_t[a])]
        out.append(M.predicates["mu"][(c,)])
    return tuple(out)


def unit_vector(k: int, i: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(int(j == i)) for j in range(k))


def pra_type_measure(M: Structure, tup: Sequence[int | str]) -> FinMeasure:
    """The measure on ``2^n`` attached to the type of ``tup``.

    Cell ``e`` is represented by the unit vector at its lexicographic
    position, so the barycenter is the cell vector of :func:`pra_cell_vector`.
    """
    if not {"mu", "cap", "neg"} <= set(M.signature.symbol_names()):
        raise TheoryError("not a probability algebra")
    vec = pra_cell_vector(M, tup)
    k = len(vec)
    return FinMeasure.from_weights([unit_vector(k, i) for i in range(k)], vec)


# ---------------------------------------------------------------------------
# classical structures


def build_classical(universe: int | Sequence[str],
                    relations: Mapping[str, tuple[int, object]] | None = None,
                    functions: Mapping[str, tuple[int, Sequence[int]]] | None = None) -> Structure:
    """A classical structure: 0/1 metric and {0,1}-valued predicates.

    ``relations`` maps a name to ``(arity, spec)`` where spec is a set of
    tuples of element indices or a flat 0/1 table; ``functions`` maps a
    name to ``(arity, flat table of element indices)``.
    """
    carrier = [str(i) for i in range(universe)] if isinstance(universe, int) else list(universe)
    n = len(carrier)
    relations = dict(relations or {})
    functions = dict(functions or {})
    preds, ptabs = [], {}
    for name, (arity, spec) in relations.items():
        if isinstance(spec, (set, frozenset)):
            members = {tuple(t) if isinstance(t, (tuple, list)) else (t,) for t in spec}
            table = [int(t in members) for t in itertools.product(range(n), repeat=arity)]
        else:
            table = [as_rational(v) for v in spec]
            if any(v not in (0, 1) for v in table):
                raise TheoryError(f"relation {name!r} is not boolean")
        preds.append(PredicateSymbol(name, arity))
        ptabs[name] = table
    fsym, ftabs = [], {}
    for name, (arity, table) in functions.items():
        fsym.append(FunctionSymbol(name, arity))
        ftabs[name] = list(table)
    sig = Signature(tuple(preds), tuple(fsym))
    return Structure.build(sig, carrier, lambda i, j: int(i != j), ptabs, ftabs)


def class_conditions(sig: Signature) -> list[tuple[str, Formula]]:
    """The conditions ``-inf P <= 0``, ``sup P - 1 <= 0``, ``sup min(P, 1-P) <= 0``."""
    out = []
    for p in (sig.metric, *sig.predicates):
        xs = [f"x{i}" for i in range(p.arity)]
        at = f"{p.name}({', '.join(xs)})"
        pre = "".join(f"sup {x}. " for x in xs)
        inf = "".join(f"inf {x}. " for x in xs)
        out.append((f"{p.name} nonnegative", parse(f"-1*({inf}{at})", sig)))
        out.append((f"{p.name} at most 1", parse(f"({pre}{at}) - 1", sig)))
        out.append((f"{p.name} two-valued", parse(f"{pre}min({at}, 1 - {at})", sig)))
    return out


def class_values(M: Structure) -> dict[str, Fraction]:
    return {name: evaluate(M, f) for name, f in class_conditions(M.signature)}


def class_defect(M: Structure) -> Fraction:
    """``max(0, values of the classicality conditions)``; 0 exactly when ``M`` is classical."""
    return max([Fraction(0), *class_values(M).values()])


def is_classical(M: Structure) -> bool:
    return class_defect(M) == 0


# ---------------------------------------------------------------------------
# measure-preserving ℤ-systems


@dataclass(frozen=True)
class PMPSystem:
    """A weight-preserving permutation of the atoms of a finite probability space."""

    base: FinProbSpace
    transform: tuple[int, ...]

    def __post_init__(self) -> None:
        t = tuple(int(v) for v in self.transform)
        object.__setattr__(self, "transform", t)
        n = len(self.base)
        if sorted(t) != list(range(n)):
            raise TheoryError("transform must be a permutation of the atoms")
        w = self.base.weights
        if any(w[i] != w[t[i]] for i in range(n)):
            raise TheoryError("transform must preserve atom weights")

    @classmethod
    def uniform(cls, transform: Sequence[int]) -> "PMPSystem":
        return cls(FinProbSpace.uniform(len(transform)), tuple(transform))

    @property
    def size(self) -> int:
        return len(self.transform)

    def inverse(self) -> tuple[int, ...]:
        inv = [0] * self.size
        for i, j in enumerate(self.transform):
            inv[j] = i
        return tuple(inv)

    def orbits(self) -> list[tuple[int, ...]]:
        """Orbits of the atom permutation, each starting at its least atom, ordered by that atom."""
        seen = [False] * self.size
        out = []
        for i in range(self.size):
            if seen[i]:
                continue
            orb = []
            j = i
            while not seen[j]:
                seen[j] = True
                orb.append(j)
                j = self.transform[j]
            out.append(tuple(orb))
        return out

    def image(self, mask: int, power: int = 1) -> int:
        """``T^power`` applied to a set of atoms given as a bit mask."""
        perm = self.transform if power >= 0 else self.inverse()
        for _ in range(abs(power)):
            out = 0
            for i in range(self.size):
                if mask >> i & 1:
                    out |= 1 << perm[i]
            mask = out
        return mask


def _mask_map(perm: Sequence[int], N: int) -> tuple[int, ...]:
    out = []
    for m in range(N):
        r = 0
        for i, j in enumerate(perm):
            if m >> i & 1:
                r |= 1 << j
        out.append(r)
    return tuple(out)


def build_pmp_z(system: PMPSystem, cap: int | None = None) -> Structure:
    """The measure algebra of the system with unary symbols ``T`` and ``Tinv``."""
    limit = PMP_CAP if cap is None else cap
    if system.size > limit:
        raise_cap(system.size, limit)
    N = 1 << system.size
    return build_pra(PrASpec(system.base.weights, system.base.labels), cap=limit,
                     extra_functions={"T": _mask_map(system.transform, N),
                                      "Tinv": _mask_map(system.inverse(), N)})


PMP_AXIOMS: tuple[tuple[str, str], ...] = PRA_AXIOMS + (
    ("T preserves cup", "sup x. sup y. d(T(cup(x, y)), cup(T(x), T(y)))"),
    ("T preserves cap", "sup x. sup y. d(T(cap(x, y)), cap(T(x), T(y)))"),
    ("T preserves neg", "sup x. d(T(neg(x)), neg(T(x)))"),
    ("T preserves mu upper", "sup x. (mu(T(x)) - mu(x))"),
    ("T preserves mu lower", "sup x. (mu(x) - mu(T(x)))"),
    ("Tinv preserves cup", "sup x. sup y. d(Tinv(cup(x, y)), cup(Tinv(x), Tinv(y)))"),
    ("Tinv preserves cap", "sup x. sup y. d(Tinv(cap(x, y)), cap(Tinv(x), Tinv(y)))"),
    ("Tinv preserves neg", "sup x. d(Tinv(neg(x)), neg(Tinv(x)))"),
    ("Tinv preserves mu upper", "sup x. (mu(Tinv(x)) - mu(x))"),
    ("Tinv preserves mu lower", "sup x. (mu(x) - mu(Tinv(x)))"),
    ("T Tinv identity", "sup x. d(T(Tinv(x)), x)"),
    ("Tinv T identity", "sup x. d(Tinv(T(x)), x)"),
)


def invariant_elements(system: PMPSystem) -> list[int]:
    """Bit masks fixed by the transform, ascending."""
    return [m for m in range(1 << system.size) if system.image(m) == m]


def is_ergodic(system: PMPSystem) -> bool:
    return len(system.orbits()) == 1


def canonical_form(system: PMPSystem) -> tuple[tuple[int, Fraction], ...]:
    """Sorted (orbit length, orbit mass) pairs: a complete isomorphism invariant."""
    w = system.base.weights
    return tuple(sorted((len(o), sum((w[i] for i in o), Fraction(0))) for o in system.orbits()))


def isomorphic(s1: PMPSystem, s2: PMPSystem) -> bool:
    return canonical_form(s1) == canonical_form(s2)


@dataclass(frozen=True)
class ErgodicComponent:
    weight: Fraction
    system: PMPSystem
    atoms: tuple[int, ...]


@dataclass(frozen=True)
class Decomposition:
    """Ergodic components with the recombination isomorphism.

    ``isomorphism[k]`` is the element of the system's algebra that the k-th
    element of the recombined structure maps to.
    """

    components: tuple[ErgodicComponent, ...]
    field: FiniteField
    isomorphism: tuple[int, ...]
    verified: bool

    @property
    def weights(self) -> tuple[Fraction, ...]:
        return tuple(c.weight for c in self.components)


def ergodic_decompose(system: PMPSystem, verify: bool = True) -> Decomposition:
    """Split a system into its orbits and check the recombination table-exactly."""
    w = system.base.weights
    comps = []
    for orb in system.orbits():
        mass = sum((w[i] for i in orb), Fraction(0))
        pos = {a: k for k, a in enumerate(orb)}
        perm = tuple(pos[system.transform[a]] for a in orb)
        base = FinProbSpace(tuple((system.base.labels[a], w[a] / mass) for a in orb))
        comps.append(ErgodicComponent(mass, PMPSystem(base, perm), orb))
    field = FiniteField(FinProbSpace.from_weights([c.weight for c in comps]),
                        tuple(build_pmp_z(c.system, cap=system.size) for c in comps))
    iso = []
    for sec in itertools.product(*(range(1 << len(c.atoms)) for c in comps)):
        m = 0
        for c, local in zip(comps, sec):
            for k, a in enumerate(c.atoms):
                if local >> k & 1:
                    m |= 1 << a
        iso.append(m)
    ok = True
    if verify:
        ok = verify_isomorphism(convex_combine(field, cap=1 << system.size),
                                build_pmp_z(system), iso)
    return Decomposition(tuple(comps), field, tuple(iso), ok)


def verify_isomorphism(A: Structure, B: Structure, iso: Sequence[int]) -> bool:
    """Whether ``iso`` (indices of A to indices of B) preserves every table exactly."""
    n = A.size
    if B.size != n or sorted(iso) != list(range(n)) or A.signature != B.signature:
        return False
    for name in ("d", *(p.name for p in A.signature.predicates)):
        ta, tb = A.table(name), B.table(name)
        for tup in itertools.product(range(n), repeat=ta.arity):
            if ta[tup] != tb[tuple(iso[i] for i in tup)]:
                return False
    for f in A.signature.functions:
        for tup in itertools.product(range(n), repeat=f.arity):
            if iso[A.apply(f.name, tup)] != B.apply(f.name, tuple(iso[i] for i in tup)):
                return False
    return True


def recombined_system(dec: Decomposition) -> PMPSystem:
    """Disjoint union of the components, weighted back to a single system."""
    atoms, perm, offset = [], [], 0
    for c in dec.components:
        for k, (lab, w) in enumerate(c.system.base.atoms):
            atoms.append((lab, w * c.weight))
        perm.extend(offset + j for j in c.system.transform)
        offset += c.system.size
    return PMPSystem(FinProbSpace(tuple(atoms)), tuple(perm))


# ---------------------------------------------------------------------------
# quantifier-free types of systems


def pmp_cells(n: int, h: int) -> list[tuple[tuple[int, ...], ...]]:
    """Cylinder cells: for each window offset ``-h..h``, a 0/1 vector over the tuple."""
    return [tuple(tuple(bits[g * n:(g + 1) * n]) for g in range(2 * h + 1))
            for bits in itertools.product((0, 1), repeat=n * (2 * h + 1))]


def pmp_qf_vector(system: PMPSystem, tup: Sequence[int], h: int) -> tuple[Fraction, ...]:
    """Masses ``mu(cap_{g, i} T^g a_i^{e(g, i)})`` over all cylinder cells, lexicographic."""
    full = (1 << system.size) - 1
    w = system.base.weights
    n = len(tup)
    shifted = [[system.image(a, g) for a in tup] for g in range(-h, h + 1)]
    out = []
    for bits in itertools.product((0, 1), repeat=n * (2 * h + 1)):
        m = full
        for g in range(2 * h + 1):
            for i in range(n):
                s = shifted[g][i]
                m &= s if bits[g * n + i] == 0 else full ^ s
        out.append(sum((w[k] for k in range(system.size) if m >> k & 1), Fraction(0)))
    return tuple(out)


def pmp_qf_type_measure(system: PMPSystem, tup: Sequence[int], h: int) -> FinMeasure:
    """Cylinder measure of ``tup`` (bit masks) on the window ``-h..h``, as unit vectors."""
    vec = pmp_qf_vector(system, tup, h)
    k = len(vec)
    return FinMeasure.from_weights([unit_vector(k, i) for i in range(k)], vec)


def shift_invariant(vec: Sequence[Fraction], n: int, h: int) -> bool:
    """The marginals on offsets ``-h..h-1`` and ``-h+1..h`` agree after shifting."""
    if h == 0:
        return True
    W = 2 * h + 1
    left: dict[tuple, Fraction] = {}
    right: dict[tuple, Fraction] = {}
    for bits, v in zip(itertools.product((0, 1), repeat=n * W), vec):
        lo = bits[: n * (W - 1)]
        hi = bits[n:]
        left[lo] = left.get(lo, Fraction(0)) + v
        right[hi] = right.get(hi, Fraction(0)) + v
    return left == right


def generates(system: PMPSystem, tup: Sequence[int]) -> bool:
    """Whether the translates of ``tup`` separate all atoms."""
    order = math.lcm(*(len(o) for o in system.orbits()))
    sig = {}
    for atom in range(system.size):
        key = []
        for o in range(order):
            for a in tup:
                key.append(system.image(a, o) >> atom & 1)
        sig[atom] = tuple(key)
    return len(set(sig.values())) == system.size


def all_uniform_systems(n: int) -> list[PMPSystem]:
    return [PMPSystem.uniform(p) for p in itertools.permutations(range(n))]
