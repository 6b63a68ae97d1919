"""Command-line front end.

Every subcommand reads JSON documents given with ``-i`` and writes one JSON
document (sorted keys, rationals as ``"p/q"``) to stdout or ``-o``.  Exit
status is 0 on success, 1 on a domain error and 2 on a usage error; both
error kinds produce an ``{"error": {...}}`` document.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Sequence

from . import io
from .convex import (PointCloud, barycenter, choquet_leq, concave_envelope, is_boundary,
                     is_simplex, maximal_rep, vertex_indices)
from .core import (AfflogError, FormatError, Structure, dumps_json, format_rational,
                   space_from_doc, structure_from_doc, structure_to_doc, validate_structure)
from .evaluation import evaluate
from .formula import classify, is_affine, is_quantifier_free, parse, prenex, to_text
from .modelalg import convex_combine, cr_defect, direct_multiple, los_check
from .theories import (build_pmp_z, build_pra, canonical_form, ergodic_decompose, is_ergodic,
                       mask_label, pmp_qf_type_measure, pmp_qf_vector, shift_invariant)
from .typespace import affine_approx_search, morleyize, realized_types, type_distance_upper


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def jsonable(obj: Any) -> Any:
    """Fractions to ``"p/q"`` strings, tuples to lists, recursively; ints stay numbers."""
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def render_pretty(doc: Any, prefix: str = "") -> list[str]:
    """Flatten a document into ``path  value`` lines."""
    if isinstance(doc, dict):
        out = []
        for k in sorted(doc):
            out.extend(render_pretty(doc[k], f"{prefix}.{k}" if prefix else k))
        return out
    if isinstance(doc, list):
        if all(not isinstance(v, (dict, list)) for v in doc):
            return [f"{prefix}  [{', '.join(str(v) for v in doc)}]"]
        out = []
        for i, v in enumerate(doc):
            out.extend(render_pretty(v, f"{prefix}[{i}]"))
        return out
    if isinstance(doc, bool):
        doc = "true" if doc else "false"
    return [f"{prefix}  {doc}"]


# ---------------------------------------------------------------------------
# input helpers


def _inputs(args, count: int | None = None, at_least: int = 1) -> list[Path]:
    paths = [Path(p) for p in (args.input or [])]
    if count is not None and len(paths) != count:
        raise UsageError(f"{args.command} needs exactly {count} input file(s), got {len(paths)}")
    if len(paths) < at_least:
        raise UsageError(f"{args.command} needs at least {at_least} input file(s)")
    return paths


def _structure(path: Path) -> Structure:
    return structure_from_doc(io.read_doc(path))


def _formula(args, sig=None):
    if not args.formula:
        raise UsageError(f"{args.command} needs --formula")
    if len(args.formula) != 1:
        raise UsageError(f"{args.command} takes a single --formula")
    return parse(args.formula[0], sig)


def _pairs(items: Sequence[str] | None, what: str) -> dict[str, str]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"{what} must have the form name=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _labels(text: str | None, what: str) -> list[str]:
    if text is None:
        raise UsageError(f"missing {what}")
    return [s.strip() for s in text.split(",") if s.strip()]


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> dict:
    (path,) = _inputs(args, 1)
    S = structure_from_doc(io.read_doc(path), validate=False)
    violations = validate_structure(S)
    return {"valid": not violations, "violations": violations, "size": S.size}


def cmd_eval(args) -> dict:
    (path,) = _inputs(args, 1)
    S = _structure(path)
    f = _formula(args, S.signature)
    assignment = _pairs(args.assign, "--assign")
    return {"formula": to_text(f), "value": evaluate(S, f, assignment)}


def cmd_combine(args) -> dict:
    (path,) = _inputs(args, 1)
    field = io.field_from_doc(io.read_doc(path), base=path.parent)
    return structure_to_doc(convex_combine(field, cap=args.cap))


def cmd_l1(args) -> dict:
    sp, st = _inputs(args, 2)
    return structure_to_doc(direct_multiple(space_from_doc(io.read_doc(sp)), _structure(st),
                                            cap=args.cap))


def cmd_los_check(args) -> dict:
    (path,) = _inputs(args, 1)
    field = io.field_from_doc(io.read_doc(path), base=path.parent)
    f = _formula(args, field.signature)
    sections = {v: _labels(s, f"section for {v}") for v, s in _pairs(args.section, "--section").items()}
    rep = los_check(field, f, sections)
    return {"formula": to_text(f), "lhs": rep.lhs, "rhs": rep.rhs, "equal": rep.equal,
            "class": str(rep.formula_class), "direction": rep.direction,
            "consistent": rep.consistent}


def cmd_types(args) -> dict:
    st, bp = _inputs(args, 2)
    S = _structure(st)
    variables = _labels(args.variables, "--variables") if args.variables else None
    if variables is None and args.arity is not None:
        variables = [f"x{i}" for i in range(args.arity)]
    basis = io.basis_from_doc(io.read_doc(bp), S.signature, variables)
    return io.cloud_to_doc(realized_types(S, basis, cap=args.cap))


def _read_cloud(path: Path) -> tuple[PointCloud, dict]:
    doc = io.read_doc(path)
    return io.cloud_from_doc(doc), doc


def cmd_extreme(args) -> dict:
    (path,) = _inputs(args, 1)
    C, doc = _read_cloud(path)
    idx = vertex_indices(C)
    out = io.cloud_to_doc(PointCloud(tuple(C.points[i] for i in idx)))
    if "provenance" in doc:
        out["provenance"] = [doc["provenance"][i] for i in idx]
    return out


def cmd_simplex_check(args) -> dict:
    (path,) = _inputs(args, 1)
    C, _ = _read_cloud(path)
    rep = is_simplex(C)
    out: dict[str, Any] = {"is_simplex": rep.is_simplex, "vertices": len(rep.vertices),
                           "vertex_points": [list(p) for p in rep.vertices.points],
                           "verified": rep.verify()}
    if not rep.is_simplex:
        r1, r2 = rep.representations
        out["witness"] = {"point": list(rep.witness_point),
                          "representations": [io.measure_to_doc(r1), io.measure_to_doc(r2)]}
    return out


def cmd_envelope(args) -> dict:
    (path,) = _inputs(args, 1)
    C, _ = _read_cloud(path)
    if args.values is None or args.point is None:
        raise UsageError("envelope needs --values and --point")
    vals = io.parse_point(args.values)
    p = io.parse_point(args.point)
    return {"point": list(p), "value": concave_envelope(C, vals, p)}


def cmd_choquet_leq(args) -> dict:
    a, b = _inputs(args, 2)
    mu = io.measure_from_doc(io.read_doc(a))
    nu = io.measure_from_doc(io.read_doc(b))
    res = choquet_leq(mu, nu)
    out: dict[str, Any] = {"holds": res.holds, "verified": res.verify(mu, nu)}
    if res.holds:
        out["dilation"] = [list(r) for r in res.dilation]
    else:
        out["witness"] = {"pieces": [{"w": list(h.w), "c": h.c} for h in res.witness.pieces]}
    return out


def cmd_maximal_rep(args) -> dict:
    (path,) = _inputs(args, 1)
    C, _ = _read_cloud(path)
    if args.point is None:
        raise UsageError("maximal-rep needs --point")
    mu = maximal_rep(io.parse_point(args.point), C)
    out = io.measure_to_doc(mu)
    out["barycenter"] = list(barycenter(mu))
    out["boundary"] = is_boundary(mu, C)
    return out


def cmd_decompose(args) -> dict:
    (path,) = _inputs(args, 1)
    system = io.pmp_from_doc(io.read_doc(path))
    dec = ergodic_decompose(system)
    labels = system.base.labels
    whole = build_pmp_z(system)
    return {
        "components": [{"weight": c.weight, "atoms": [labels[a] for a in c.atoms],
                        "system": io.pmp_to_doc(c.system), "ergodic": is_ergodic(c.system)}
                       for c in dec.components],
        "ergodic": is_ergodic(system),
        "canonical_form": [[length, mass] for length, mass in canonical_form(system)],
        "isomorphism": {"verified": dec.verified,
                        "map": [whole.carrier[m] for m in dec.isomorphism]},
    }


def cmd_morleyize(args) -> dict:
    (path,) = _inputs(args, 1)
    S = _structure(path)
    if not args.formula:
        raise UsageError("morleyize needs at least one --formula")
    fs = [parse(t, S.signature) for t in args.formula]
    names = args.name or None
    _, M = morleyize(S, fs, names, cap=args.cap)
    return structure_to_doc(M)


def cmd_approx(args) -> dict:
    paths = _inputs(args, at_least=2)
    models = [_structure(p) for p in paths[1:]]
    sig = models[0].signature
    target = _formula(args, sig)
    variables = _labels(args.variables, "--variables") if args.variables else None
    basis = io.basis_from_doc(io.read_doc(paths[0]), sig, variables)
    res = affine_approx_search(target, models, basis, cap=args.cap)
    return {"target": to_text(target), "basis": basis.texts(), "constant": res.constant,
            "coefficients": list(res.coefficients), "error": res.error}


def cmd_classify(args) -> dict:
    f = _formula(args)
    return {"formula": to_text(f), "class": str(classify(f)), "affine": is_affine(f),
            "quantifier_free": is_quantifier_free(f), "prenex": to_text(prenex(f))}


def cmd_cr_defect(args) -> dict:
    st, ip = _inputs(args, 2)
    S = _structure(st)
    inst = io.cr_instance_from_doc(io.read_doc(ip), S.signature)
    return {"instance": io.cr_instance_to_doc(inst), "value": cr_defect(S, inst)}


def cmd_type_distance(args) -> dict:
    (path,) = _inputs(args, 1)
    S = _structure(path)
    a = _labels(args.a, "--a")
    b = _labels(args.b, "--b")
    bound = type_distance_upper(S, a, b, budget=args.budget, cap=args.cap)
    return {"upper": bound.upper, "lower": bound.lower, "witness_k": bound.witness_k,
            "witness": [list(bound.witness[0]), list(bound.witness[1])]}


def cmd_pmp_type(args) -> dict:
    (path,) = _inputs(args, 1)
    system = io.pmp_from_doc(io.read_doc(path))
    labels = list(system.base.labels)
    if not args.set:
        raise UsageError("pmp-type needs at least one --set")
    masks = []
    for text in args.set:
        m = 0
        for lab in _labels(text, "--set"):
            if lab not in labels:
                raise FormatError(f"unknown atom {lab!r}")
            m |= 1 << labels.index(lab)
        masks.append(m)
    h = args.horizon
    vec = pmp_qf_vector(system, masks, h)
    out = io.measure_to_doc(pmp_qf_type_measure(system, masks, h))
    out["cells"] = vec
    out["horizon"] = h
    out["elements"] = [mask_label(m, labels) for m in masks]
    out["shift_invariant"] = shift_invariant(vec, len(masks), h)
    return out


def cmd_build_pra(args) -> dict:
    (path,) = _inputs(args, 1)
    return structure_to_doc(build_pra(io.pra_spec_from_doc(io.read_doc(path)), cap=args.cap))


def cmd_build_pmp(args) -> dict:
    (path,) = _inputs(args, 1)
    return structure_to_doc(build_pmp_z(io.pmp_from_doc(io.read_doc(path)), cap=args.cap))


COMMANDS: dict[str, tuple[Callable, str]] = {
    "validate": (cmd_validate, "check metric, bound and Lipschitz conditions of a structure"),
    "eval": (cmd_eval, "evaluate a formula in a structure"),
    "combine": (cmd_combine, "convex combination of a field of structures"),
    "l1": (cmd_l1, "direct multiple of a structure over a probability space"),
    "los-check": (cmd_los_check, "compare a formula in a combination with the integral"),
    "types": (cmd_types, "realized type cloud over a formula basis"),
    "extreme": (cmd_extreme, "vertices of a cloud"),
    "simplex-check": (cmd_simplex_check, "decide whether the hull of a cloud is a simplex"),
    "envelope": (cmd_envelope, "concave envelope of values on a cloud at a point"),
    "choquet-leq": (cmd_choquet_leq, "decide the Choquet order between two measures"),
    "maximal-rep": (cmd_maximal_rep, "boundary representation of a point"),
    "decompose": (cmd_decompose, "ergodic decomposition of a measure-preserving system"),
    "morleyize": (cmd_morleyize, "name formulas by new predicates"),
    "approx": (cmd_approx, "best uniform affine approximation over a basis"),
    "classify": (cmd_classify, "syntactic class of a formula"),
    "cr-defect": (cmd_cr_defect, "value of a convex-realization instance"),
    "type-distance": (cmd_type_distance, "bounds on the distance between two types"),
    "pmp-type": (cmd_pmp_type, "cylinder measure of a tuple in a measure-preserving system"),
    "build-pra": (cmd_build_pra, "probability algebra from atom weights"),
    "build-pmp": (cmd_build_pmp, "measure algebra of a system with T and Tinv"),
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("-i", "--input", action="append", help="input document (repeatable)")
    common.add_argument("-o", "--output", help="write the result here instead of stdout")
    common.add_argument("--pretty", action="store_true", help="human-readable table output")
    common.add_argument("--cap", type=int, help="carrier size guardrail (default AFFLOG_CAP or 20000)")
    parser = _Parser(prog="afflog", description="Exact affine logic on finite structures.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name in ("eval", "los-check", "morleyize", "approx", "classify"):
            p.add_argument("--formula", action="append", help="formula text")
        if name == "eval":
            p.add_argument("--assign", action="append", help="variable=element")
        if name == "los-check":
            p.add_argument("--section", action="append", help="variable=e1,e2,... one per factor")
        if name in ("types", "approx"):
            p.add_argument("--variables", help="comma-separated variable order")
        if name == "types":
            p.add_argument("--arity", type=int, help="use variables x0..x(n-1)")
        if name in ("envelope", "maximal-rep"):
            p.add_argument("--point", help="comma-separated coordinates")
        if name == "envelope":
            p.add_argument("--values", help="comma-separated values, one per cloud point")
        if name == "morleyize":
            p.add_argument("--name", action="append", help="predicate name per formula")
        if name == "type-distance":
            p.add_argument("--a", help="first tuple, comma-separated elements")
            p.add_argument("--b", help="second tuple, comma-separated elements")
            p.add_argument("--budget", type=int, default=3, help="largest k for L1(uniform k, M)")
        if name == "pmp-type":
            p.add_argument("--set", action="append", help="tuple element as comma-separated atoms")
            p.add_argument("--horizon", type=int, default=0, help="window -H..H")
    return parser


def _error_doc(kind: str, message: str) -> str:
    return dumps_json({"error": {"kind": kind, "message": message}})


def run(argv: Sequence[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        fn, _ = COMMANDS[args.command]
        doc = jsonable(fn(args))
    except UsageError as exc:
        stdout.write(_error_doc("usage", str(exc)))
        return 2
    except AfflogError as exc:
        stdout.write(_error_doc(type(exc).__name__, str(exc)))
        return 1
    except (ValueError, ZeroDivisionError, RecursionError) as exc:
        stdout.write(_error_doc(type(exc).__name__, str(exc)))
        return 1
    text = "\n".join(render_pretty(doc)) + "\n" if args.pretty else dumps_json(doc)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())
