"""JSON documents for fields, clouds, measures, systems and bases.

Structures and probability spaces are handled in :mod:`afflog.core`; this
module adds the remaining file formats.  Every writer emits reduced
``"p/q"`` strings so that output is canonical.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Sequence

from .convex.geometry import FinMeasure, PointCloud
from .core import (FinProbSpace, FormatError, format_rational, loads_json,
                   parse_rational, space_from_doc, space_to_doc, structure_from_doc,
                   structure_to_doc)
from .formula import Formula, parse, to_text
from .modelalg import CRInstance, FiniteField
from .theories import PMPSystem, PrASpec
from .typespace import FormulaBasis, TypeCloud


def read_doc(path: str | Path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None
    return loads_json(text)


def _rats(values: Any, what: str) -> tuple[Fraction, ...]:
    if not isinstance(values, list):
        raise FormatError(f"{what} must be an array")
    return tuple(parse_rational(v) for v in values)


# ---------------------------------------------------------------------------
# fields


def field_to_doc(field: FiniteField) -> dict:
    return {"space": space_to_doc(field.space),
            "factors": [structure_to_doc(M) for M in field.factors]}


def field_from_doc(doc: Mapping, base: str | Path | None = None) -> FiniteField:
    """A field document; string factors are paths relative to ``base``."""
    if not isinstance(doc, Mapping) or "space" not in doc or "factors" not in doc:
        raise FormatError("field: expected keys 'space' and 'factors'")
    space = space_from_doc(doc["space"])
    factors = []
    for ref in doc["factors"]:
        if isinstance(ref, str):
            p = Path(ref)
            if base is not None and not p.is_absolute():
                p = Path(base) / p
            factors.append(structure_from_doc(read_doc(p)))
        else:
            factors.append(structure_from_doc(ref))
    return FiniteField(space, tuple(factors))


# ---------------------------------------------------------------------------
# clouds and measures


def cloud_to_doc(C: PointCloud | TypeCloud) -> dict:
    if isinstance(C, TypeCloud):
        doc = cloud_to_doc(C.cloud)
        doc["provenance"] = [[list(t) for t in prov] for prov in C.provenance]
        doc["basis"] = C.basis.texts()
        doc["variables"] = list(C.basis.variables)
        return doc
    return {"dim": C.dim, "points": [[format_rational(x) for x in p] for p in C.points]}


def cloud_from_doc(doc: Mapping) -> PointCloud:
    if not isinstance(doc, Mapping) or "points" not in doc:
        raise FormatError("cloud: expected key 'points'")
    pts = [_rats(p, "cloud point") for p in doc["points"]]
    if not pts:
        raise FormatError("cloud: no points")
    dim = doc.get("dim", len(pts[0]))
    if any(len(p) != dim for p in pts):
        raise FormatError(f"cloud: every point must have dimension {dim}")
    return PointCloud.dedup(pts)


def measure_to_doc(mu: FinMeasure) -> dict:
    return {"support": [{"point": [format_rational(x) for x in p], "weight": format_rational(w)}
                        for p, w in mu.support]}


def measure_from_doc(doc: Mapping) -> FinMeasure:
    if not isinstance(doc, Mapping) or "support" not in doc:
        raise FormatError("measure: expected key 'support'")
    pts, ws = [], []
    for entry in doc["support"]:
        if not isinstance(entry, Mapping) or "point" not in entry or "weight" not in entry:
            raise FormatError("measure: support entries need 'point' and 'weight'")
        pts.append(_rats(entry["point"], "measure point"))
        ws.append(parse_rational(entry["weight"]))
    return FinMeasure.from_weights(pts, ws)


def parse_point(text: str) -> tuple[Fraction, ...]:
    """``"1/2,0,1"`` as a tuple of rationals."""
    parts = [s.strip() for s in text.split(",") if s.strip()]
    if not parts:
        raise FormatError("empty point")
    return tuple(parse_rational(s) for s in parts)


# ---------------------------------------------------------------------------
# theories


def pmp_from_doc(doc: Mapping) -> PMPSystem:
    """``atoms`` holds labels (uniform weights) or ``{"label", "weight"}`` objects."""
    if not isinstance(doc, Mapping) or "atoms" not in doc or "transform" not in doc:
        raise FormatError("PMP system: expected keys 'atoms' and 'transform'")
    atoms = doc["atoms"]
    if not isinstance(atoms, list) or not atoms:
        raise FormatError("PMP system: 'atoms' must be a nonempty array")
    if all(isinstance(a, str) for a in atoms):
        base = FinProbSpace.from_weights([Fraction(1, len(atoms))] * len(atoms), atoms)
    else:
        base = space_from_doc({"atoms": atoms})
    transform = doc["transform"]
    if not isinstance(transform, list) or not all(isinstance(t, int) for t in transform):
        raise FormatError("PMP system: 'transform' must be an array of atom indices")
    return PMPSystem(base, tuple(transform))


def pmp_to_doc(system: PMPSystem) -> dict:
    return {"atoms": space_to_doc(system.base)["atoms"], "transform": list(system.transform)}


def pra_spec_from_doc(doc: Mapping) -> PrASpec:
    if not isinstance(doc, Mapping) or "weights" not in doc:
        raise FormatError("PrA spec: expected key 'weights'")
    return PrASpec(_rats(doc["weights"], "weights"), named=tuple(doc.get("named", ())))


# ---------------------------------------------------------------------------
# formulas


def basis_from_doc(doc: Any, signature=None, variables: Sequence[str] | None = None) -> FormulaBasis:
    """A basis file: an array of formula strings, or ``{"formulas", "variables"}``."""
    if isinstance(doc, Mapping):
        variables = doc.get("variables", variables)
        doc = doc.get("formulas")
    if not isinstance(doc, list) or not all(isinstance(s, str) for s in doc):
        raise FormatError("basis: expected an array of formula strings")
    return FormulaBasis.of([parse(s, signature) for s in doc], variables)


def basis_to_doc(basis: FormulaBasis) -> list[str]:
    return basis.texts()


def cr_instance_from_doc(doc: Mapping, signature=None) -> CRInstance:
    """``{"formulas": [...], "weights": [...], "xvars": [...]}``."""
    if not isinstance(doc, Mapping) or "formulas" not in doc or "weights" not in doc:
        raise FormatError("CR instance: expected keys 'formulas' and 'weights'")
    fs: list[Formula] = [parse(s, signature) for s in doc["formulas"]]
    return CRInstance(tuple(fs), _rats(doc["weights"], "weights"), tuple(doc.get("xvars", ["x"])))


def cr_instance_to_doc(inst: CRInstance) -> dict:
    return {"formulas": [to_text(f) for f in inst.formulas],
            "weights": [format_rational(w) for w in inst.weights],
            "xvars": list(inst.xvars)}
