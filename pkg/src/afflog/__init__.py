"""Exact affine continuous logic over finite metric structures."""

from .core import (AfflogError, CapExceededError, FinProbSpace, FormatError, FunctionSymbol,
                   PredicateSymbol, Signature, Structure, StructureError, Table, load_structure,
                   store_structure, validate_structure)
from .evaluation import compile_formula, eval_all, evaluate
from .formula import FormulaClass, classify, parse, prenex, to_text

__version__ = "0.1.0"

__all__ = [
    "AfflogError", "CapExceededError", "FinProbSpace", "FormatError", "FormulaClass",
    "FunctionSymbol", "PredicateSymbol", "Signature", "Structure", "StructureError", "Table",
    "classify", "compile_formula", "eval_all", "evaluate", "load_structure", "parse", "prenex",
    "store_structure", "to_text", "validate_structure",
]
