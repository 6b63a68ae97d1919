"""Exact convex geometry: linear programming, hulls, envelopes, Choquet order."""

from .geometry import (
    AffineFunctional, ChoquetResult, ConvexWitness, FinMeasure, GeometryError, MaxReport,
    Membership, Point, PointCloud, SimplexReport, affine_max_at_vertices,
    affinely_independent, barycenter, choquet_leq, combination, concave_envelope,
    hull_membership, in_hull, is_boundary, is_simplex, maximal_rep, null_vector, point,
    rank, separate, vertex_indices, vertices,
)
from .lp import LPError, LPProblem, LPResult, LPStatus, check_certificate, lp_solve, make_problem

__all__ = [
    "AffineFunctional", "ChoquetResult", "ConvexWitness", "FinMeasure", "GeometryError",
    "MaxReport", "Membership", "Point", "PointCloud", "SimplexReport",
    "affine_max_at_vertices", "affinely_independent", "barycenter", "choquet_leq",
    "combination", "concave_envelope", "hull_membership", "in_hull", "is_boundary",
    "is_simplex", "maximal_rep", "null_vector", "point", "rank", "separate",
    "vertex_indices", "vertices",
    "LPError", "LPProblem", "LPResult", "LPStatus", "check_certificate", "lp_solve", "make_problem",
]
