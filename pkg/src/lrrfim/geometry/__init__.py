"""Runs, triangles, contours and the Peierls estimates built on them."""

from .contours import (
    Contour,
    ContourReport,
    contour_distance,
    decompose_contours,
    independence_holds,
    min_separation_constant,
    separation_series,
    separation_violated,
    verify_contours,
)
from .entropy import EntropyResult, contour_weight, entropy_sum, enumerate_contours
from .peierls import PeierlsReport, erase_energy, mass_cost, peierls_check, zeta
from .runs import Run, RunDecomposition, runs
from .triangles import (
    Triangle,
    TriangleFamily,
    compatible,
    interface_sites,
    is_valid_family,
    spins_from_triangles,
    triangle_distance,
    triangles_from_spins,
)

__all__ = [
    "Contour", "ContourReport", "EntropyResult", "PeierlsReport", "Run", "RunDecomposition",
    "Triangle", "TriangleFamily", "compatible", "contour_distance", "contour_weight",
    "decompose_contours", "entropy_sum", "enumerate_contours", "erase_energy",
    "independence_holds", "interface_sites", "is_valid_family", "mass_cost",
    "min_separation_constant", "peierls_check", "runs", "separation_series",
    "separation_violated", "spins_from_triangles", "triangle_distance",
    "triangles_from_spins", "verify_contours", "zeta",
]
