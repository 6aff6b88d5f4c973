"""Set oracles and generators."""

from .convex import EllipsoidBoundary, PolygonBoundary, convex_boundary
from .hesitating import (FatCantor, HesitatingFunction, Modulus, SmoothModulus, check_gap_registry, fat_cantor,
                         hesitating_function, primitive_stack, regularized_distance, smooth_modulus)
from .oracles import (DilatedSet, EmptySampleError, GraphSet, MappedFunction, PlaneWithHoles, PointCloud, SetOracle,
                      ShearImage,
                      Translated, UnionSet, affine_plane, dilate, plane_with_holes, rescaled, translate)

__all__ = [
    "DilatedSet", "EllipsoidBoundary", "EmptySampleError", "FatCantor", "GraphSet", "HesitatingFunction", "Modulus",
    "PlaneWithHoles", "PointCloud", "PolygonBoundary", "SetOracle", "ShearImage", "SmoothModulus", "Translated",
    "MappedFunction", "UnionSet", "affine_plane", "check_gap_registry", "convex_boundary", "dilate", "fat_cantor",
    "hesitating_function", "plane_with_holes", "primitive_stack", "regularized_distance", "rescaled",
    "smooth_modulus", "translate",
]
