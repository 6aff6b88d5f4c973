"""Pointwise differentiability of sets: oracles, jets and finite-scale verdicts."""

from .grassmann import Plane, grass_distance, transversal
from .jets import JetPolynomial, OrderSpec, empirical_gamma, poly_seminorm

__version__ = "0.1.0"

__all__ = ["JetPolynomial", "OrderSpec", "Plane", "empirical_gamma", "grass_distance", "poly_seminorm",
           "transversal"]
