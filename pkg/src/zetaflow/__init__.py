"""Spectral geometry on closed triangulated surfaces.

Functional determinants of Laplace-type operators via zeta regularization,
conformal-anomaly (Polyakov) checks, entropy functionals and their
monotonicity along conformal flows, and exact finite-dimensional Gaussian
counterparts.
"""

from .errors import NumericalError, ParseError, ValidationError, ZetaflowError
from .mesh import (
    TriMesh,
    Topology,
    generate_flat_torus,
    generate_icosphere,
    load_off,
    topology,
    write_off,
)

__all__ = [
    "NumericalError",
    "ParseError",
    "ValidationError",
    "ZetaflowError",
    "TriMesh",
    "Topology",
    "generate_flat_torus",
    "generate_icosphere",
    "load_off",
    "topology",
    "write_off",
]

__version__ = "0.1.0"
