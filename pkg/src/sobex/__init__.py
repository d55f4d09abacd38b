"""Best Sobolev constants in the supercritical regime p > N on planar grids.

Closed-form constants, distance and ridge diagnostics, p-Laplace solvers for
lambda_q and Lambda_p, and the punctured infinity-Laplace problem.
"""

__version__ = "0.1.0"

from .errors import (BadExponent, BadNode, DomainError, InvalidParams, NoConvergence,
                     ResolutionTooCoarse, SobexError, ValidationError)
from .geometry import DomainSpec, Grid, ScalarField, make_domain, rasterize

__all__ = [
    "BadExponent", "BadNode", "DomainError", "DomainSpec", "Grid", "InvalidParams",
    "NoConvergence", "ResolutionTooCoarse", "ScalarField", "SobexError",
    "ValidationError", "make_domain", "rasterize", "__version__",
]
