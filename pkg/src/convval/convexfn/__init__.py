"""Super-coercive convex functions and the operations on them."""

from .base import ConvexFunction, from_dict, radial_mass, radial_values
from .composite import (Cylinder, Embedded, EpiSumComposite, NumericConjugate,
                        NumericProjection, PointwiseMax, PointwiseMin, PointwiseSum,
                        PolyhedralProjection, Transformed, add_functions)
from .grid import GridSampled
from .ops import (Rejected, epi_mult, epi_sum, lattice_ops, legendre,
                  midpoint_convexity_test, project, subdifferential_pl)
from .polyhedral import (ConeBall, MaxAffine, MaxAffineConjugate, PiecewiseLinearSum,
                         RadialHinge, SupportPlusIndicator)
from .polytope import Polytope, Subspace
from .smooth import (ConjugateProfile, PowerProfile, Quadratic, RampQuadratic,
                     SmoothRadial)


def evaluate(u, x):
    """``u(x)``, ``+inf`` outside the effective domain."""
    return u.evaluate(x)


def gradient_hessian(u, x):
    """Exact gradient and Hessian of ``u`` at an interior point ``x``."""
    return u.gradient_hessian(x)


__all__ = [
    "ConeBall", "ConjugateProfile", "ConvexFunction", "Cylinder", "Embedded",
    "EpiSumComposite", "GridSampled", "MaxAffine", "MaxAffineConjugate",
    "NumericConjugate", "NumericProjection", "PiecewiseLinearSum", "PointwiseMax",
    "PointwiseMin", "PointwiseSum", "PolyhedralProjection", "Polytope", "PowerProfile",
    "Quadratic", "RadialHinge", "RampQuadratic", "Rejected", "SmoothRadial", "Subspace",
    "SupportPlusIndicator", "Transformed", "add_functions", "epi_mult", "epi_sum",
    "evaluate", "from_dict", "gradient_hessian", "lattice_ops", "legendre",
    "midpoint_convexity_test", "project", "radial_mass", "radial_values",
    "subdifferential_pl",
]
