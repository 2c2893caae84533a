from .base import Boundary, BoundaryQuery, distance_to_boundary
from .spheres import SpherePrimitive, SphereBoundary
from .polyline import PolylineBoundary
from .bezier import BezierChain
from .implicit import ImplicitMonopoles, implicit_step

__all__ = [
    "Boundary",
    "BoundaryQuery",
    "distance_to_boundary",
    "SpherePrimitive",
    "SphereBoundary",
    "PolylineBoundary",
    "BezierChain",
    "ImplicitMonopoles",
    "implicit_step",
]
