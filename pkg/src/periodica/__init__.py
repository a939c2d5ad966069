"""Numerical period matrices of plane curves and the homomorphisms between
their Jacobians."""

__version__ = "0.1.0"

from .curve import PlaneCurve, parse_curve
from .pipeline import RiemannSurface

__all__ = ["PlaneCurve", "RiemannSurface", "parse_curve", "__version__"]
