"""Convexity-preserving interpolatory polyline subdivision with conic precision."""

from .config import RefinementConfig
from .engine import DiagnosticsReport, RefinementState, refine_adaptive_once, refine_once, subdivide
from .polyline import Polyline
from .projective import HLine, HPoint

__version__ = "0.1.0"

__all__ = [
    "DiagnosticsReport",
    "HLine",
    "HPoint",
    "Polyline",
    "RefinementConfig",
    "RefinementState",
    "refine_adaptive_once",
    "refine_once",
    "subdivide",
    "__version__",
]
