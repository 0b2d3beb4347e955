"""Deposition-to-prediction toolchain for friction-stir-deposited walls.

Voxel thermal/mechanical simulation with element activation, parametric
dataset sweeps, and GA-optimized regression trees/forests predicting peak
von Mises stress and logarithmic strain.
"""

__version__ = "0.1.0"

from .materials import ALLOY_NAMES, AlloyProperties, builtin_alloy, with_overrides

__all__ = [
    "ALLOY_NAMES",
    "AlloyProperties",
    "builtin_alloy",
    "with_overrides",
    "__version__",
]
