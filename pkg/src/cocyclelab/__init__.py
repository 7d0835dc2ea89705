"""Numerical experiments with symplectic cocycles over partially hyperbolic flows."""
from .base import CAT_MAP, RoofFunction, SuspensionModel, SuspensionPoint, TorusAutomorphism
from .cocycle import CircleCocycle, CocycleField, restrict_to_center_leaf
from .symplectic import SymplecticMatrix, Subspace, symplectify
from .trig import TrigPolynomial

__all__ = [
    "CAT_MAP",
    "CircleCocycle",
    "CocycleField",
    "RoofFunction",
    "Subspace",
    "SuspensionModel",
    "SuspensionPoint",
    "SymplecticMatrix",
    "TorusAutomorphism",
    "TrigPolynomial",
    "restrict_to_center_leaf",
    "symplectify",
]
