"""Exact derivation and automorphism computations for the Lie algebras L(λ, μ)."""

from gradedlie.algebra import Basis, Case, Element, Params, Window, bracket, validate_params
from gradedlie.exactlin import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "Basis", "Case", "Element", "Params", "Window", "bracket", "validate_params", "__version__"]
