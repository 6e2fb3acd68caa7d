"""Differentiable fields on R^d and the exterior-calculus operators built on jets."""

from . import jet
from .calculus import (
    canonical,
    central_difference,
    d_N,
    exterior_derivative,
    i_N_form,
    lie_bracket,
    lie_derivative_tensor11,
)
from .fields import (
    BivectorField,
    Chart,
    CovectorField,
    DimensionError,
    Field,
    FormField,
    Point,
    ScalarField,
    Tensor11Field,
    VectorField,
)
from .jet import Jet

__all__ = [
    "jet", "Jet", "Point", "Chart", "Field", "ScalarField", "VectorField", "CovectorField",
    "FormField", "Tensor11Field", "BivectorField", "DimensionError", "canonical",
    "central_difference", "lie_bracket", "exterior_derivative", "lie_derivative_tensor11",
    "i_N_form", "d_N",
]
