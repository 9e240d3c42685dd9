"""Reference elements, DOF maps, finite element functions, bubbles, Clement."""

from .bubbles import bubble_edge, bubble_element, extend_from_edge
from .clement import clement_basis_function, clement_interpolate, clement_space
from .dofmap import DofMap, FeSpace
from .families import FAMILY_TAGS, ReferenceElement, canonical_tag, reference_basis
from .functions import FeFunction, interpolate

__all__ = [
    "FAMILY_TAGS", "DofMap", "FeFunction", "FeSpace", "ReferenceElement",
    "bubble_edge", "bubble_element", "canonical_tag", "clement_basis_function",
    "clement_interpolate", "clement_space", "extend_from_edge", "interpolate",
    "reference_basis",
]
