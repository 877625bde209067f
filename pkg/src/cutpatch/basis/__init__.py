"""Q_p Lagrange shape functions and degree-of-freedom numbering."""

from .dofs import DofMap, build_dofmap
from .lagrange import ShapeSet, eval_gradients, eval_shape

__all__ = ["DofMap", "ShapeSet", "build_dofmap", "eval_gradients", "eval_shape"]
