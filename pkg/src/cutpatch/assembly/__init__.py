"""Stabilized Nitsche assembly and solution of the surface problem."""

from .discretization import BoundarySpec, Discretization, FormParams
from .forms import (
    Solution,
    System,
    assemble_boundary,
    assemble_bulk,
    assemble_ghost_penalty,
    assemble_interface,
    assemble_mass,
    assemble_system,
    face_matrix,
    green_terms,
    solve,
    write_triplets,
)

__all__ = [
    "BoundarySpec", "Discretization", "FormParams", "Solution", "System",
    "assemble_boundary", "assemble_bulk", "assemble_ghost_penalty", "assemble_interface",
    "assemble_mass", "assemble_system", "face_matrix", "green_terms", "solve", "write_triplets",
]
