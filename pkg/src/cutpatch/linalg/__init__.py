"""Sparse symmetric storage, solvers and condition estimates."""

from .sparse import SparseSym, condition_estimate, solve_cg, solve_direct, solve_saddle

__all__ = ["SparseSym", "condition_estimate", "solve_cg", "solve_direct", "solve_saddle"]
