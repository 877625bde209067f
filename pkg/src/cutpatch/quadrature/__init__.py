"""Gauss rules, cut-cell rules and curve partitions."""

from .cut import CutRule, cut_cell_rule, prune_zero_weights, rule_sizes, tensor_rule, write_rule_csv
from .gauss import Gauss1D, gauss1d, points_for_degree
from .interface import InterfaceSegment, boundary_partition, interface_partition

__all__ = [
    "CutRule", "Gauss1D", "InterfaceSegment",
    "boundary_partition", "cut_cell_rule", "gauss1d", "interface_partition",
    "points_for_degree", "prune_zero_weights", "rule_sizes", "tensor_rule", "write_rule_csv",
]
