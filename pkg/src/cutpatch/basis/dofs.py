"""Global degree-of-freedom numbering over the active cells of all patches."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class DofMap:
    """Continuous numbering within each patch, disjoint between patches."""

    p: int
    offsets: List[int]
    nodes: List[Dict[Tuple[int, int], int]]
    cell_dofs: List[Dict[Tuple[int, int], np.ndarray]]
    n_dofs: int

    def dofs(self, patch, cell):
        return self.cell_dofs[patch][tuple(cell)]

    def patch_range(self, patch):
        end = self.offsets[patch + 1] if patch + 1 < len(self.offsets) else self.n_dofs
        return self.offsets[patch], end

    def node_coordinates(self, patch, h):
        """Reference coordinates of the patch's nodes ordered by dof number."""
        start, end = self.patch_range(patch)
        coords = np.empty((end - start, 2))
        for (gi, gj), dof in self.nodes[patch].items():
            coords[dof - start] = (gi * h / self.p, gj * h / self.p)
        return coords


def build_dofmap(meshes, p):
    """Number the Q_p nodes of every active cell, patch by patch.

    A node is identified by its index (ci p + a, cj p + b) on the refined
    lattice of the patch's grid, so neighbouring cells share nodes.
    """
    offsets, nodes, cell_dofs = [], [], []
    total = 0
    local = [(a, b) for b in range(p + 1) for a in range(p + 1)]
    for mesh in meshes:
        offsets.append(total)
        keys = sorted({(ci * p + a, cj * p + b) for ci, cj in mesh.active for a, b in local})
        numbering = {key: total + k for k, key in enumerate(keys)}
        nodes.append(numbering)
        cell_dofs.append({
            (ci, cj): np.array([numbering[(ci * p + a, cj * p + b)] for a, b in local])
            for ci, cj in mesh.active
        })
        total += len(keys)
    logger.info("dof map: %d dofs over %d patches", total, len(meshes))
    return DofMap(p, offsets, nodes, cell_dofs, total)
