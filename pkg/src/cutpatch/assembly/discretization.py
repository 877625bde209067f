"""Everything assembly and error evaluation share for one mesh level."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..basis.dofs import build_dofmap
from ..basis.lagrange import ShapeSet, eval_gradients, eval_shape
from ..geometry.surfaces import BoundaryEdge
from ..mesh.active import BackgroundGrid, CellKind, build_active_mesh
from ..quadrature.cut import cut_cell_rule, tensor_rule
from ..quadrature.interface import boundary_partition, interface_partition
from ..utils.errors import AssemblyError, BoundaryOverlapError

logger = logging.getLogger(__name__)

DEFAULT_BETA = 100.0
DEFAULT_GAMMA = 1e-2


@dataclass(frozen=True)
class FormParams:
    """Nitsche penalty, ghost-penalty weights and quadrature settings.

    ``gamma`` holds either one value used for every derivative order or one
    value per order k = 1..p. ``quad_degree`` defaults to 2p + 2 and
    ``interface_points`` to p + 2.
    """

    beta: float = DEFAULT_BETA
    gamma: Tuple[float, ...] = (DEFAULT_GAMMA,)
    quad_degree: Optional[int] = None
    interface_points: Optional[int] = None

    def __post_init__(self):
        if not self.beta > 0:
            raise AssemblyError(f"beta must be positive, got {self.beta}")
        if any(g < 0 for g in self.gamma):
            raise AssemblyError(f"gamma values must be nonnegative, got {self.gamma}")

    def gammas(self, p):
        if len(self.gamma) == 1:
            return [float(self.gamma[0])] * p
        if len(self.gamma) != p:
            raise AssemblyError(f"expected 1 or {p} gamma values, got {len(self.gamma)}")
        return [float(g) for g in self.gamma]

    def f_degree(self, p):
        return self.quad_degree if self.quad_degree is not None else 2 * p + 2

    def curve_points(self, p):
        return self.interface_points if self.interface_points is not None else p + 2


@dataclass
class BoundarySpec:
    """Dirichlet and Neumann edges with their data as functions of ambient points.

    ``dirichlet_data(X)`` gives boundary values; ``neumann_data(X, n)`` gives
    the flux for the ambient unit conormal ``n``.
    """

    dirichlet: Sequence[BoundaryEdge] = ()
    neumann: Sequence[BoundaryEdge] = ()
    dirichlet_data: Optional[Callable] = None
    neumann_data: Optional[Callable] = None

    def __post_init__(self):
        overlap = set(self.dirichlet) & set(self.neumann)
        if overlap:
            raise BoundaryOverlapError(f"edges declared both Dirichlet and Neumann: {sorted(overlap, key=str)}")

    @property
    def empty(self):
        return not self.dirichlet and not self.neumann


class Discretization:
    """Meshes, cell rules, dof map and curve partitions of a surface at grid size n."""

    def __init__(self, surface, n, p, params=None, boundary=None):
        self.surface = surface
        self.p = p
        self.params = params or FormParams()
        self.boundary = boundary or BoundarySpec()
        self.grid = BackgroundGrid(n)
        self.shapes = ShapeSet(p)
        self.meshes = [build_active_mesh(patch.domain, self.grid) for patch in surface.patches]
        self.dofmap = build_dofmap(self.meshes, p)
        self.rules = [self._cell_rules(mesh) for mesh in self.meshes]

        gp = self.params.curve_points(p)
        self.interface_maps = [surface.interface_map(iface) for iface in surface.interfaces]
        self.interface_pieces = [
            interface_partition([surface.patches[iface.i].side(iface.side_i)],
                                self.meshes[iface.i], self.meshes[iface.j], imap, gp)
            for iface, imap in zip(surface.interfaces, self.interface_maps)
        ]
        known = set(surface.boundary)
        edges = list(self.boundary.dirichlet) + list(self.boundary.neumann)
        unknown = [e for e in edges if e not in known]
        if unknown:
            raise AssemblyError(f"not boundary edges of {surface.name}: {unknown}")
        self.boundary_pieces: Dict[BoundaryEdge, list] = {
            edge: boundary_partition([surface.patches[edge.patch].side(edge.side)], self.meshes[edge.patch], gp)
            for edge in edges
        }
        logger.info("discretization %s n=%d p=%d: %d dofs", surface.name, n, p, self.n_dofs)

    def _cell_rules(self, mesh):
        p_f = self.params.f_degree(self.p)
        rules = {}
        for cell in mesh.active:
            box = self.grid.box(cell)
            if mesh.kinds[cell] is CellKind.INTERIOR:
                rules[cell] = tensor_rule(box, p_f)
            else:
                rules[cell] = cut_cell_rule(mesh.loops[cell], p_f, a=box.y0)
        return rules

    @property
    def n(self):
        return self.grid.n

    @property
    def h(self):
        return self.grid.h

    @property
    def n_dofs(self):
        return self.dofmap.n_dofs

    def local(self, cell, x):
        """Cell-local coordinates of reference points ``x``."""
        return np.asarray(x, dtype=float) / self.h - np.asarray(cell, dtype=float)

    def values(self, cell, x):
        return eval_shape(self.shapes, self.local(cell, x))

    def gradients(self, cell, x):
        return eval_gradients(self.shapes, self.local(cell, x), self.h)

    def evaluate(self, coeffs, patch, cell, x, gradient=False):
        """Discrete function (or its reference gradient) at points ``x`` of one cell."""
        u = np.asarray(coeffs)[self.dofmap.dofs(patch, cell)]
        if gradient:
            return np.einsum("...ak,a->...k", self.gradients(cell, x), u)
        return self.values(cell, x) @ u

    def cell_batches(self, patch):
        """Group active cells of ``patch`` by rule size for vectorized evaluation.

        Yields ``(cells, points, weights)`` with shapes (C,), (C, q, 2), (C, q).
        """
        groups: Dict[int, list] = {}
        for cell, rule in self.rules[patch].items():
            if len(rule):
                groups.setdefault(len(rule), []).append(cell)
        for size in sorted(groups):
            cells = groups[size]
            points = np.stack([self.rules[patch][c].points for c in cells])
            weights = np.stack([self.rules[patch][c].weights for c in cells])
            yield cells, points, weights
