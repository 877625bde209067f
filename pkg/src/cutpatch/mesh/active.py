"""Background grids, active cells and ghost-penalty faces of one patch."""

from __future__ import annotations

import csv
import enum
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Set, Tuple

import numpy as np

from ..trim.clipping import Box, cell_box, clip_to_grid
from ..trim.curves import TrimLoop
from ..utils.errors import EmptyDomainError, MeshError

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]

# a cell is interior when the uncovered part is below this fraction of h^2
INTERIOR_TOL = 1e-10
DOMAIN_TOL = 1e-12


@dataclass(frozen=True)
class BackgroundGrid:
    """Uniform n x n grid on the reference square."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise MeshError(f"grid size must be a positive integer, got {self.n}")

    @property
    def h(self):
        return 1.0 / self.n

    def box(self, cell) -> Box:
        return cell_box(self, cell)

    def cells(self):
        return [(i, j) for i in range(self.n) for j in range(self.n)]

    def locate(self, point) -> Cell:
        """Index of the cell containing ``point`` (points on grid lines go to the upper cell)."""
        x, y = point
        clamp = lambda v: min(max(int(np.floor(v / self.h)), 0), self.n - 1)  # noqa: E731
        return clamp(x), clamp(y)


class CellKind(enum.Enum):
    INTERIOR = "interior"
    CUT = "cut"


@dataclass(frozen=True)
class Face:
    """Interior face between two cells; the unit normal points from minus to plus.

    ``normal_axis`` is 1 for a vertical face (normal along x1) and 2 for a
    horizontal face (normal along x2).
    """

    cell_minus: Cell
    cell_plus: Cell
    normal_axis: int

    @property
    def normal(self):
        return np.array([1.0, 0.0]) if self.normal_axis == 1 else np.array([0.0, 1.0])

    def endpoints(self, grid):
        i, j = self.cell_plus
        h = grid.h
        if self.normal_axis == 1:
            return np.array([i * h, j * h]), np.array([i * h, (j + 1) * h])
        return np.array([i * h, j * h]), np.array([(i + 1) * h, j * h])


@dataclass
class ActiveMesh:
    grid: BackgroundGrid
    loops: Dict[Cell, List[TrimLoop]]
    kinds: Dict[Cell, CellKind]
    areas: Dict[Cell, float]
    stab_faces: List[Face] = field(default_factory=list)

    @property
    def active(self) -> List[Cell]:
        return sorted(self.kinds)

    @property
    def interior(self) -> List[Cell]:
        return [c for c in self.active if self.kinds[c] is CellKind.INTERIOR]

    @property
    def cut(self) -> List[Cell]:
        return [c for c in self.active if self.kinds[c] is CellKind.CUT]

    @property
    def cut_boundary_cells(self) -> Set[Cell]:
        return set(self.cut)

    def is_active(self, cell):
        return cell in self.kinds

    def locate(self, point):
        """Active cell containing ``point``, falling back to the nearest active cell."""
        cell = self.grid.locate(point)
        if cell in self.kinds:
            return cell
        centers = (np.array(self.active) + 0.5) * self.grid.h
        return self.active[int(np.argmin(np.linalg.norm(centers - np.asarray(point), axis=1)))]


def _check_inside_square(dom):
    for loop in dom.loops:
        pts = loop.sample()
        if np.any(pts < -DOMAIN_TOL) or np.any(pts > 1.0 + DOMAIN_TOL):
            raise MeshError("reference subdomain leaves the unit square")


def _stab_faces(kinds):
    faces = []
    for (i, j) in sorted(kinds):
        for nb, axis in (((i + 1, j), 1), ((i, j + 1), 2)):
            if nb not in kinds:
                continue
            if kinds[(i, j)] is CellKind.CUT or kinds[nb] is CellKind.CUT:
                faces.append(Face((i, j), nb, axis))
    return faces


def build_active_mesh(dom, grid):
    """Active cells of ``grid`` for the reference subdomain ``dom``.

    Cells whose intersection with ``dom`` is a sliver are dropped by the
    clipper. Interior cells are those covered up to ``INTERIOR_TOL * h^2``.

    Raises:
        MeshError: if the grid is too coarse or ``dom`` leaves the unit square
        EmptyDomainError: if no cell intersects ``dom``
    """
    if grid.n < 2:
        raise MeshError(f"background grid needs at least 2 cells per side, got {grid.n}")
    _check_inside_square(dom)
    loops = clip_to_grid(dom, grid)
    if not loops:
        raise EmptyDomainError(f"no active cells on the {grid.n}x{grid.n} grid")

    h2 = grid.h**2
    kinds, areas = {}, {}
    for cell, cell_loops in loops.items():
        area = sum(loop.signed_area for loop in cell_loops)
        areas[cell] = area
        kinds[cell] = CellKind.INTERIOR if h2 - area <= INTERIOR_TOL * h2 else CellKind.CUT
    mesh = ActiveMesh(grid, loops, kinds, areas, _stab_faces(kinds))
    logger.info("active mesh n=%d: %d active, %d cut, %d interior, %d stabilization faces",
                grid.n, len(kinds), len(mesh.cut), len(mesh.interior), len(mesh.stab_faces))
    return mesh


def neighborhood(mesh, cell, l):
    """Active cells reachable from ``cell`` in at most ``l`` face or node steps."""
    if not mesh.is_active(cell):
        raise MeshError(f"cell {cell} is not active")
    seen = {tuple(cell): 0}
    queue = deque([tuple(cell)])
    while queue:
        cur = queue.popleft()
        if seen[cur] == l:
            continue
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                nb = (cur[0] + di, cur[1] + dj)
                if nb not in seen and mesh.is_active(nb):
                    seen[nb] = seen[cur] + 1
                    queue.append(nb)
    return set(seen)


def mesh_statistics(mesh, patch=""):
    h2 = mesh.grid.h**2
    cut_fractions = [mesh.areas[c] / h2 for c in mesh.cut]
    return {
        "patch": patch,
        "n": mesh.grid.n,
        "active": len(mesh.active),
        "cut": len(mesh.cut),
        "interior": len(mesh.interior),
        "stab_faces": len(mesh.stab_faces),
        "min_cut_fraction": min(cut_fractions) if cut_fractions else "",
    }


STATISTICS_COLUMNS = ["patch", "n", "active", "cut", "interior", "stab_faces", "min_cut_fraction"]


def write_mesh_statistics(rows, path):
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=STATISTICS_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
