"""Per-patch background grids, active cells and stabilization faces."""

from .active import (
    ActiveMesh,
    BackgroundGrid,
    CellKind,
    Face,
    build_active_mesh,
    mesh_statistics,
    neighborhood,
    write_mesh_statistics,
)

__all__ = [
    "ActiveMesh", "BackgroundGrid", "CellKind", "Face",
    "build_active_mesh", "mesh_statistics", "neighborhood", "write_mesh_statistics",
]
