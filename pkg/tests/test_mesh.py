"""Tests for active meshes, stabilization faces and cell neighborhoods."""
import csv

import numpy as np
import pytest

from cutpatch.mesh import (
    BackgroundGrid,
    CellKind,
    build_active_mesh,
    mesh_statistics,
    neighborhood,
    write_mesh_statistics,
)
from cutpatch.trim import RefSubdomain, polyline_loop, rotated_square
from cutpatch.utils.errors import MeshError


@pytest.fixture
def full_mesh():
    dom = RefSubdomain([polyline_loop([(0, 0), (1, 0), (1, 1), (0, 1)])])
    return build_active_mesh(dom, BackgroundGrid(4))


@pytest.fixture
def rotated_mesh():
    return build_active_mesh(RefSubdomain([rotated_square(np.pi / 6, 0.7)]), BackgroundGrid(8))


def test_full_square(full_mesh):
    assert len(full_mesh.active) == 16
    assert len(full_mesh.interior) == 16
    assert full_mesh.cut == []
    assert full_mesh.stab_faces == []


def test_triangle_on_coarse_grid():
    mesh = build_active_mesh(RefSubdomain([polyline_loop([(0, 0), (1, 0), (0, 1)])]), BackgroundGrid(2))
    assert mesh.active == [(0, 0), (0, 1), (1, 0)]
    assert mesh.kinds[(0, 0)] is CellKind.INTERIOR
    assert mesh.kinds[(1, 0)] is CellKind.CUT
    assert mesh.areas[(1, 0)] == pytest.approx(0.125)
    assert {(f.cell_minus, f.cell_plus, f.normal_axis) for f in mesh.stab_faces} == {
        ((0, 0), (1, 0), 1), ((0, 0), (0, 1), 2)}


def test_active_cells_against_sampling(rotated_mesh):
    """Every cell hit by a sample of the rotated square is active; extra cells hold only thin pieces."""
    angle, scale = np.pi / 6, 0.7
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    h = rotated_mesh.grid.h
    t = (np.arange(50) + 0.5) / 50
    local = np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1).reshape(-1, 2)
    sampled = set()
    for cell in rotated_mesh.grid.cells():
        pts = (np.asarray(cell) + local) * h
        q = (pts - 0.5) @ rot
        if np.any(np.max(np.abs(q), axis=1) < scale / 2):
            sampled.add(cell)
    active = set(rotated_mesh.active)
    assert sampled <= active
    for cell in active - sampled:
        assert rotated_mesh.areas[cell] < 4 * h * h / 50


def test_areas_sum_to_domain_area(rotated_mesh):
    assert sum(rotated_mesh.areas.values()) == pytest.approx(0.49, abs=1e-10)


def test_every_cut_cell_has_a_stabilization_face(rotated_mesh):
    touched = {c for f in rotated_mesh.stab_faces for c in (f.cell_minus, f.cell_plus)}
    assert set(rotated_mesh.cut) <= touched


def test_stabilization_faces(rotated_mesh):
    keys = [(f.cell_minus, f.cell_plus) for f in rotated_mesh.stab_faces]
    assert len(keys) == len(set(keys))
    for f in rotated_mesh.stab_faces:
        assert rotated_mesh.is_active(f.cell_minus) and rotated_mesh.is_active(f.cell_plus)
        assert CellKind.CUT in (rotated_mesh.kinds[f.cell_minus], rotated_mesh.kinds[f.cell_plus])
        di = f.cell_plus[0] - f.cell_minus[0]
        dj = f.cell_plus[1] - f.cell_minus[1]
        assert (di, dj) == ((1, 0) if f.normal_axis == 1 else (0, 1))


def test_face_geometry():
    mesh = build_active_mesh(RefSubdomain([polyline_loop([(0, 0), (1, 0), (0, 1)])]), BackgroundGrid(2))
    face = next(f for f in mesh.stab_faces if f.normal_axis == 1)
    a, b = face.endpoints(mesh.grid)
    np.testing.assert_allclose(a, [0.5, 0.0])
    np.testing.assert_allclose(b, [0.5, 0.5])
    np.testing.assert_allclose(face.normal, [1.0, 0.0])


def test_cut_cells_cover_the_boundary(rotated_mesh):
    """Cells containing trim boundary points are cut cells."""
    boundary = RefSubdomain([rotated_square(np.pi / 6, 0.7)]).outer.sample(40)
    h = rotated_mesh.grid.h
    for point in boundary:
        cell = tuple(int(v) for v in np.floor(point / h))
        assert rotated_mesh.kinds.get(cell) is CellKind.CUT


class TestNeighborhood:
    def test_interior_cell(self, full_mesh):
        assert len(neighborhood(full_mesh, (1, 1), 1)) == 9

    def test_corner_cell(self, full_mesh):
        assert neighborhood(full_mesh, (0, 0), 1) == {(0, 0), (1, 0), (0, 1), (1, 1)}

    def test_zero_steps(self, full_mesh):
        assert neighborhood(full_mesh, (2, 2), 0) == {(2, 2)}

    def test_whole_grid(self, full_mesh):
        assert len(neighborhood(full_mesh, (0, 0), 3)) == 16

    def test_inactive_cell(self, rotated_mesh):
        with pytest.raises(MeshError):
            neighborhood(rotated_mesh, (0, 0), 1)


class TestErrors:
    def test_grid_too_coarse(self):
        with pytest.raises(MeshError):
            build_active_mesh(RefSubdomain([rotated_square()]), BackgroundGrid(1))

    def test_invalid_grid_size(self):
        with pytest.raises(MeshError):
            BackgroundGrid(0)

    def test_domain_outside_unit_square(self):
        dom = RefSubdomain([polyline_loop([(0.5, 0.5), (1.5, 0.5), (1.5, 1.5), (0.5, 1.5)])])
        with pytest.raises(MeshError):
            build_active_mesh(dom, BackgroundGrid(4))


def test_locate_falls_back_to_nearest_active(rotated_mesh):
    assert rotated_mesh.locate((0.5, 0.5)) == (4, 4)
    assert rotated_mesh.is_active(rotated_mesh.locate((0.0, 0.0)))


def test_statistics(rotated_mesh, full_mesh, out_dir):
    stats = mesh_statistics(rotated_mesh, patch="p0")
    assert stats["active"] == stats["cut"] + stats["interior"]
    assert 0 < stats["min_cut_fraction"] < 1
    assert mesh_statistics(full_mesh)["min_cut_fraction"] == ""

    path = out_dir / "mesh.csv"
    write_mesh_statistics([stats], path)
    with open(path) as f:
        rows = list(csv.DictReader(f))
    assert rows[0]["patch"] == "p0"
    assert int(rows[0]["active"]) == stats["active"]
