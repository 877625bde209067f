"""Partitions of interface and boundary curves into single-cell pieces.

A piece of an interface lies inside exactly one cell of the mesh on each side,
so the breakpoints are the grid crossings of side i together with the grid
crossings of side j pulled back through the interface map.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..trim.clipping import intersect_with_gridlines
from ..utils.errors import GeometryError
from .gauss import gauss1d

logger = logging.getLogger(__name__)

BREAK_TOL = 1e-10
ON_CURVE_TOL = 1e-8
NUDGE_OFFSET = 1e-9


@dataclass(frozen=True)
class InterfaceSegment:
    """One single-cell piece [s_begin, s_end] of trim segment ``segment_index``.

    ``params``/``weights`` are the Gauss rule in the curve parameter; ``x_i``
    and ``x_j`` are the matching reference points on either side (``x_j`` and
    ``owner_cell_j`` are None on a boundary curve).
    """

    segment_index: int
    s_begin: float
    s_end: float
    owner_cell_i: Tuple[int, int]
    owner_cell_j: Optional[Tuple[int, int]]
    params: np.ndarray
    weights: np.ndarray
    x_i: np.ndarray
    x_j: Optional[np.ndarray] = None

    @property
    def length(self):
        return self.s_end - self.s_begin


def _left_normal(segment, s):
    t = segment.derivative(s)
    return np.array([-t[1], t[0]]) / np.linalg.norm(t)


def _owner(mesh, segment, s):
    """Cell of ``mesh`` holding the piece around parameter ``s`` (on the region side)."""
    point = segment.eval(s) + NUDGE_OFFSET * mesh.grid.h * _left_normal(segment, s)
    return mesh.locate(point)


def _dedupe(values):
    values = np.sort(values)
    keep = [values[0]]
    for v in values[1:]:
        if v - keep[-1] > BREAK_TOL:
            keep.append(v)
    keep[-1] = values[-1]
    return np.array(keep)


def _pullback_breaks(segment, points_i):
    """Parameters on ``segment`` of points lying on it."""
    if len(points_i) == 0:
        return np.empty(0)
    s = np.atleast_1d(segment.closest_parameter(points_i))
    on = np.linalg.norm(segment.eval(s) - points_i, axis=-1) < ON_CURVE_TOL
    return s[on]


def _pieces(breaks, gauss_pts):
    g = gauss1d(gauss_pts)
    for a, b in zip(breaks[:-1], breaks[1:]):
        yield a, b, a + (b - a) * g.points, (b - a) * g.weights


def interface_partition(curve, mesh_i, mesh_j, imap, gauss_pts, curve_j=None):
    """Split the side-i interface curve into pieces owned by one cell per mesh.

    Args:
        curve: Trim segments of the interface on patch i
        mesh_i, mesh_j: Active meshes of the two patches
        imap: :class:`InterfaceMap` from patch i to patch j
        gauss_pts: Gauss points per piece
        curve_j: Trim segments of the interface on patch j (default: the
            matching side of patch j)

    Raises:
        GeometryError: if a breakpoint cannot be mapped across the interface
    """
    if curve_j is None:
        curve_j = [imap.patch_j.side(imap.iface.side_j)]
    crossings_j = []
    for seg_j in curve_j:
        s = intersect_with_gridlines(seg_j, mesh_j.grid)
        if len(s):
            crossings_j.append(seg_j.eval(s))
    crossings_j = np.concatenate(crossings_j) if crossings_j else np.zeros((0, 2))
    try:
        mapped = imap.backward(crossings_j) if len(crossings_j) else crossings_j
    except GeometryError as e:
        raise GeometryError(f"interface {imap.iface}: breakpoint mapping failed: {e}") from e

    pieces = []
    for k, seg in enumerate(curve):
        breaks = np.concatenate([[0.0, 1.0], intersect_with_gridlines(seg, mesh_i.grid),
                                 _pullback_breaks(seg, mapped)])
        breaks = _dedupe(np.clip(breaks, 0.0, 1.0))
        for a, b, params, weights in _pieces(breaks, gauss_pts):
            x_i = seg.eval(params)
            x_j = imap.forward(x_i)
            mid = 0.5 * (a + b)
            mid_j = imap.forward(seg.eval(mid))
            seg_j = min(curve_j, key=lambda c: c.distance(mid_j[None])[0])
            t_j = float(seg_j.closest_parameter(mid_j))
            pieces.append(InterfaceSegment(
                segment_index=k, s_begin=float(a), s_end=float(b),
                owner_cell_i=_owner(mesh_i, seg, mid),
                owner_cell_j=_owner(mesh_j, seg_j, t_j),
                params=params, weights=weights, x_i=x_i, x_j=x_j,
            ))
    logger.debug("interface %s: %d pieces", imap.iface, len(pieces))
    return pieces


def boundary_partition(curve, mesh, gauss_pts):
    """Pieces of a boundary curve, each inside one cell of ``mesh``."""
    pieces = []
    for k, seg in enumerate(curve):
        breaks = _dedupe(np.concatenate([[0.0, 1.0], intersect_with_gridlines(seg, mesh.grid)]))
        for a, b, params, weights in _pieces(breaks, gauss_pts):
            pieces.append(InterfaceSegment(
                segment_index=k, s_begin=float(a), s_end=float(b),
                owner_cell_i=_owner(mesh, seg, 0.5 * (a + b)), owner_cell_j=None,
                params=params, weights=weights, x_i=seg.eval(params),
            ))
    return pieces
