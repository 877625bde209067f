"""Curve/grid intersection and clipping of reference subdomains to cells.

Trim segments are split at every grid line they cross; each resulting sub-arc
lies in exactly one cell (arcs running along a grid line belong to the cell on
their left, where the region is). Per cell, the arcs are chained into closed
loops by walking counter-clockwise along the cell boundary between an arc's
exit point and the next entry point.
"""

from __future__ import annotations

import logging
import warnings
from typing import Dict, List, NamedTuple, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from ..utils.errors import DegenerateCutWarning, OrientationError
from .curves import Location, PARAM_TOL, TrimLoop, TrimSegment, contains

logger = logging.getLogger(__name__)

SNAP_TOL = 1e-12
SLIVER_FRACTION = 1e-12


class Box(NamedTuple):
    """Axis-aligned cell [x0, x1] x [y0, y1]."""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    @property
    def area(self):
        return self.width * self.height

    def corners(self):
        return np.array([[self.x0, self.y0], [self.x1, self.y0], [self.x1, self.y1], [self.x0, self.y1]])

    def loop(self):
        c = self.corners()
        return TrimLoop([TrimSegment.line(c[k], c[(k + 1) % 4]) for k in range(4)])

    def contains(self, point):
        x, y = point
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1


def _roots_in_unit(coeffs, values):
    """Parameters s in [0, 1] with p(s) = v for any v in ``values``."""
    coeffs = P.polytrim(np.asarray(coeffs, dtype=float), 1e-300)
    if len(coeffs) < 2 or np.all(np.abs(coeffs[1:]) < 1e-14):
        return np.empty(0)
    lo_hi = P.polyval(np.linspace(0.0, 1.0, 2 * len(coeffs) + 1), coeffs)
    extrema = [0.0, 1.0] + [r.real for r in P.polyroots(P.polyder(coeffs)) if len(coeffs) > 2
                            and abs(r.imag) < 1e-14 and 0.0 < r.real < 1.0]
    vals = P.polyval(np.array(extrema), coeffs)
    lo, hi = min(vals.min(), lo_hi.min()), max(vals.max(), lo_hi.max())
    values = np.asarray(values, dtype=float)
    values = values[(values >= lo - SNAP_TOL) & (values <= hi + SNAP_TOL)]
    if len(coeffs) == 2:
        roots = (values - coeffs[0]) / coeffs[1]
    else:
        found = []
        for v in values:
            shifted = coeffs.copy()
            shifted[0] -= v
            found.extend(r.real for r in P.polyroots(shifted) if abs(r.imag) < 1e-10)
        roots = np.array(found)
    roots = roots[(roots >= -PARAM_TOL) & (roots <= 1.0 + PARAM_TOL)]
    return np.clip(roots, 0.0, 1.0)


def _dedupe(values, tol):
    values = np.sort(np.asarray(values, dtype=float))
    if len(values) == 0:
        return values
    keep = [values[0]]
    for v in values[1:]:
        if v - keep[-1] > tol:
            keep.append(v)
    return np.array(keep)


def intersect_with_lines(curve, xs=(), ys=()):
    """Sorted parameters where ``curve`` crosses the vertical lines ``xs`` or horizontal lines ``ys``.

    A coordinate that is constant along the curve produces no crossings for
    that family (the curve runs along the line).
    """
    roots = np.concatenate([
        _roots_in_unit(curve.coeffs[0], xs),
        _roots_in_unit(curve.coeffs[1], ys),
    ])
    return _dedupe(roots, PARAM_TOL)


def grid_lines(grid):
    return np.arange(grid.n + 1) * grid.h


def intersect_with_gridlines(curve, grid):
    """Sorted, deduplicated parameters where ``curve`` crosses a line of ``grid``."""
    lines = grid_lines(grid)
    return intersect_with_lines(curve, lines, lines)


def _snap(value, lines):
    if len(lines) == 0:
        return value
    k = np.argmin(np.abs(lines - value))
    return lines[k] if abs(lines[k] - value) <= SNAP_TOL else value


def _snap_segment(seg, xs, ys):
    start = np.array([_snap(seg.start[0], xs), _snap(seg.start[1], ys)])
    end = np.array([_snap(seg.end[0], xs), _snap(seg.end[1], ys)])
    if seg.degree == 1:
        return TrimSegment.line(start, end, check=False)
    coeffs = seg.coeffs.copy()
    coeffs[:, 0] = start
    coeffs[:, -1] += end - coeffs.sum(axis=1)
    return TrimSegment(coeffs, check=False)


def split_at_lines(segment, xs, ys):
    """Sub-arcs of ``segment`` between consecutive line crossings, endpoints snapped."""
    params = np.concatenate([[0.0], intersect_with_lines(segment, xs, ys), [1.0]])
    params = _dedupe(params, PARAM_TOL)
    arcs = []
    for s0, s1 in zip(params[:-1], params[1:]):
        arc = segment if (s0, s1) == (0.0, 1.0) else segment.split(s0, s1)
        arc = _snap_segment(arc, xs, ys)
        if np.linalg.norm(arc.end - arc.start) < 1e-14 and arc.degree == 1:
            continue
        arcs.append(arc)
    return arcs


def _point_beside(arc, offset):
    """Point just left of the arc midpoint, used to find the owning cell."""
    mid = arc.eval(0.5)
    t = arc.derivative(0.5)
    left = np.array([-t[1], t[0]]) / np.linalg.norm(t)
    return mid + offset * left


def _perimeter(box, pt, tol):
    x, y = pt
    if abs(y - box.y0) <= tol:
        return (x - box.x0) / box.width
    if abs(x - box.x1) <= tol:
        return 1.0 + (y - box.y0) / box.height
    if abs(y - box.y1) <= tol:
        return 2.0 + (box.x1 - x) / box.width
    if abs(x - box.x0) <= tol:
        return 3.0 + (box.y1 - y) / box.height
    return None


def _walk(box, a, b, ta, tb):
    """Straight segments along the box boundary from ``a`` (at ta) ccw to ``b`` (at tb)."""
    corners = box.corners()[[1, 2, 3, 0]]  # corner at perimeter t = 1, 2, 3, 4
    if tb <= ta:
        tb += 4.0
    points = [np.asarray(a)]
    k = int(np.floor(ta)) + 1
    while k < tb:
        points.append(corners[(k - 1) % 4])
        k += 1
    points.append(np.asarray(b))
    segs = []
    for p, q in zip(points[:-1], points[1:]):
        if np.linalg.norm(q - p) > 1e-14:
            segs.append(TrimSegment.line(p, q, check=False))
    return segs


def _chain(arcs, box, dom):
    tol = SNAP_TOL * 10 * max(1.0, box.width)
    starts_t = [_perimeter(box, arc.start, tol) for arc in arcs]
    used = [False] * len(arcs)
    loops = []
    touches = any(t is not None for t in starts_t)
    for first in range(len(arcs)):
        if used[first]:
            continue
        chain, cur = [], first
        while True:
            used[cur] = True
            chain.append(arcs[cur])
            end = arcs[cur].end
            direct = [k for k in range(len(arcs))
                      if (k == first or not used[k]) and np.linalg.norm(arcs[k].start - end) <= tol]
            if first in direct:
                break
            if direct:
                cur = direct[0]
                continue
            t_end = _perimeter(box, end, tol)
            ahead = [k for k in range(len(arcs)) if (k == first or not used[k]) and starts_t[k] is not None]
            if t_end is None or not ahead:
                chain = None
                break
            nxt = min(ahead, key=lambda k: (starts_t[k] - t_end) % 4.0)
            chain.extend(_walk(box, end, arcs[nxt].start, t_end, starts_t[nxt]))
            if nxt == first:
                break
            cur = nxt
        if chain is None:
            logger.warning("dropping an open trim chain in cell %s", tuple(box))
            continue
        loops.append(TrimLoop(chain))

    if not touches:
        midpoints = [((box.x0 + box.x1) / 2, box.y0), (box.x1, (box.y0 + box.y1) / 2),
                     ((box.x0 + box.x1) / 2, box.y1), (box.x0, (box.y0 + box.y1) / 2)]
        for point in midpoints:
            where = contains(dom, point)
            if where is not Location.BOUNDARY:
                if where is Location.INSIDE:
                    loops.insert(0, box.loop())
                break
    return loops


def _finish(loops, box):
    area = sum(loop.signed_area for loop in loops)
    if area < -SLIVER_FRACTION * box.area:
        raise OrientationError(f"clipped region in cell {tuple(box)} has negative area {area:.3e}")
    if loops and area <= SLIVER_FRACTION * box.area:
        warnings.warn(f"discarding degenerate cut of area {area:.3e} in cell {tuple(box)}",
                      DegenerateCutWarning, stacklevel=3)
        return []
    return loops


def clip_to_cell(dom, cell):
    """Oriented boundary loops of the intersection of ``dom`` with ``cell``.

    Returns an empty list when the intersection is empty or a sliver, and the
    cell's own four-segment loop when the cell lies fully inside.
    """
    box = Box(*cell)
    xs = np.array([box.x0, box.x1])
    ys = np.array([box.y0, box.y1])
    offset = 1e-9 * box.width
    arcs = []
    for seg in dom.segments:
        for arc in split_at_lines(seg, xs, ys):
            x, y = _point_beside(arc, offset)
            if box.x0 < x < box.x1 and box.y0 < y < box.y1:
                arcs.append(arc)
    if not arcs:
        inside = contains(dom, ((box.x0 + box.x1) / 2, (box.y0 + box.y1) / 2)) is Location.INSIDE
        return [box.loop()] if inside else []
    return _finish(_chain(arcs, box, dom), box)


def cell_box(grid, cell):
    i, j = cell
    h = grid.h
    return Box(i * h, j * h, (i + 1) * h, (j + 1) * h)


def clip_to_grid(dom, grid) -> Dict[Tuple[int, int], List[TrimLoop]]:
    """``clip_to_cell`` for every cell of ``grid`` with a nonempty intersection."""
    lines = grid_lines(grid)
    offset = 1e-9 * grid.h
    per_cell: Dict[Tuple[int, int], list] = {}
    for seg in dom.segments:
        for arc in split_at_lines(seg, lines, lines):
            x, y = _point_beside(arc, offset)
            cell = (min(max(int(np.floor(x / grid.h)), 0), grid.n - 1),
                    min(max(int(np.floor(y / grid.h)), 0), grid.n - 1))
            per_cell.setdefault(cell, []).append(arc)

    result = {}
    for cell, arcs in per_cell.items():
        box = cell_box(grid, cell)
        loops = _finish(_chain(arcs, box, dom), box)
        if loops:
            result[cell] = loops

    centers = (np.stack(np.meshgrid(np.arange(grid.n), np.arange(grid.n), indexing="ij"), axis=-1)
               .reshape(-1, 2) + 0.5) * grid.h
    free = [k for k, c in enumerate(centers) if tuple((c / grid.h).astype(int)) not in per_cell]
    if free:
        where = contains(dom, centers[free])
        for k, loc in zip(free, where):
            if loc is Location.INSIDE:
                cell = tuple(int(v) for v in (centers[k] / grid.h).astype(int))
                result[cell] = [cell_box(grid, cell).loop()]
    return result
