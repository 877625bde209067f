"""Trim segments, loops and reference subdomains.

A trim segment is a polynomial curve gamma(s), s in [0, 1], stored as a
``(2, degree + 1)`` array of power-basis coefficients. Loops bound the region
on their left: outer loops run counter-clockwise, hole loops clockwise.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.spatial import cKDTree

from ..utils.errors import OrientationError, TrimError, TrimFileError

logger = logging.getLogger(__name__)

CLOSURE_TOL = 1e-12
BOUNDARY_TOL = 1e-10
PARAM_TOL = 1e-12


class Location(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    BOUNDARY = "boundary"


class TrimSegment:
    """Polynomial curve gamma(s) = sum_k coeffs[:, k] s^k on s in [0, 1]."""

    def __init__(self, coeffs, check=True):
        coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        if coeffs.shape[0] != 2 or coeffs.shape[1] < 2:
            raise TrimError(f"trim segment coefficients must be 2 x (degree+1), got {coeffs.shape}")
        self.coeffs = coeffs
        if check:
            speed = np.linalg.norm(self.derivative(np.linspace(0.0, 1.0, 9)), axis=-1)
            if np.any(speed <= 1e-14):
                raise TrimError("trim segment parametrization is not regular")

    @classmethod
    def line(cls, a, b, check=True):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return cls(np.stack([a, b - a], axis=1), check=check)

    @property
    def degree(self):
        return self.coeffs.shape[1] - 1

    @property
    def start(self):
        return self.coeffs[:, 0].copy()

    @property
    def end(self):
        return self.coeffs.sum(axis=1)

    def eval(self, s):
        return np.moveaxis(P.polyval(np.asarray(s, dtype=float), self.coeffs.T), 0, -1)

    def derivative(self, s):
        d = P.polyder(self.coeffs.T)
        return np.moveaxis(P.polyval(np.asarray(s, dtype=float), d), 0, -1)

    def split(self, s0, s1):
        """Restriction to [s0, s1], reparametrized to [0, 1]."""
        out = np.zeros_like(self.coeffs)
        inner = np.array([s0, s1 - s0])
        for c in range(2):
            comp = _compose(self.coeffs[c], inner)
            out[c, :len(comp)] = comp[: out.shape[1]]
        return TrimSegment(out, check=False)

    def reversed(self):
        return self.split(1.0, 0.0)

    def closest_parameter(self, point, iterations=30):
        """Parameter in [0, 1] of the point on the curve nearest to ``point``."""
        point = np.asarray(point, dtype=float)
        if self.degree == 1:
            d = self.coeffs[:, 1]
            s = (point - self.coeffs[:, 0]) @ d / (d @ d)
            return np.clip(s, 0.0, 1.0)
        grid = np.linspace(0.0, 1.0, 17)
        dist = np.linalg.norm(self.eval(grid)[None] - point.reshape(-1, 1, 2), axis=-1)
        s = grid[np.argmin(dist, axis=-1)]
        dd = P.polyder(self.coeffs.T, 2)
        for _ in range(iterations):
            g = self.eval(s) - point.reshape(-1, 2)
            d1 = self.derivative(s)
            d2 = np.moveaxis(P.polyval(s, dd), 0, -1)
            num = np.sum(g * d1, axis=-1)
            den = np.sum(d1 * d1, axis=-1) + np.sum(g * d2, axis=-1)
            step = num / np.where(np.abs(den) > 1e-300, den, 1.0)
            s = np.clip(s - step, 0.0, 1.0)
            if np.all(np.abs(step) < 1e-15):
                break
        return s.reshape(point.shape[:-1])

    def distance(self, points):
        points = np.asarray(points, dtype=float)
        s = self.closest_parameter(points)
        return np.linalg.norm(self.eval(s) - points, axis=-1)

    def __repr__(self):
        return f"TrimSegment(degree={self.degree}, start={self.start.tolist()}, end={self.end.tolist()})"


def _compose(coeffs, inner):
    """Power-basis coefficients of p(inner(s)) for a linear ``inner``."""
    out = np.zeros(len(coeffs))
    power = np.array([1.0])
    for c in coeffs:
        out[: len(power)] += c * power
        power = P.polymul(power, inner)
    return out


def _gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def segment_signed_area(segment):
    """Contribution 1/2 int (x dy - y dx) of one segment to the enclosed area."""
    s, w = _gauss(segment.degree + 1)
    g = segment.eval(s)
    d = segment.derivative(s)
    return 0.5 * float(np.sum(w * (g[:, 0] * d[:, 1] - g[:, 1] * d[:, 0])))


@dataclass
class TrimLoop:
    """Closed chain of trim segments; the bounded region lies on the left."""

    segments: List[TrimSegment]

    def __post_init__(self):
        if not self.segments:
            raise TrimError("a trim loop needs at least one segment")
        scale = max(1.0, max(np.abs(seg.coeffs).max() for seg in self.segments))
        for k, seg in enumerate(self.segments):
            nxt = self.segments[(k + 1) % len(self.segments)]
            gap = np.linalg.norm(seg.end - nxt.start)
            if gap > CLOSURE_TOL * scale:
                raise TrimError(f"trim loop is not closed: gap {gap:.3e} after segment {k}")

    @property
    def signed_area(self):
        return sum(segment_signed_area(seg) for seg in self.segments)

    @property
    def is_ccw(self):
        return self.signed_area > 0.0

    @property
    def max_degree(self):
        return max(seg.degree for seg in self.segments)

    def vertices(self):
        return np.array([seg.start for seg in self.segments])

    def sample(self, per_segment=16):
        s = np.linspace(0.0, 1.0, per_segment, endpoint=False)
        return np.concatenate([seg.eval(s) for seg in self.segments])

    def rotated(self, k):
        """Same loop with segment list cyclically shifted by ``k``."""
        k %= len(self.segments)
        return TrimLoop(self.segments[k:] + self.segments[:k])


@dataclass
class RefSubdomain:
    """Trimmed region of the unit square: one outer loop plus optional holes."""

    loops: List[TrimLoop]
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        if not self.loops:
            raise TrimError("a reference subdomain needs an outer loop")
        if self.validate:
            self.check()

    def check(self):
        outer, holes = self.loops[0], self.loops[1:]
        if not outer.is_ccw:
            raise OrientationError("outer trim loop must run counter-clockwise")
        for hole in holes:
            if hole.is_ccw:
                raise OrientationError("hole trim loops must run clockwise")
            inside = contains(RefSubdomain([outer], validate=False), hole.vertices())
            if np.any(inside == Location.OUTSIDE):
                raise TrimError("hole loop is not contained in the outer loop")
        if holes:
            samples = [loop.sample() for loop in self.loops]
            for a in range(len(samples)):
                tree = cKDTree(samples[a])
                for b in range(a + 1, len(samples)):
                    dist, _ = tree.query(samples[b])
                    if np.min(dist) <= BOUNDARY_TOL:
                        raise TrimError(f"trim loops {a} and {b} intersect")

    @property
    def outer(self):
        return self.loops[0]

    @property
    def area(self):
        return sum(loop.signed_area for loop in self.loops)

    @property
    def segments(self):
        return [seg for loop in self.loops for seg in loop.segments]

    @property
    def max_degree(self):
        return max(loop.max_degree for loop in self.loops)


def _monotone_pieces(segment):
    """Split parameters making gamma_2 monotone on each piece."""
    cuts = [0.0, 1.0]
    dy = P.polyder(segment.coeffs[1])
    if len(dy) > 1:
        for root in P.polyroots(dy):
            if abs(root.imag) < 1e-14 and 0.0 < root.real < 1.0:
                cuts.append(float(root.real))
    cuts.sort()
    return list(zip(cuts[:-1], cuts[1:]))


def _winding(segment, points):
    """Signed crossing count of the ray to +x1 from each point."""
    px, py = points[:, 0], points[:, 1]
    count = np.zeros(len(points), dtype=int)
    for s0, s1 in _monotone_pieces(segment):
        piece = segment.split(s0, s1) if (s0, s1) != (0.0, 1.0) else segment
        y0, y1 = piece.start[1], piece.end[1]
        if y0 == y1:
            continue
        up = y1 > y0
        lo, hi = (y0, y1) if up else (y1, y0)
        hit = (py >= lo) & (py < hi)
        if not np.any(hit):
            continue
        idx = np.nonzero(hit)[0]
        s = _solve_monotone(piece.coeffs[1], py[idx])
        x_cross = P.polyval(s, piece.coeffs[0])
        right = x_cross > px[idx]
        count[idx[right]] += 1 if up else -1
    return count


def _solve_monotone(coeffs, values, iterations=60):
    """Solve p(s) = value on [0, 1] for a monotone polynomial p."""
    if len(coeffs) == 2:
        return np.clip((values - coeffs[0]) / coeffs[1], 0.0, 1.0)
    lo = np.zeros_like(values)
    hi = np.ones_like(values)
    increasing = P.polyval(1.0, coeffs) > P.polyval(0.0, coeffs)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        below = P.polyval(mid, coeffs) < values
        go_right = below if increasing else ~below
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    return 0.5 * (lo + hi)


def contains(dom, p):
    """Classify reference point(s) as inside, outside or on the boundary of ``dom``.

    Returns a single :class:`Location` for one point, an object array otherwise.
    """
    points = np.asarray(p, dtype=float)
    single = points.ndim == 1
    points = points.reshape(-1, 2)
    winding = np.zeros(len(points), dtype=int)
    near = np.zeros(len(points), dtype=bool)
    for seg in dom.segments:
        winding += _winding(seg, points)
        near |= seg.distance(points) < BOUNDARY_TOL
    out = np.where(winding != 0, Location.INSIDE, Location.OUTSIDE).astype(object)
    out[near] = Location.BOUNDARY
    return out[0] if single else out


def polyline_loop(points):
    """Closed P1 loop through ``points`` (the last point connects to the first)."""
    points = np.asarray(points, dtype=float)
    return TrimLoop([TrimSegment.line(points[k], points[(k + 1) % len(points)]) for k in range(len(points))])


def rotated_square(angle=0.0, scale=0.7, center=(0.5, 0.5), translation=(0.0, 0.0)):
    """Counter-clockwise square loop: the unit square scaled and rotated about ``center``.

    Segment k is the image of side k of the unit square (bottom, right, top, left).
    """
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    center = np.asarray(center, dtype=float)
    placed = center + np.asarray(translation) + scale * (corners - center) @ rot.T
    return polyline_loop(placed)


def load_trim_file(path):
    """Read a reference subdomain from the plain-text trim format.

    One segment per line: the degree followed by the x1 coefficients and then
    the x2 coefficients (power basis). A blank line ends a loop; ``#`` starts a
    comment. The first loop is the outer boundary.

    Raises:
        TrimFileError: on malformed lines or open loops
    """
    loops, current = [], []
    lines = Path(path).read_text().splitlines() + [""]
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            if current:
                try:
                    loops.append(TrimLoop(current))
                except TrimError as e:
                    raise TrimFileError(f"{path}:{lineno}: {e}") from e
                current = []
            continue
        try:
            values = [float(v) for v in line.split()]
        except ValueError as e:
            raise TrimFileError(f"{path}:{lineno}: {e}") from e
        degree = int(values[0])
        if degree not in (1, 2) or len(values) != 1 + 2 * (degree + 1):
            raise TrimFileError(f"{path}:{lineno}: expected degree 1 or 2 and {2 * (degree + 1)} coefficients")
        coeffs = np.array(values[1:]).reshape(2, degree + 1)
        current.append(TrimSegment(coeffs))
    if not loops:
        raise TrimFileError(f"{path}: no trim loops found")
    return RefSubdomain(loops)


def write_trim_file(dom, path):
    with open(path, "w") as f:
        f.write("# degree  x1 coefficients  x2 coefficients\n")
        for loop in dom.loops:
            for seg in loop.segments:
                values = " ".join(f"{v:.17g}" for v in seg.coeffs.ravel())
                f.write(f"{seg.degree} {values}\n")
            f.write("\n")
