"""Multipatch surfaces: patches, interfaces between them, and open boundary edges.

Each patch owns a chart placed by a :class:`Placement` and the matching
reference subdomain, the placed unit square. Side k of that square (0 bottom,
1 right, 2 top, 3 left) is trim segment k. Interfaces and boundary edges are
found by comparing the sides of all patches in ambient space.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ..trim.curves import RefSubdomain, rotated_square
from ..utils.errors import GeometryError
from .maps import CubeFaceChart, FlatChart, PatchMap, Placement, TorusChart
from .metric import invert_map

logger = logging.getLogger(__name__)

DEFAULT_SCALE = 0.7
MATCH_TOL = 1e-8
SEED_SAMPLES = 33
SIDE_NAMES = ("bottom", "right", "top", "left")


def default_angles(count):
    """Deterministic generic rotation angles, one per patch."""
    return [float((0.1 + 0.37 * k) % (np.pi / 2)) for k in range(count)]


@dataclass(frozen=True)
class Patch:
    index: int
    map: PatchMap
    domain: RefSubdomain

    @property
    def name(self):
        return self.map.name

    def side(self, k):
        """Trim segment of side ``k`` of the placed square."""
        return self.domain.outer.segments[k]


@dataclass(frozen=True)
class Interface:
    """Shared edge between patches i < j, given by the side index on each."""

    i: int
    j: int
    side_i: int
    side_j: int


@dataclass(frozen=True)
class BoundaryEdge:
    patch: int
    side: int


def make_patch(index, chart, angle=0.0, scale=DEFAULT_SCALE, translation=(0.0, 0.0), name=""):
    placement = Placement(angle=angle, scale=scale, translation=tuple(translation))
    domain = RefSubdomain([rotated_square(angle, scale, translation=translation)])
    return Patch(index, PatchMap(chart, placement, name or f"patch{index}"), domain)


def _side_points(patch, k):
    seg = patch.side(k)
    return patch.map.eval(seg.eval(np.array([0.0, 0.5, 1.0])))


def discover_edges(patches):
    """Pair up patch sides with the same ambient image.

    Returns:
        (interfaces, boundary): matched sides as :class:`Interface` with i < j,
        and unmatched sides as :class:`BoundaryEdge`.
    """
    sides = [(p.index, k, _side_points(p, k)) for p in patches for k in range(4)]
    matched = set()
    interfaces = []
    for a in range(len(sides)):
        pa, ka, xa = sides[a]
        if (pa, ka) in matched:
            continue
        for b in range(a + 1, len(sides)):
            pb, kb, xb = sides[b]
            if pb == pa or (pb, kb) in matched:
                continue
            if np.linalg.norm(xa[1] - xb[1]) > MATCH_TOL:
                continue
            same = np.linalg.norm(xa[0] - xb[0]) + np.linalg.norm(xa[2] - xb[2])
            flipped = np.linalg.norm(xa[0] - xb[2]) + np.linalg.norm(xa[2] - xb[0])
            if min(same, flipped) > 2 * MATCH_TOL:
                continue
            i, j, si, sj = (pa, pb, ka, kb) if pa < pb else (pb, pa, kb, ka)
            interfaces.append(Interface(i, j, si, sj))
            matched.update({(pa, ka), (pb, kb)})
            break
    boundary = [BoundaryEdge(p, k) for p, k, _ in sides if (p, k) not in matched]
    return interfaces, boundary


@dataclass
class Surface:
    """Named collection of patches with their interfaces and boundary edges."""

    name: str
    patches: List[Patch]
    interfaces: List[Interface] = field(default_factory=list)
    boundary: List[BoundaryEdge] = field(default_factory=list)

    def __post_init__(self):
        if not self.interfaces and not self.boundary:
            self.interfaces, self.boundary = discover_edges(self.patches)
        logger.debug("surface %s: %d patches, %d interfaces, %d boundary edges",
                     self.name, len(self.patches), len(self.interfaces), len(self.boundary))

    @property
    def closed(self):
        return not self.boundary

    def interface_map(self, iface):
        return InterfaceMap(self.patches[iface.i], self.patches[iface.j], iface)

    def with_placements(self, angles, translations=None):
        """Same charts placed at new angles (and translations); edges are rediscovered."""
        if len(angles) != len(self.patches):
            raise GeometryError(f"expected {len(self.patches)} angles, got {len(angles)}")
        translations = translations or [p.map.placement.translation for p in self.patches]
        patches = [
            make_patch(p.index, p.map.chart, angle, p.map.placement.scale, t, p.name)
            for p, angle, t in zip(self.patches, angles, translations)
        ]
        return Surface(self.name, patches)


class InterfaceMap:
    """Reference-to-reference map p_ij = F_j^{-1} o F_i across one interface.

    The inversion of F_j is seeded from the nearest of a few samples along the
    matching side of patch j, so it starts inside the convergence basin.
    """

    def __init__(self, patch_i, patch_j, iface, samples=SEED_SAMPLES):
        self.patch_i = patch_i
        self.patch_j = patch_j
        self.iface = iface
        s = np.linspace(0.0, 1.0, samples)
        self._ref_i = patch_i.side(iface.side_i).eval(s)
        self._ref_j = patch_j.side(iface.side_j).eval(s)
        self._amb_i = patch_i.map.eval(self._ref_i)
        self._amb_j = patch_j.map.eval(self._ref_j)

    @staticmethod
    def _seed(target, amb, ref):
        dist = np.linalg.norm(target[..., None, :] - amb, axis=-1)
        return ref[np.argmin(dist, axis=-1)]

    def forward(self, x):
        """Reference point(s) on patch j matching ``x`` on patch i."""
        target = self.patch_i.map.eval(np.asarray(x, dtype=float))
        return invert_map(self.patch_j.map, target, self._seed(target, self._amb_j, self._ref_j))

    def backward(self, x):
        """Reference point(s) on patch i matching ``x`` on patch j."""
        target = self.patch_j.map.eval(np.asarray(x, dtype=float))
        return invert_map(self.patch_i.map, target, self._seed(target, self._amb_i, self._ref_i))


def _placed(charts, names, angles, scale, translations):
    angles = default_angles(len(charts)) if angles is None else list(angles)
    translations = translations or [(0.0, 0.0)] * len(charts)
    return [make_patch(k, chart, angles[k], scale, translations[k], names[k])
            for k, chart in enumerate(charts)]


_CUBE_FACES = [(0, 1), (0, -1), (1, 1), (1, -1), (2, 1), (2, -1)]


def sphere(angles: Optional[Sequence[float]] = None, scale=DEFAULT_SCALE, translations=None):
    """Unit sphere as six radially projected cube faces."""
    charts = [CubeFaceChart(axis, sign) for axis, sign in _CUBE_FACES]
    names = [f"{'+' if s > 0 else '-'}{'xyz'[a]}" for a, s in _CUBE_FACES]
    return Surface("sphere", _placed(charts, names, angles, scale, translations))


def sphere_cap(angles=None, scale=DEFAULT_SCALE, translations=None):
    """Unit sphere without the face below z = -1/sqrt(3): five patches with four boundary edges."""
    faces = _CUBE_FACES[:5]
    charts = [CubeFaceChart(axis, sign) for axis, sign in faces]
    names = [f"{'+' if s > 0 else '-'}{'xyz'[a]}" for a, s in faces]
    return Surface("sphere_cap", _placed(charts, names, angles, scale, translations))


def torus(angles=None, scale=DEFAULT_SCALE, translations=None, r=0.6, R=1.0):
    """Torus of tube radius ``r`` and center radius ``R`` as 2 x 4 windows in (theta, phi)."""
    charts, names = [], []
    for a in range(2):
        for b in range(4):
            charts.append(TorusChart(a * np.pi, np.pi, b * np.pi / 2, np.pi / 2, r, R))
            names.append(f"theta{a}-phi{b}")
    return Surface("torus", _placed(charts, names, angles, scale, translations))


def flat(angles=None, scale=DEFAULT_SCALE, translations=None):
    """Unit square in the plane z = 0 as a single patch."""
    return Surface("flat", _placed([FlatChart()], ["square"], angles, scale, translations))


FLAT2_TRANSLATIONS = [(0.013, 0.021), (-0.017, 0.008)]


def flat2(angles=(0.0, 0.0), scale=DEFAULT_SCALE, translations=None):
    """Unit square split at x = 1/2 into two patches."""
    charts = [
        FlatChart((0.0, 0.0, 0.0), ((0.5, 0.0), (0.0, 1.0), (0.0, 0.0))),
        FlatChart((0.5, 0.0, 0.0), ((0.5, 0.0), (0.0, 1.0), (0.0, 0.0))),
    ]
    return Surface("flat2", _placed(charts, ["left", "right"], angles, scale,
                                    translations or FLAT2_TRANSLATIONS))


SURFACES = {
    "sphere": sphere,
    "sphere_cap": sphere_cap,
    "torus": torus,
    "flat": flat,
    "flat2": flat2,
}
