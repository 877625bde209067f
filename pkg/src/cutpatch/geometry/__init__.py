"""Patch maps, metric quantities and multipatch surfaces."""

from .maps import EXTENSION_WIDTH, CubeFaceChart, FlatChart, PatchMap, Placement, TorusChart
from .metric import (
    MetricData,
    RefFunction,
    curve_measure,
    invert_map,
    laplace_beltrami_ref,
    metric_at,
    metric_bounds,
    metric_normal,
    pullback,
    surface_gradient_ref,
)
from .surfaces import (
    SURFACES,
    BoundaryEdge,
    Interface,
    InterfaceMap,
    Patch,
    Surface,
    discover_edges,
    flat,
    flat2,
    make_patch,
    sphere,
    sphere_cap,
    torus,
)

__all__ = [
    "EXTENSION_WIDTH", "CubeFaceChart", "FlatChart", "PatchMap", "Placement", "TorusChart",
    "MetricData", "RefFunction", "curve_measure", "invert_map", "laplace_beltrami_ref",
    "metric_at", "metric_bounds", "metric_normal", "pullback", "surface_gradient_ref",
    "SURFACES", "BoundaryEdge", "Interface", "InterfaceMap", "Patch", "Surface",
    "discover_edges", "flat", "flat2", "make_patch", "sphere", "sphere_cap", "torus",
]
