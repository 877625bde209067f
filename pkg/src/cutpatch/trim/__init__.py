"""Trim curves, reference subdomains and their intersection with grid cells."""

from .clipping import Box, cell_box, clip_to_cell, clip_to_grid, intersect_with_gridlines, intersect_with_lines
from .curves import (
    Location,
    RefSubdomain,
    TrimLoop,
    TrimSegment,
    contains,
    load_trim_file,
    polyline_loop,
    rotated_square,
    write_trim_file,
)

__all__ = [
    "Box", "Location", "RefSubdomain", "TrimLoop", "TrimSegment",
    "cell_box", "clip_to_cell", "clip_to_grid", "contains",
    "intersect_with_gridlines", "intersect_with_lines",
    "load_trim_file", "polyline_loop", "rotated_square", "write_trim_file",
]
