"""Stabilized cut finite elements for the Laplace-Beltrami problem on trimmed multipatch surfaces."""

__version__ = "0.1.0"
