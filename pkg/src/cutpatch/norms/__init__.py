"""Error norms and observed convergence orders."""

from .errors import ErrorReport, energy_terms, eoc, error_energy, error_L2, interpolate

__all__ = ["ErrorReport", "energy_terms", "eoc", "error_energy", "error_L2", "interpolate"]
