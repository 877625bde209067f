"""Exception hierarchy shared by every cutpatch subpackage.

Library code raises these; the CLI turns any ``CutPatchError`` into a one-line
``Error: ...`` message and a nonzero exit code.
"""

import logging
from contextlib import contextmanager

import numpy as np

logger = logging.getLogger(__name__)


class CutPatchError(Exception):
    """Base class for all cutpatch failures."""


class GeometryError(CutPatchError):
    pass


class SingularJacobianError(GeometryError):
    """Patch jacobian columns are (numerically) linearly dependent."""


class InversionError(GeometryError):
    """Gauss-Newton inversion of a patch map did not converge."""


class OutOfDomainError(GeometryError):
    """A point left the extended reference domain of a patch."""


class ZeroTangentError(GeometryError):
    pass


class TrimError(CutPatchError):
    pass


class OrientationError(TrimError):
    """A loop or rule has the wrong orientation (negative signed area)."""


class TrimFileError(TrimError):
    pass


class MeshError(CutPatchError):
    pass


class EmptyDomainError(MeshError):
    pass


class QuadratureError(CutPatchError):
    pass


class UnsupportedOrderError(QuadratureError):
    pass


class BasisError(CutPatchError):
    pass


class OrderExceededError(BasisError):
    pass


class AssemblyError(CutPatchError):
    pass


class BoundaryOverlapError(AssemblyError):
    """A boundary curve was declared both Dirichlet and Neumann."""


class SolverError(CutPatchError):
    pass


class SingularSystemError(SolverError):
    pass


class ConvergenceError(SolverError):
    pass


class KernelDimensionError(SolverError):
    """More near-zero eigenvalues than the declared kernel dimension."""


class ConfigError(CutPatchError, ValueError):
    pass


class InsufficientDataError(CutPatchError, ValueError):
    """Fewer than two error reports with distinct mesh sizes."""


class StudyError(CutPatchError):
    """An acceptance check failed in ``--check`` mode."""


class DegenerateCutWarning(UserWarning):
    """A cell intersection was so small it was treated as empty."""


@contextmanager
def handle_study_errors(row):
    """Record a failure inside one study row instead of aborting the study.

    The ``row`` dict gets an ``error`` entry with the exception message when a
    ``CutPatchError`` or a ``numpy.linalg.LinAlgError`` escapes the block.
    Anything else is a bug and propagates.

    Example:
        >>> row = {}
        >>> with handle_study_errors(row):
        ...     raise SingularSystemError("matrix is singular")
        >>> row["error"]
        'SingularSystemError: matrix is singular'
    """
    try:
        yield row
    except (CutPatchError, np.linalg.LinAlgError) as e:
        row["error"] = f"{type(e).__name__}: {e}"
        logger.warning("study row failed: %s", row["error"])
