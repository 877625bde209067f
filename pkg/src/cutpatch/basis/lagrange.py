"""Tensor-product Lagrange shape functions on grid cells."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import polynomial as P

from ..utils.errors import BasisError, OrderExceededError

SUPPORTED_ORDERS = (1, 2, 3)


@dataclass(frozen=True)
class ShapeSet:
    """Q_p nodal basis on the unit cell with equispaced nodes.

    Local function a + (p + 1) b is the product of the 1D Lagrange polynomials
    of node a in x1 and node b in x2.
    """

    p: int

    def __post_init__(self):
        if self.p not in SUPPORTED_ORDERS:
            raise BasisError(f"polynomial order must be one of {SUPPORTED_ORDERS}, got {self.p}")

    @property
    def size(self):
        return (self.p + 1) ** 2

    @cached_property
    def nodes(self):
        return np.linspace(0.0, 1.0, self.p + 1)

    @cached_property
    def _coeffs(self):
        # column a holds the power-basis coefficients of the a-th Lagrange polynomial
        return np.linalg.inv(np.vander(self.nodes, increasing=True))

    def eval_1d(self, t, k=0):
        """k-th derivatives of the 1D basis at ``t``, shape ``t.shape + (p + 1,)``."""
        coeffs = self._coeffs
        if k:
            coeffs = P.polyder(coeffs, k) if k <= self.p else np.zeros((1, self.p + 1))
        return np.moveaxis(P.polyval(np.asarray(t, dtype=float), coeffs), 0, -1)

    def node_points(self):
        """Local coordinates of the (p+1)^2 nodes in basis order."""
        b, a = np.meshgrid(self.nodes, self.nodes, indexing="ij")
        return np.stack([a.ravel(), b.ravel()], axis=1)


def eval_shape(shapes, local, deriv=(0, 0), h=1.0):
    """Values of all basis functions (or a partial derivative) at cell-local points.

    Args:
        shapes: The :class:`ShapeSet`
        local: Points in cell-local coordinates, shape ``(..., 2)``
        deriv: Derivative orders ``(d1, d2)``
        h: Cell size; a derivative of total order k is scaled by ``h**-k``

    Returns:
        Array of shape ``(..., (p + 1)**2)``

    Raises:
        OrderExceededError: if ``d1 + d2 > p``
    """
    d1, d2 = deriv
    if d1 < 0 or d2 < 0 or d1 + d2 > shapes.p:
        raise OrderExceededError(f"derivative {deriv} exceeds order {shapes.p}")
    local = np.asarray(local, dtype=float)
    fx = shapes.eval_1d(local[..., 0], d1)
    fy = shapes.eval_1d(local[..., 1], d2)
    values = (fy[..., :, None] * fx[..., None, :]).reshape(local.shape[:-1] + (shapes.size,))
    return values * h ** -(d1 + d2)


def eval_gradients(shapes, local, h=1.0):
    """Reference gradients of all basis functions, shape ``(..., (p + 1)**2, 2)``."""
    return np.stack([eval_shape(shapes, local, (1, 0), h), eval_shape(shapes, local, (0, 1), h)], axis=-1)
