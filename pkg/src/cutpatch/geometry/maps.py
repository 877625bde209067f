"""Patch maps from reference coordinates to ambient space.

A :class:`PatchMap` is a chart (unit square -> surface) composed with a
:class:`Placement`, the scaled rotation that positions the chart's unit square
inside the reference square [0,1]^2. Every evaluation accepts points with shape
``(..., 2)`` and broadcasts over the leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Evaluation is allowed this far (in reference units) outside the subdomain.
EXTENSION_WIDTH = 0.1


@dataclass(frozen=True)
class Placement:
    """Scaled rotation plus translation of the chart square about ``center``.

    ``forward`` maps chart coordinates y in [0,1]^2 to reference coordinates
    x = center + translation + scale * R(angle) (y - center).
    """

    angle: float = 0.0
    scale: float = 1.0
    translation: tuple = (0.0, 0.0)
    center: tuple = (0.5, 0.5)

    @property
    def rotation(self):
        c, s = np.cos(self.angle), np.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    @property
    def linear(self):
        """Jacobian of the inverse placement, d y / d x."""
        return self.rotation.T / self.scale

    def forward(self, y):
        y = np.asarray(y, dtype=float)
        c = np.asarray(self.center)
        return c + np.asarray(self.translation) + self.scale * (y - c) @ self.rotation.T

    def inverse(self, x):
        x = np.asarray(x, dtype=float)
        c = np.asarray(self.center)
        return c + (x - c - np.asarray(self.translation)) @ self.linear.T

    def distance_outside(self, x):
        """Euclidean distance from ``x`` to the placed square (0 inside)."""
        y = self.inverse(x)
        gap = np.maximum(np.maximum(-y, y - 1.0), 0.0)
        return self.scale * np.sqrt(np.sum(gap**2, axis=-1))


class FlatChart:
    """Affine embedding y -> origin + A y of the unit square in R^3."""

    def __init__(self, origin=(0.0, 0.0, 0.0), axes=((1.0, 0.0), (0.0, 1.0), (0.0, 0.0))):
        self.origin = np.asarray(origin, dtype=float)
        self.axes = np.asarray(axes, dtype=float)

    def eval(self, y):
        return self.origin + np.asarray(y, dtype=float) @ self.axes.T

    def jacobian(self, y):
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(self.axes, y.shape[:-1] + self.axes.shape).copy()

    def hessian(self, y):
        y = np.asarray(y, dtype=float)
        return np.zeros(y.shape[:-1] + (self.axes.shape[0], 2, 2))


class CubeFaceChart:
    """Radial projection of one face of the cube [-1,1]^3 onto the unit sphere.

    The face tangents are ordered so that e1 x e2 points away from the origin.
    """

    _FRAMES = {
        (0, 1): (1, 2), (0, -1): (2, 1),
        (1, 1): (2, 0), (1, -1): (0, 2),
        (2, 1): (0, 1), (2, -1): (1, 0),
    }

    def __init__(self, axis, sign):
        eye = np.eye(3)
        a, b = self._FRAMES[(axis, sign)]
        self.axis = axis
        self.sign = sign
        self.normal = sign * eye[axis]
        self.e1 = eye[a]
        self.e2 = eye[b]

    def _cube_point(self, y):
        y = np.asarray(y, dtype=float)
        return (self.normal + (2.0 * y[..., :1] - 1.0) * self.e1
                + (2.0 * y[..., 1:2] - 1.0) * self.e2)

    def eval(self, y):
        q = self._cube_point(y)
        return q / np.linalg.norm(q, axis=-1, keepdims=True)

    def jacobian(self, y):
        q = self._cube_point(y)
        r = np.linalg.norm(q, axis=-1)[..., None, None]
        dq = np.stack([2.0 * self.e1, 2.0 * self.e2], axis=-1)  # (3, 2)
        qdq = q @ dq  # (..., 2)
        return dq / r - q[..., :, None] * qdq[..., None, :] / r**3

    def hessian(self, y):
        q = self._cube_point(y)
        r = np.linalg.norm(q, axis=-1)[..., None, None, None]
        dq = np.stack([2.0 * self.e1, 2.0 * self.e2], axis=-1)
        qdq = q @ dq  # (..., 2)
        gram = dq.T @ dq  # (2, 2)
        hess = (
            - dq[:, :, None] * qdq[..., None, None, :] / r**3
            - dq[:, None, :] * qdq[..., None, :, None] / r**3
            - q[..., :, None, None] * gram / r**3
            + 3.0 * q[..., :, None, None] * (qdq[..., :, None] * qdq[..., None, :])[..., None, :, :] / r**5
        )
        return hess


class TorusChart:
    """Affine window of toroidal coordinates on the torus of radii ``r`` < ``R``.

    theta = theta0 + dtheta * y1 and phi = phi0 + dphi * y2, with
    x = ((R + r cos theta) cos phi, (R + r cos theta) sin phi, r sin theta).
    """

    def __init__(self, theta0=0.0, dtheta=2 * np.pi, phi0=0.0, dphi=2 * np.pi, r=0.6, R=1.0):
        self.theta0, self.dtheta = theta0, dtheta
        self.phi0, self.dphi = phi0, dphi
        self.r, self.R = r, R

    def angles(self, y):
        y = np.asarray(y, dtype=float)
        return self.theta0 + self.dtheta * y[..., 0], self.phi0 + self.dphi * y[..., 1]

    def eval(self, y):
        th, ph = self.angles(y)
        rho = self.R + self.r * np.cos(th)
        return np.stack([rho * np.cos(ph), rho * np.sin(ph), self.r * np.sin(th)], axis=-1)

    def jacobian(self, y):
        th, ph = self.angles(y)
        r = self.r
        rho = self.R + r * np.cos(th)
        x_th = np.stack([-r * np.sin(th) * np.cos(ph), -r * np.sin(th) * np.sin(ph), r * np.cos(th)], axis=-1)
        x_ph = np.stack([-rho * np.sin(ph), rho * np.cos(ph), np.zeros_like(th)], axis=-1)
        return np.stack([self.dtheta * x_th, self.dphi * x_ph], axis=-1)

    def hessian(self, y):
        th, ph = self.angles(y)
        r = self.r
        rho = self.R + r * np.cos(th)
        zero = np.zeros_like(th)
        x_tt = np.stack([-r * np.cos(th) * np.cos(ph), -r * np.cos(th) * np.sin(ph), -r * np.sin(th)], axis=-1)
        x_tp = np.stack([r * np.sin(th) * np.sin(ph), -r * np.sin(th) * np.cos(ph), zero], axis=-1)
        x_pp = np.stack([-rho * np.cos(ph), -rho * np.sin(ph), zero], axis=-1)
        dt, dp = self.dtheta, self.dphi
        row0 = np.stack([dt * dt * x_tt, dt * dp * x_tp], axis=-1)
        row1 = np.stack([dt * dp * x_tp, dp * dp * x_pp], axis=-1)
        return np.stack([row0, row1], axis=-2)


@dataclass(frozen=True)
class PatchMap:
    """Diffeomorphism F from reference coordinates to ambient space.

    F = chart o placement^{-1}; the jacobian and hessian include the constant
    linear factor of the inverse placement.
    """

    chart: object
    placement: Placement = field(default_factory=Placement)
    name: str = ""

    @property
    def dim(self):
        return int(np.asarray(self.chart.eval(np.full(2, 0.5))).shape[-1])

    def eval(self, x):
        return self.chart.eval(self.placement.inverse(x))

    def jacobian(self, x):
        return self.chart.jacobian(self.placement.inverse(x)) @ self.placement.linear

    def hessian(self, x):
        lin = self.placement.linear
        hess = self.chart.hessian(self.placement.inverse(x))
        return np.einsum("...mkl,ka,lb->...mab", hess, lin, lin)

    def distance_outside(self, x):
        """Distance from ``x`` to the map's placed square in reference units."""
        return self.placement.distance_outside(x)

    def in_extended_domain(self, x, width=EXTENSION_WIDTH):
        return self.distance_outside(x) <= width

    def with_placement(self, placement):
        return PatchMap(self.chart, placement, self.name)
