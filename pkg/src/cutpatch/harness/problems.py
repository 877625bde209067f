"""Model problems with manufactured or analytic solutions."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..assembly.discretization import BoundarySpec
from ..geometry import surfaces
from ..geometry.metric import RefFunction, laplace_beltrami_ref, pullback
from ..geometry.surfaces import BoundaryEdge
from ..utils.errors import ConfigError, StudyError

logger = logging.getLogger(__name__)

TORUS_r = 0.6
TORUS_R = 1.0


@dataclass
class ModelProblem:
    """Surface, exact solution u, load f = -Laplace-Beltrami u and boundary setup.

    ``value``, ``gradient`` and ``load`` act on ambient points of shape
    ``(..., 3)``; ``gradient`` only needs to be correct in tangent directions.
    """

    name: str
    make_surface: Callable
    value: Callable
    gradient: Callable
    load: Callable
    hessian: Optional[Callable] = None
    reference: Optional[Callable] = None
    boundary: Optional[Callable] = None
    exact_in_space: bool = False
    default_angles: Optional[tuple] = field(default=None)

    def surface(self, angles=None, scale=surfaces.DEFAULT_SCALE):
        angles = self.default_angles if angles is None else angles
        return self.make_surface(angles=angles, scale=scale)

    def boundary_spec(self, surface):
        if self.boundary is None:
            return BoundarySpec()
        return self.boundary(surface)

    def reference_solution(self, patch_map):
        """u o F with reference derivatives, for Laplace-Beltrami checks."""
        if self.reference is not None:
            return self.reference(patch_map)
        return pullback(patch_map, self.value, self.gradient, self.hessian)


# sphere: u = 3x^2 y - y^3 is a degree-3 spherical harmonic, so -Laplace u = 12 u

def _sphere_u(X):
    x, y = X[..., 0], X[..., 1]
    return 3 * x**2 * y - y**3


def _sphere_grad(X):
    x, y = X[..., 0], X[..., 1]
    return np.stack([6 * x * y, 3 * x**2 - 3 * y**2, np.zeros_like(x)], axis=-1)


def _sphere_hess(X):
    x, y = X[..., 0], X[..., 1]
    z = np.zeros_like(x)
    return np.stack([
        np.stack([6 * y, 6 * x, z], axis=-1),
        np.stack([6 * x, -6 * y, z], axis=-1),
        np.stack([z, z, z], axis=-1),
    ], axis=-2)


def _sphere_f(X):
    return 12.0 * _sphere_u(X)


# torus: u = sin(3 phi) cos(3 theta + phi) in toroidal angles

def torus_angles(X, R=TORUS_R):
    x, y, z = X[..., 0], X[..., 1], X[..., 2]
    return np.arctan2(z, np.hypot(x, y) - R), np.arctan2(y, x)


def _torus_derivatives(theta, phi):
    s3, c3 = np.sin(3 * phi), np.cos(3 * phi)
    sa, ca = np.sin(3 * theta + phi), np.cos(3 * theta + phi)
    u = s3 * ca
    u_t = -3 * s3 * sa
    u_p = 3 * c3 * ca - s3 * sa
    u_tt = -9 * u
    u_tp = -9 * c3 * sa - 3 * s3 * ca
    u_pp = -10 * s3 * ca - 6 * c3 * sa
    return u, u_t, u_p, u_tt, u_tp, u_pp


def _torus_u(X):
    return _torus_derivatives(*torus_angles(X))[0]


def _torus_grad(X, r=TORUS_r, R=TORUS_R):
    theta, phi = torus_angles(X, R)
    _, u_t, u_p, *_ = _torus_derivatives(theta, phi)
    rho = R + r * np.cos(theta)
    x_t = np.stack([-r * np.sin(theta) * np.cos(phi), -r * np.sin(theta) * np.sin(phi), r * np.cos(theta)], axis=-1)
    x_p = np.stack([-rho * np.sin(phi), rho * np.cos(phi), np.zeros_like(phi)], axis=-1)
    return (u_t / r**2)[..., None] * x_t + (u_p / rho**2)[..., None] * x_p


def _torus_f(X, r=TORUS_r, R=TORUS_R):
    theta, phi = torus_angles(X, R)
    _, u_t, _, u_tt, _, u_pp = _torus_derivatives(theta, phi)
    rho = R + r * np.cos(theta)
    lap = u_tt / r**2 - np.sin(theta) / (r * rho) * u_t + u_pp / rho**2
    return -lap


def _torus_reference(patch_map):
    """u in reference coordinates through the chart's affine angle window."""
    chart = patch_map.chart
    # d(theta, phi)/dx = diag(dtheta, dphi) @ placement.linear
    A = np.diag([chart.dtheta, chart.dphi]) @ patch_map.placement.linear

    def angles(x):
        return chart.angles(patch_map.placement.inverse(x))

    def value(x):
        return _torus_derivatives(*angles(x))[0]

    def gradient(x):
        _, u_t, u_p, *_ = _torus_derivatives(*angles(x))
        return np.stack([u_t, u_p], axis=-1) @ A

    def hessian(x):
        _, _, _, u_tt, u_tp, u_pp = _torus_derivatives(*angles(x))
        H = np.stack([np.stack([u_tt, u_tp], axis=-1), np.stack([u_tp, u_pp], axis=-1)], axis=-2)
        return np.einsum("ka,...kl,lb->...ab", A, H, A)

    return RefFunction(value, gradient, hessian)


# flat problems: polynomial solutions reproduced exactly by Q_p

def _flat2_problem(p):
    def P(x, k=0):
        return [1 + x + 2 * x**p, 1 + 2 * p * x ** (p - 1), 2 * p * (p - 1) * x ** max(p - 2, 0)][k]

    def Q(y, k=0):
        return [2 - y + 3 * y**p, -1 + 3 * p * y ** (p - 1), 3 * p * (p - 1) * y ** max(p - 2, 0)][k]

    def value(X):
        return P(X[..., 0]) * Q(X[..., 1])

    def gradient(X):
        x, y = X[..., 0], X[..., 1]
        return np.stack([P(x, 1) * Q(y), P(x) * Q(y, 1), np.zeros_like(x)], axis=-1)

    def load(X):
        x, y = X[..., 0], X[..., 1]
        return -(P(x, 2) * Q(y) + P(x) * Q(y, 2))

    return value, gradient, load


def _linear_x(X):
    return X[..., 0]


def _linear_x_grad(X):
    g = np.zeros(X.shape)
    g[..., 0] = 1.0
    return g


def _zero(X):
    return np.zeros(X.shape[:-1])


def _flux(gradient):
    def neumann(X, n):
        return np.einsum("...m,...m->...", gradient(X), n)
    return neumann


def _all_dirichlet(value):
    def boundary(surface):
        return BoundarySpec(dirichlet=list(surface.boundary), dirichlet_data=value)
    return boundary


def _flat_mixed(surface):
    # Dirichlet on the left and right sides, Neumann on bottom and top
    dirichlet = [BoundaryEdge(0, 1), BoundaryEdge(0, 3)]
    neumann = [BoundaryEdge(0, 0), BoundaryEdge(0, 2)]
    return BoundarySpec(dirichlet, neumann, _linear_x, _flux(_linear_x_grad))


def _cap_mixed(surface):
    # Dirichlet where the cap boundary lies on the +x or +y face
    dirichlet = [e for e in surface.boundary if surface.patches[e.patch].name in ("+x", "+y")]
    neumann = [e for e in surface.boundary if e not in dirichlet]
    return BoundarySpec(dirichlet, neumann, _sphere_u, _flux(_sphere_grad))


PROBLEM_NAMES = ("sphere", "torus", "flat2", "flat", "flat_mixed", "sphere_cap")


def get_problem(name, p=1):
    """Model problem by name; ``p`` selects the polynomial solution of ``flat2``.

    Raises:
        ConfigError: for unknown names
    """
    if name == "sphere":
        return ModelProblem("sphere", surfaces.sphere, _sphere_u, _sphere_grad, _sphere_f, hessian=_sphere_hess)
    if name == "torus":
        return ModelProblem("torus", surfaces.torus, _torus_u, _torus_grad, _torus_f, reference=_torus_reference)
    if name == "flat2":
        value, gradient, load = _flat2_problem(p)
        return ModelProblem("flat2", surfaces.flat2, value, gradient, load,
                            boundary=_all_dirichlet(value), exact_in_space=True, default_angles=(0.0, 0.0))
    if name == "flat":
        return ModelProblem("flat", surfaces.flat, _linear_x, _linear_x_grad, _zero,
                            boundary=_all_dirichlet(_linear_x), exact_in_space=True)
    if name == "flat_mixed":
        return ModelProblem("flat_mixed", surfaces.flat, _linear_x, _linear_x_grad, _zero,
                            boundary=_flat_mixed, exact_in_space=True)
    if name == "sphere_cap":
        return ModelProblem("sphere_cap", surfaces.sphere_cap, _sphere_u, _sphere_grad, _sphere_f,
                            hessian=_sphere_hess, boundary=_cap_mixed)
    raise ConfigError(f"unknown problem '{name}' (choose from {', '.join(PROBLEM_NAMES)})")


def verify_load(problem, surface, rng, samples=20, tol=1e-5):
    """Compare the load with -Laplace-Beltrami of the exact solution at random points.

    Returns:
        float: the largest relative deviation

    Raises:
        StudyError: if the deviation exceeds ``tol``
    """
    worst = 0.0
    for patch in surface.patches:
        x = patch.map.placement.forward(rng.random((samples, 2)))
        ref = problem.reference_solution(patch.map)
        lb = laplace_beltrami_ref(patch.map, x, ref)
        f = problem.load(patch.map.eval(x))
        dev = np.max(np.abs(f + lb) / np.maximum(1.0, np.abs(f)))
        worst = max(worst, float(dev))
    logger.info("load check for %s: max relative deviation %.2e", problem.name, worst)
    if worst > tol:
        raise StudyError(f"load of {problem.name} does not match -Laplace-Beltrami u (deviation {worst:.2e})")
    return worst
