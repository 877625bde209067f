"""Metric tensor and differential quantities in reference coordinates.

All functions broadcast over leading axes: a point argument of shape ``(..., 2)``
gives results with the same leading shape.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..utils.errors import (
    InversionError,
    OutOfDomainError,
    SingularJacobianError,
    ZeroTangentError,
)
from .maps import EXTENSION_WIDTH

logger = logging.getLogger(__name__)

SINGULAR_TOL = 1e-10
INVERT_TOL = 1e-12
INVERT_MAX_ITER = 50
FD_STEP = 1e-5


@dataclass(frozen=True)
class MetricData:
    """First fundamental form G = J^T J with its inverse and sqrt(det G)."""

    G: np.ndarray
    Ginv: np.ndarray
    sqrt_detG: np.ndarray
    jac: np.ndarray


@dataclass(frozen=True)
class RefFunction:
    """A scalar function given in reference coordinates with two derivatives."""

    value: Callable
    gradient: Callable
    hessian: Callable


def _check_jacobian(jac):
    smallest = np.linalg.svd(jac, compute_uv=False)[..., -1]
    if np.any(smallest < SINGULAR_TOL):
        raise SingularJacobianError(
            f"jacobian smallest singular value {np.min(smallest):.3e} below {SINGULAR_TOL:g}")


def metric_from_jacobian(jac):
    _check_jacobian(jac)
    G = np.einsum("...ma,...mb->...ab", jac, jac)
    Ginv = np.linalg.inv(G)
    sqrt_detG = np.sqrt(np.linalg.det(G))
    return MetricData(G=G, Ginv=Ginv, sqrt_detG=sqrt_detG, jac=jac)


def metric_at(patch_map, p):
    """Metric data of ``patch_map`` at reference point(s) ``p``.

    Raises:
        SingularJacobianError: if the jacobian is rank deficient at any point
    """
    return metric_from_jacobian(patch_map.jacobian(p))


def surface_gradient_ref(metric, grad_ref):
    """Coefficients G^{-1} grad_ref of the surface gradient in the jacobian basis."""
    grad_ref = np.asarray(grad_ref, dtype=float)
    return np.linalg.solve(metric.G, grad_ref[..., None])[..., 0]


def _metric_derivatives(jac, hess):
    # dG[..., a, b, k] = d_k g_ab
    half = np.einsum("...mak,...mb->...abk", hess, jac)
    return half + np.swapaxes(half, -3, -2)


def laplace_beltrami_ref(patch_map, p, u_hat):
    """Laplace-Beltrami operator of ``u_hat`` evaluated in reference coordinates.

    Computes |G|^{-1/2} div(|G|^{1/2} G^{-1} grad u) by the product rule, with
    metric derivatives taken from the exact map hessian.
    """
    metric = metric_at(patch_map, p)
    dG = _metric_derivatives(metric.jac, patch_map.hessian(p))
    Ginv = metric.Ginv
    grad_u = np.asarray(u_hat.gradient(p), dtype=float)
    hess_u = np.asarray(u_hat.hessian(p), dtype=float)

    trace = np.einsum("...ab,...bak->...k", Ginv, dG)
    dGinv = -np.einsum("...ac,...cdk,...db->...abk", Ginv, dG, Ginv)
    coef = 0.5 * np.einsum("...k,...kl->...l", trace, Ginv) + np.einsum("...klk->...l", dGinv)
    return np.einsum("...ab,...ab->...", Ginv, hess_u) + np.einsum("...l,...l->...", coef, grad_u)


def curve_measure(metric, tangent_ref):
    """Metric length sqrt(t^T G t) of a reference tangent vector."""
    t = np.asarray(tangent_ref, dtype=float)
    if np.any(np.linalg.norm(t, axis=-1) < 1e-300):
        raise ZeroTangentError("tangent vector must be nonzero")
    return np.sqrt(np.einsum("...a,...ab,...b->...", t, metric.G, t))


def metric_normal(metric, nu_ref):
    """Reference coordinates of the unit conormal, G^{-1} nu / ||G^{-1} nu||_G."""
    m = np.linalg.solve(metric.G, np.asarray(nu_ref, dtype=float)[..., None])[..., 0]
    norm = np.sqrt(np.einsum("...a,...ab,...b->...", m, metric.G, m))
    return m / norm[..., None]


def invert_map(patch_map, target, seed, max_iter=INVERT_MAX_ITER, tol=INVERT_TOL, width=EXTENSION_WIDTH):
    """Gauss-Newton inversion of ``patch_map`` at ambient point(s) ``target``.

    Minimizes ||F(x) - target|| from ``seed``; converged when the normal
    equation residual J^T r drops below ``tol``.

    Raises:
        InversionError: after ``max_iter`` iterations without convergence
        OutOfDomainError: if the result leaves the extended reference domain
    """
    target = np.asarray(target, dtype=float)
    x = np.array(np.broadcast_to(seed, target.shape[:-1] + (2,)), dtype=float)
    for iteration in range(max_iter):
        jac = patch_map.jacobian(x)
        res = patch_map.eval(x) - target
        grad = np.einsum("...ma,...m->...a", jac, res)
        scale = np.maximum(1.0, np.linalg.norm(jac, axis=(-2, -1)))
        if np.all(np.linalg.norm(grad, axis=-1) <= tol * scale):
            break
        normal = np.einsum("...ma,...mb->...ab", jac, jac)
        x = x - np.linalg.solve(normal, grad[..., None])[..., 0]
    else:
        raise InversionError(f"Gauss-Newton did not converge in {max_iter} iterations")
    logger.debug("map inversion converged after %d iterations", iteration)

    outside = patch_map.distance_outside(x)
    if np.any(outside > width):
        raise OutOfDomainError(f"inverted point {np.max(outside):.3g} outside the extended domain")
    return x


def metric_bounds(patch_map, samples=50):
    """Smallest and largest metric eigenvalue over a grid on the placed square."""
    t = (np.arange(samples) + 0.5) / samples
    y = np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1).reshape(-1, 2)
    x = patch_map.placement.forward(y)
    eig = np.linalg.eigvalsh(metric_at(patch_map, x).G)
    lo, hi = float(eig[:, 0].min()), float(eig[:, -1].max())
    logger.debug("metric eigenvalue bounds for %s: [%.4g, %.4g]", patch_map.name or "patch", lo, hi)
    return lo, hi


def pullback(patch_map, value, gradient, hessian=None):
    """Reference representation of an ambient function through ``patch_map``.

    ``gradient`` and ``hessian`` are ambient derivatives; the reference
    gradient is J^T grad u and the hessian J^T H J + sum_m d_m u H_F[m].
    Without ``hessian`` the reference hessian comes from central differences
    of the reference gradient with step ``FD_STEP``.
    """

    def ref_value(x):
        return value(patch_map.eval(x))

    def ref_gradient(x):
        return np.einsum("...ma,...m->...a", patch_map.jacobian(x), gradient(patch_map.eval(x)))

    def ref_hessian(x):
        if hessian is None:
            return _fd_hessian(ref_gradient, x)
        X = patch_map.eval(x)
        jac = patch_map.jacobian(x)
        amb = np.einsum("...ma,...mn,...nb->...ab", jac, hessian(X), jac)
        return amb + np.einsum("...m,...mab->...ab", gradient(X), patch_map.hessian(x))

    return RefFunction(ref_value, ref_gradient, ref_hessian)


def _fd_hessian(gradient, x):
    x = np.asarray(x, dtype=float)
    cols = []
    for b in range(2):
        e = np.zeros(2)
        e[b] = FD_STEP
        cols.append((gradient(x + e) - gradient(x - e)) / (2 * FD_STEP))
    H = np.stack(cols, axis=-1)
    return 0.5 * (H + np.swapaxes(H, -1, -2))
