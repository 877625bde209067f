"""Discretization errors in L2 and the mesh-dependent energy norm."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ..assembly.forms import batch_local, cell_dofs, boundary_traces, interface_traces
from ..basis.lagrange import eval_gradients, eval_shape
from ..geometry.metric import metric_at
from ..utils.errors import InsufficientDataError

logger = logging.getLogger(__name__)


@dataclass
class ErrorReport:
    n: int
    p: int
    h: float
    ndof: int
    err_L2: float
    err_energy: float
    kappa: Optional[float] = None
    wall_time: float = 0.0

    def as_row(self):
        return asdict(self)


def interpolate(disc, value):
    """Nodal interpolant of the ambient function ``value`` through every chart."""
    u = np.zeros(disc.n_dofs)
    for patch, obj in enumerate(disc.surface.patches):
        start, end = disc.dofmap.patch_range(patch)
        nodes = disc.dofmap.node_coordinates(patch, disc.h)
        u[start:end] = value(obj.map.eval(nodes))
    return u


def _bulk_errors(disc, u, value, gradient):
    l2, h1 = 0.0, 0.0
    u = np.asarray(u)
    for patch, obj in enumerate(disc.surface.patches):
        for cells, points, weights in disc.cell_batches(patch):
            local = batch_local(disc, cells, points)
            coeffs = u[cell_dofs(disc, patch, cells)]
            metric = metric_at(obj.map, points)
            wd = weights * metric.sqrt_detG
            X = obj.map.eval(points)
            e = value(X) - np.einsum("cqa,ca->cq", eval_shape(disc.shapes, local), coeffs)
            l2 += float(np.sum(wd * e**2))
            if gradient is not None:
                exact = np.einsum("cqmk,cqm->cqk", metric.jac, gradient(X))
                de = exact - np.einsum("cqak,ca->cqk", eval_gradients(disc.shapes, local, disc.h), coeffs)
                h1 += float(np.sum(wd * np.einsum("cqk,cqkl,cql->cq", de, metric.Ginv, de)))
    return l2, h1


def error_L2(disc, u, value):
    """L2 surface norm of value - u_h, integrated with the cut-cell rules."""
    return float(np.sqrt(_bulk_errors(disc, u, value, None)[0]))


def _trace_error(disc, trace, patch, u, value, gradient):
    X = disc.surface.patches[patch].map.eval(trace.points)
    coeffs = np.asarray(u)[trace.dofs]
    e = value(X) - np.einsum("pqa,pa->pq", trace.phi, coeffs)
    flux = np.einsum("pqm,pqm->pq", trace.conormal, gradient(X)) - np.einsum("pqa,pa->pq", trace.flux, coeffs)
    return e, flux


def energy_terms(disc, system, u, value, gradient):
    """Squared contributions to the energy error of value - u_h.

    Keys: ``gradient`` (patchwise), ``ghost`` (stabilization seminorm of the
    discrete error I u - u_h with the nodal interpolant I u), ``flux`` and
    ``jump`` (interfaces and Dirichlet edges).
    """
    u = np.asarray(u)
    _, grad_sq = _bulk_errors(disc, u, value, gradient)
    ghost = 0.0
    if "ghost" in system.parts:
        e_h = interpolate(disc, value) - u
        ghost = float(e_h @ (system.parts["ghost"] @ e_h))
    flux_sq, jump_sq = 0.0, 0.0
    h = disc.h
    for k, iface in enumerate(disc.surface.interfaces):
        ti, tj = interface_traces(disc, k)
        ei, fi = _trace_error(disc, ti, iface.i, u, value, gradient)
        ej, fj = _trace_error(disc, tj, iface.j, u, value, gradient)
        flux_sq += h * float(np.sum(ti.ds * (0.5 * (fi - fj)) ** 2))
        jump_sq += float(np.sum(ti.ds * (ei - ej) ** 2)) / h
    for edge in disc.boundary.dirichlet:
        tr = boundary_traces(disc, edge)
        e, f = _trace_error(disc, tr, edge.patch, u, value, gradient)
        flux_sq += h * float(np.sum(tr.ds * f**2))
        jump_sq += float(np.sum(tr.ds * e**2)) / h
    return {"gradient": grad_sq, "ghost": ghost, "flux": flux_sq, "jump": jump_sq}


def error_energy(disc, system, u, value, gradient):
    terms = energy_terms(disc, system, u, value, gradient)
    logger.debug("energy error terms: %s", {k: f"{v:.3e}" for k, v in terms.items()})
    return float(np.sqrt(max(sum(terms.values()), 0.0)))


def eoc(reports, key="err_L2"):
    """Observed orders log(e_k / e_{k+1}) / log(h_k / h_{k+1}) between consecutive reports.

    Raises:
        InsufficientDataError: with fewer than two reports or repeated mesh sizes
    """
    if len(reports) < 2:
        raise InsufficientDataError("need at least two error reports")
    rates = []
    for a, b in zip(reports[:-1], reports[1:]):
        ea, eb = getattr(a, key), getattr(b, key)
        if a.h == b.h:
            raise InsufficientDataError(f"repeated mesh size h={a.h}")
        if not (ea > 0 and eb > 0):
            rates.append(float("nan"))
            continue
        rates.append(float(np.log(ea / eb) / np.log(a.h / b.h)))
    return rates
