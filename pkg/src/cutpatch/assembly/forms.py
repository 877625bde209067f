"""Assembly of the stabilized Nitsche system in reference coordinates.

Bulk terms carry the metric (G^{-1} and sqrt(det G)); interface and boundary
terms use the metric curve measure and conormal; the ghost penalty works with
Euclidean normal derivatives on the faces of the reference grid.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..basis.lagrange import eval_gradients, eval_shape
from ..geometry.metric import curve_measure, metric_at, metric_normal
from ..linalg.sparse import SparseSym, solve_cg, solve_direct, solve_saddle
from ..quadrature.gauss import gauss1d
from ..quadrature.interface import boundary_partition
from ..utils.errors import AssemblyError

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10


class _Triplets:
    def __init__(self, n):
        self.n = n
        self.rows, self.cols, self.vals = [], [], []

    def add(self, dofs, blocks):
        """Scatter dense blocks (C, m, m) onto dof lists (C, m)."""
        dofs = np.asarray(dofs)
        m = dofs.shape[-1]
        self.rows.append(np.repeat(dofs, m, axis=-1).ravel())
        self.cols.append(np.tile(dofs, (1, m)).ravel())
        self.vals.append(np.asarray(blocks).ravel())

    def matrix(self):
        if not self.rows:
            return SparseSym.from_triplets([], [], [], self.n)
        return SparseSym.from_triplets(np.concatenate(self.rows), np.concatenate(self.cols),
                                       np.concatenate(self.vals), self.n)


def _outward(tangent):
    """Right-hand unit normal; outward for counter-clockwise loops."""
    nu = np.stack([tangent[..., 1], -tangent[..., 0]], axis=-1)
    return nu / np.linalg.norm(nu, axis=-1, keepdims=True)


def cell_dofs(disc, patch, cells):
    return np.stack([disc.dofmap.dofs(patch, c) for c in cells])


def batch_local(disc, cells, points):
    return points / disc.h - np.asarray(cells, dtype=float)[:, None, :]


def assemble_bulk(disc, patch, load=None):
    """Stiffness, load and constraint contributions of one patch.

    Returns:
        (K, b, c): stiffness ``SparseSym`` and the load and mean-value vectors
    """
    pmap = disc.surface.patches[patch].map
    trip = _Triplets(disc.n_dofs)
    b = np.zeros(disc.n_dofs)
    c = np.zeros(disc.n_dofs)
    for cells, points, weights in disc.cell_batches(patch):
        local = batch_local(disc, cells, points)
        phi = eval_shape(disc.shapes, local)
        grad = eval_gradients(disc.shapes, local, disc.h)
        metric = metric_at(pmap, points)
        wd = weights * metric.sqrt_detG
        dofs = cell_dofs(disc, patch, cells)
        trip.add(dofs, np.einsum("cq,cqak,cqkl,cqbl->cab", wd, grad, metric.Ginv, grad))
        np.add.at(c, dofs, np.einsum("cq,cqa->ca", wd, phi))
        if load is not None:
            f = load(pmap.eval(points))
            np.add.at(b, dofs, np.einsum("cq,cq,cqa->ca", wd, f, phi))
    return trip.matrix(), b, c


def assemble_mass(disc):
    """Mass matrix (phi_a, phi_b) over the surface."""
    trip = _Triplets(disc.n_dofs)
    for patch, patch_obj in enumerate(disc.surface.patches):
        for cells, points, weights in disc.cell_batches(patch):
            phi = eval_shape(disc.shapes, batch_local(disc, cells, points))
            wd = weights * metric_at(patch_obj.map, points).sqrt_detG
            trip.add(cell_dofs(disc, patch, cells), np.einsum("cq,cqa,cqb->cab", wd, phi, phi))
    return trip.matrix()


@dataclass
class CurveTrace:
    """Basis traces on a batch of curve pieces of one patch: shapes (P, q, ...)."""

    dofs: np.ndarray
    phi: np.ndarray
    flux: np.ndarray
    ds: np.ndarray
    conormal: np.ndarray
    points: np.ndarray


def curve_trace(disc, patch, cells, x, tangent, weights):
    """Values and conormal fluxes of the basis at points ``x`` on a patch curve."""
    pmap = disc.surface.patches[patch].map
    metric = metric_at(pmap, x)
    n_ref = metric_normal(metric, _outward(tangent))
    local = batch_local(disc, cells, x)
    grad = eval_gradients(disc.shapes, local, disc.h)
    return CurveTrace(
        dofs=cell_dofs(disc, patch, cells),
        phi=eval_shape(disc.shapes, local),
        flux=np.einsum("pqak,pqk->pqa", grad, n_ref),
        ds=weights * curve_measure(metric, tangent),
        conormal=np.einsum("pqmk,pqk->pqm", metric.jac, n_ref),
        points=x,
    )


def interface_traces(disc, k):
    """Traces on both sides of interface ``k``; quadrature weights come from side i."""
    iface = disc.surface.interfaces[k]
    pieces = disc.interface_pieces[k]
    seg_i = disc.surface.patches[iface.i].side(iface.side_i)
    seg_j = disc.surface.patches[iface.j].side(iface.side_j)
    params = np.stack([pc.params for pc in pieces])
    weights = np.stack([pc.weights for pc in pieces])
    x_i = np.stack([pc.x_i for pc in pieces])
    x_j = np.stack([pc.x_j for pc in pieces])
    side_i = curve_trace(disc, iface.i, [pc.owner_cell_i for pc in pieces], x_i,
                         seg_i.derivative(params), weights)
    side_j = curve_trace(disc, iface.j, [pc.owner_cell_j for pc in pieces], x_j,
                         seg_j.derivative(seg_j.closest_parameter(x_j)), weights)
    return side_i, side_j


def _nitsche_block(ds, J, F, penalty):
    """-F J^T - J F^T + penalty J J^T integrated with ``ds``."""
    return (np.einsum("pq,pqa,pqb->pab", ds, penalty * J - F, J)
            - np.einsum("pq,pqa,pqb->pab", ds, J, F))


def assemble_interface(disc, k, params=None):
    """Symmetric Nitsche coupling across interface ``k`` (jump [v] = v_i - v_j)."""
    params = params or disc.params
    trip = _Triplets(disc.n_dofs)
    if not disc.interface_pieces[k]:
        raise AssemblyError(f"interface {disc.surface.interfaces[k]} has no quadrature pieces")
    ti, tj = interface_traces(disc, k)
    J = np.concatenate([ti.phi, -tj.phi], axis=-1)
    F = 0.5 * np.concatenate([ti.flux, -tj.flux], axis=-1)
    trip.add(np.concatenate([ti.dofs, tj.dofs], axis=-1), _nitsche_block(ti.ds, J, F, params.beta / disc.h))
    return trip.matrix()


def face_matrix(shapes, h, axis, gammas):
    """Ghost-penalty block of one face, dofs ordered (minus cell, plus cell)."""
    g = gauss1d(shapes.p + 1)
    t = g.points
    if axis == 1:
        minus = np.stack([np.ones_like(t), t], axis=1)
        plus = np.stack([np.zeros_like(t), t], axis=1)
    else:
        minus = np.stack([t, np.ones_like(t)], axis=1)
        plus = np.stack([t, np.zeros_like(t)], axis=1)
    block = np.zeros((2 * shapes.size, 2 * shapes.size))
    for k in range(1, shapes.p + 1):
        deriv = (k, 0) if axis == 1 else (0, k)
        J = np.concatenate([eval_shape(shapes, minus, deriv, h), -eval_shape(shapes, plus, deriv, h)], axis=1)
        block += gammas[k - 1] * h ** (2 * k - 1) * np.einsum("q,qa,qb->ab", h * g.weights, J, J)
    return block


def assemble_ghost_penalty(disc, patch, params=None):
    """Face-normal derivative jumps of orders 1..p on the stabilization faces of ``patch``."""
    params = params or disc.params
    gammas = params.gammas(disc.p)
    trip = _Triplets(disc.n_dofs)
    mesh = disc.meshes[patch]
    for axis in (1, 2):
        faces = [f for f in mesh.stab_faces if f.normal_axis == axis]
        if not faces:
            continue
        block = face_matrix(disc.shapes, disc.h, axis, gammas)
        dofs = np.stack([np.concatenate([disc.dofmap.dofs(patch, f.cell_minus), disc.dofmap.dofs(patch, f.cell_plus)])
                         for f in faces])
        trip.add(dofs, np.broadcast_to(block, (len(faces),) + block.shape))
    return trip.matrix()


def boundary_traces(disc, edge):
    """Traces on a boundary edge; edges without declared data are partitioned on demand."""
    seg = disc.surface.patches[edge.patch].side(edge.side)
    pieces = disc.boundary_pieces.get(edge)
    if pieces is None:
        pieces = boundary_partition([seg], disc.meshes[edge.patch], disc.params.curve_points(disc.p))
    params = np.stack([pc.params for pc in pieces])
    return curve_trace(disc, edge.patch, [pc.owner_cell_i for pc in pieces],
                       np.stack([pc.x_i for pc in pieces]), seg.derivative(params),
                       np.stack([pc.weights for pc in pieces]))


def assemble_boundary(disc, params=None):
    """Nitsche Dirichlet terms and Neumann loads on the declared boundary edges.

    Returns:
        (K, b)
    """
    params = params or disc.params
    spec = disc.boundary
    penalty = params.beta / disc.h
    trip = _Triplets(disc.n_dofs)
    b = np.zeros(disc.n_dofs)
    dirichlet = set(spec.dirichlet)
    for edge in disc.boundary_pieces:
        tr = boundary_traces(disc, edge)
        X = disc.surface.patches[edge.patch].map.eval(tr.points)
        if edge in dirichlet:
            trip.add(tr.dofs, _nitsche_block(tr.ds, tr.phi, tr.flux, penalty))
            if spec.dirichlet_data is not None:
                g = spec.dirichlet_data(X)
                np.add.at(b, tr.dofs, np.einsum("pq,pq,pqa->pa", tr.ds, g, penalty * tr.phi - tr.flux))
        elif spec.neumann_data is not None:
            g = spec.neumann_data(X, tr.conormal)
            np.add.at(b, tr.dofs, np.einsum("pq,pq,pqa->pa", tr.ds, g, tr.phi))
    return trip.matrix(), b


def green_terms(disc, u, gradient, load):
    """Both sides of the Green identity for a smooth v and the discrete u_h.

    ``(grad v, grad u_h) = (-Laplace-Beltrami v, u_h) + sum_i (n_i . grad v, u_h)_{boundary of patch i}``

    ``v`` enters through its ambient ``gradient`` and ``load`` = -Laplace-Beltrami v,
    so the residual only carries quadrature error; it vanishes to round-off when
    all integrands are polynomials the rules integrate exactly.

    Returns:
        dict with ``bulk``, ``volume``, ``boundary`` and ``residual`` = bulk - volume - boundary
    """
    u = np.asarray(u, dtype=float)
    bulk, volume, boundary = 0.0, 0.0, 0.0
    for patch, obj in enumerate(disc.surface.patches):
        for cells, points, weights in disc.cell_batches(patch):
            local = batch_local(disc, cells, points)
            coeffs = u[cell_dofs(disc, patch, cells)]
            metric = metric_at(obj.map, points)
            wd = weights * metric.sqrt_detG
            X = obj.map.eval(points)
            grad_v = np.einsum("cqmk,cqm->cqk", metric.jac, gradient(X))
            grad_u = np.einsum("cqak,ca->cqk", eval_gradients(disc.shapes, local, disc.h), coeffs)
            u_h = np.einsum("cqa,ca->cq", eval_shape(disc.shapes, local), coeffs)
            bulk += float(np.sum(wd * np.einsum("cqk,cqkl,cql->cq", grad_v, metric.Ginv, grad_u)))
            volume += float(np.sum(wd * load(X) * u_h))

    def flux_times_trace(patch, tr):
        X = disc.surface.patches[patch].map.eval(tr.points)
        return np.einsum("pqm,pqm->pq", tr.conormal, gradient(X)) * np.einsum("pqa,pa->pq", tr.phi, u[tr.dofs])

    for k, iface in enumerate(disc.surface.interfaces):
        ti, tj = interface_traces(disc, k)
        boundary += float(np.sum(ti.ds * (flux_times_trace(iface.i, ti) + flux_times_trace(iface.j, tj))))
    for edge in disc.surface.boundary:
        tr = boundary_traces(disc, edge)
        boundary += float(np.sum(tr.ds * flux_times_trace(edge.patch, tr)))
    residual = bulk - volume - boundary
    logger.debug("Green identity residual %.2e (bulk %.3e)", residual, bulk)
    return {"bulk": bulk, "volume": volume, "boundary": boundary, "residual": residual}


@dataclass
class System:
    """Assembled operator A_h, load b and mean-value constraint c.

    ``parts`` keeps the bulk, interface, ghost-penalty and boundary matrices.
    """

    A: SparseSym
    b: np.ndarray
    c: np.ndarray
    parts: Dict[str, SparseSym] = field(default_factory=dict)
    constrained: bool = True

    @property
    def n(self):
        return self.A.n


def assemble_system(disc, load=None, params=None):
    """Assemble all terms; the system is constrained unless Dirichlet edges are present."""
    params = params or disc.params
    n = disc.n_dofs
    zero = SparseSym.from_triplets([], [], [], n)
    parts = {"bulk": zero, "interface": zero, "ghost": zero, "boundary": zero}
    b = np.zeros(n)
    c = np.zeros(n)

    start = time.perf_counter()
    for patch in range(len(disc.surface.patches)):
        K, bp, cp = assemble_bulk(disc, patch, load)
        parts["bulk"] = parts["bulk"] + K
        parts["ghost"] = parts["ghost"] + assemble_ghost_penalty(disc, patch, params)
        b += bp
        c += cp
    logger.debug("bulk and ghost-penalty assembly: %.3fs", time.perf_counter() - start)

    start = time.perf_counter()
    for k in range(len(disc.surface.interfaces)):
        parts["interface"] = parts["interface"] + assemble_interface(disc, k, params)
    if disc.boundary_pieces:
        K, bb = assemble_boundary(disc, params)
        parts["boundary"] = K
        b += bb
    logger.debug("interface and boundary assembly: %.3fs", time.perf_counter() - start)

    A = parts["bulk"] + parts["interface"] + parts["ghost"] + parts["boundary"]
    logger.debug("symmetry defect %.2e", A.symmetry_defect())
    return System(A, b, c, parts, constrained=not disc.boundary.dirichlet)


@dataclass
class Solution:
    u: np.ndarray
    multiplier: Optional[float]
    residual: float
    mean: float


def solve(system, constrained=None, iterative=None):
    """Solve the assembled system, with the mean-value multiplier when constrained.

    The relative residual of the full (bordered) system is reported in the
    returned :class:`Solution` and logged when it exceeds 1e-10.
    """
    if constrained is None:
        constrained = system.constrained
    A = system.A.matrix
    if constrained:
        u, lam = solve_saddle(A, system.c, system.b, iterative=iterative)
        res = A @ u + lam * system.c - system.b
    else:
        u = solve_cg(A, system.b) if iterative else solve_direct(A, system.b)
        lam = None
        res = A @ u - system.b
    nb = np.linalg.norm(system.b)
    residual = float(np.linalg.norm(res) / (nb if nb > 0 else 1.0))
    mean = float(system.c @ u)
    if residual > RESIDUAL_TOL:
        logger.warning("solve residual %.2e above %.0e", residual, RESIDUAL_TOL)
    return Solution(u, lam, residual, mean)


def write_triplets(A, path):
    """Write the nonzeros of ``A`` as ``row col value`` lines (0-based)."""
    m = (A.matrix if isinstance(A, SparseSym) else A).tocoo()
    with open(path, "w") as f:
        f.write(f"# {m.shape[0]} {m.shape[1]} {m.nnz}\n")
        for r, c, v in zip(m.row, m.col, m.data):
            f.write(f"{r} {c} {v!r}\n")
