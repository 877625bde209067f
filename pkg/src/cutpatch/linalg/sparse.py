"""Sparse symmetric matrices, linear solves and condition numbers."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..utils.errors import ConvergenceError, KernelDimensionError, SingularSystemError, SolverError

logger = logging.getLogger(__name__)

DENSE_LIMIT = 4000
DIRECT_LIMIT = 200_000
CG_RTOL = 1e-12
KERNEL_TOL = 1e-12
LANCZOS_TOL = 1e-4


@dataclass
class SparseSym:
    """Symmetric N x N matrix in compressed sparse row form."""

    matrix: sp.csr_matrix

    @classmethod
    def from_triplets(cls, rows, cols, values, n):
        """Sum duplicate (row, col) entries and drop explicit zeros."""
        m = sp.coo_matrix((np.asarray(values, dtype=float), (np.asarray(rows), np.asarray(cols))),
                          shape=(n, n)).tocsr()
        m.sum_duplicates()
        m.eliminate_zeros()
        return cls(m)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def n(self):
        return self.matrix.shape[0]

    def __matmul__(self, other):
        return self.matrix @ other

    def __add__(self, other):
        return SparseSym(self.matrix + (other.matrix if isinstance(other, SparseSym) else other))

    def __mul__(self, scalar):
        return SparseSym(self.matrix * scalar)

    __rmul__ = __mul__

    def symmetry_defect(self):
        """max |A - A^T| relative to max |A|."""
        diff = self.matrix - self.matrix.T
        scale = abs(self.matrix).max() if self.matrix.nnz else 0.0
        if scale == 0.0:
            return 0.0
        return (abs(diff).max() if diff.nnz else 0.0) / scale

    def is_symmetric(self, tol=1e-10):
        return self.symmetry_defect() <= tol

    def toarray(self):
        return self.matrix.toarray()


def _as_sparse(A):
    return A.matrix if isinstance(A, SparseSym) else sp.csr_matrix(A)


def _relative_residual(A, x, b):
    nb = np.linalg.norm(b)
    return np.linalg.norm(A @ x - b) / (nb if nb > 0 else 1.0)


def solve_direct(A, b):
    """Sparse LU solve.

    Raises:
        SingularSystemError: if the factorization fails or produces non-finite values
    """
    A = _as_sparse(A).tocsc()
    try:
        with np.errstate(all="ignore"):
            x = spla.spsolve(A, b)
    except RuntimeError as e:
        raise SingularSystemError(f"sparse factorization failed: {e}") from e
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("sparse solve produced non-finite values (singular matrix)")
    logger.info("direct solve n=%d residual %.2e", A.shape[0], _relative_residual(A, x, b))
    return x


def _jacobi(A):
    d = A.diagonal()
    if np.any(d <= 0):
        raise SolverError("diagonal preconditioner needs a positive diagonal")
    return spla.LinearOperator(A.shape, matvec=lambda v: v / d)


def solve_cg(A, b, rtol=CG_RTOL, maxiter=None):
    """Diagonally preconditioned conjugate gradients.

    Raises:
        ConvergenceError: if the tolerance is not reached in ``maxiter`` (10 N) iterations
    """
    A = _as_sparse(A)
    n = A.shape[0]
    if np.linalg.norm(b) == 0.0:
        return np.zeros(n)
    x, info = spla.cg(A, b, rtol=rtol, atol=0.0, maxiter=maxiter or 10 * n, M=_jacobi(A))
    if info != 0:
        raise ConvergenceError(f"conjugate gradients stopped with info={info}, "
                               f"residual {_relative_residual(A, x, b):.2e}")
    logger.info("cg solve n=%d residual %.2e", n, _relative_residual(A, x, b))
    return x


def solve_saddle(A, c, b, iterative=None):
    """Solve [[A, c], [c^T, 0]] [u, lam] = [b, 0].

    The direct path factorizes the bordered matrix. The iterative path uses
    that A annihilates constants: with 1^T c != 0 it sets lam = 1^T b / 1^T c,
    runs CG on the consistent system A u = b - lam c and shifts u by a constant
    so that c^T u = 0.

    Returns:
        (u, lam)
    """
    A = _as_sparse(A)
    n = A.shape[0]
    c = np.asarray(c, dtype=float)
    if iterative is None:
        iterative = n > DIRECT_LIMIT
    if not iterative:
        K = sp.bmat([[A, sp.csr_matrix(c[:, None])], [sp.csr_matrix(c[None, :]), None]], format="csc")
        sol = solve_direct(K, np.concatenate([b, [0.0]]))
        return sol[:n], float(sol[n])

    ones = np.ones(n)
    denom = ones @ c
    if abs(denom) < 1e-300:
        raise SingularSystemError("constraint vector has zero sum")
    lam = float(ones @ b / denom)
    u = solve_cg(A, b - lam * c)
    u -= (c @ u) / denom * ones
    return u, lam


def _dense_eigenvalues(A):
    return scipy.linalg.eigh(_as_sparse(A).toarray(), eigvals_only=True)


def condition_estimate(A, exclude_kernel_dim=0):
    """Ratio of the largest eigenvalue to the smallest one above the kernel.

    Dense eigensolve up to 4000 unknowns, Lanczos (``eigsh``) beyond.

    Raises:
        KernelDimensionError: if more than ``exclude_kernel_dim`` eigenvalues
            are below 1e-12 of the largest
    """
    A = _as_sparse(A)
    n = A.shape[0]
    if n <= DENSE_LIMIT:
        eig = np.sort(_dense_eigenvalues(A))
    else:
        lmax = spla.eigsh(A, k=1, which="LA", tol=LANCZOS_TOL, return_eigenvectors=False)[0]
        small = spla.eigsh(A, k=exclude_kernel_dim + 1, sigma=-1e-8 * lmax, which="LM",
                           tol=LANCZOS_TOL, return_eigenvectors=False)
        logger.info("Lanczos condition estimate on n=%d", n)
        eig = np.sort(np.concatenate([small, [lmax]]))
    lmax = eig[-1]
    if lmax <= 0:
        raise SolverError("matrix has no positive eigenvalue")
    near_zero = int(np.sum(eig < KERNEL_TOL * lmax))
    if near_zero > exclude_kernel_dim:
        raise KernelDimensionError(
            f"{near_zero} eigenvalues below {KERNEL_TOL:g} * lambda_max, expected {exclude_kernel_dim}")
    lmin = eig[exclude_kernel_dim]
    return float(lmax / lmin)
