"""Tests for sparse storage, solvers and condition estimates."""
import numpy as np
import pytest
import scipy.sparse as sp

from cutpatch.linalg import SparseSym, condition_estimate, solve_cg, solve_direct, solve_saddle
from cutpatch.utils.errors import ConvergenceError, KernelDimensionError, SingularSystemError


def _random_spd(rng, n, lo=1.0, hi=100.0):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return (q * np.geomspace(lo, hi, n)) @ q.T


def _path_laplacian(n):
    main = np.full(n, 2.0)
    main[[0, -1]] = 1.0
    return sp.diags([main, -np.ones(n - 1), -np.ones(n - 1)], [0, -1, 1], format="csr")


class TestSparseSym:
    def test_from_triplets_sums_duplicates(self):
        A = SparseSym.from_triplets([0, 0, 1, 0], [0, 0, 1, 1], [1.0, 2.0, 5.0, 0.0], 2)
        np.testing.assert_allclose(A.toarray(), [[3.0, 0.0], [0.0, 5.0]])
        assert A.matrix.nnz == 2

    def test_arithmetic(self):
        A = SparseSym.from_triplets([0, 1], [0, 1], [1.0, 2.0], 2)
        B = A + 2 * A
        np.testing.assert_allclose(B.toarray(), np.diag([3.0, 6.0]))
        np.testing.assert_allclose(A @ np.ones(2), [1.0, 2.0])
        assert B.n == 2 and B.shape == (2, 2)

    def test_symmetry(self):
        A = SparseSym.from_triplets([0, 1, 0], [1, 0, 0], [1.0, 1.0, 2.0], 2)
        assert A.is_symmetric()
        B = SparseSym.from_triplets([0, 1, 0], [1, 0, 0], [1.0, 1.1, 2.0], 2)
        assert not B.is_symmetric()
        assert B.symmetry_defect() == pytest.approx(0.05)


class TestConditionEstimate:
    def test_identity(self):
        assert condition_estimate(sp.identity(5)) == pytest.approx(1.0)

    def test_diagonal(self):
        assert condition_estimate(sp.diags([1.0, 2.0, 4.0])) == pytest.approx(4.0)

    def test_kernel_excluded(self):
        assert condition_estimate(sp.diags([0.0, 1.0, 10.0]), exclude_kernel_dim=1) == pytest.approx(10.0)

    def test_kernel_mismatch(self):
        with pytest.raises(KernelDimensionError):
            condition_estimate(sp.diags([0.0, 0.0, 1.0]), exclude_kernel_dim=1)

    def test_scale_invariance(self, rng):
        A = _random_spd(rng, 30)
        assert condition_estimate(7.5 * A) == pytest.approx(condition_estimate(A), rel=1e-10)

    def test_lanczos_matches_dense(self, rng, monkeypatch):
        matrices = [sp.csr_matrix(_random_spd(rng, 500, 1.0, hi)) for hi in (10.0, 100.0, 1000.0)]
        dense = [condition_estimate(A) for A in matrices]
        monkeypatch.setattr("cutpatch.linalg.sparse.DENSE_LIMIT", 10)
        for A, expected in zip(matrices, dense):
            assert condition_estimate(A) == pytest.approx(expected, rel=0.05)

    def test_lanczos_with_kernel(self, monkeypatch):
        A = _path_laplacian(100)
        expected = condition_estimate(A, exclude_kernel_dim=1)
        monkeypatch.setattr("cutpatch.linalg.sparse.DENSE_LIMIT", 10)
        assert condition_estimate(A, exclude_kernel_dim=1) == pytest.approx(expected, rel=0.05)


class TestSolvers:
    def test_direct(self, rng):
        A = _random_spd(rng, 50)
        x = rng.normal(size=50)
        np.testing.assert_allclose(solve_direct(sp.csr_matrix(A), A @ x), x, rtol=1e-10)

    def test_direct_singular(self):
        with pytest.raises(SingularSystemError):
            solve_direct(sp.diags([1.0, 0.0]), np.ones(2))

    def test_cg(self, rng):
        A = _random_spd(rng, 50)
        x = rng.normal(size=50)
        np.testing.assert_allclose(solve_cg(sp.csr_matrix(A), A @ x), x, rtol=1e-8)

    def test_cg_zero_rhs(self):
        np.testing.assert_array_equal(solve_cg(sp.identity(3), np.zeros(3)), np.zeros(3))

    def test_cg_not_converged(self, rng):
        A = sp.csr_matrix(_random_spd(rng, 50))
        with pytest.raises(ConvergenceError):
            solve_cg(A, rng.normal(size=50), maxiter=1)

    def test_saddle(self):
        u, lam = solve_saddle(sp.identity(2), np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        np.testing.assert_allclose(u, [0.0, 1.0], atol=1e-15)
        assert lam == pytest.approx(0.0, abs=1e-15)

    def test_saddle_iterative_matches_direct(self, rng):
        A = _path_laplacian(30)
        c = rng.random(30) + 0.5
        b = rng.normal(size=30)
        u_direct, lam_direct = solve_saddle(A, c, b, iterative=False)
        u_cg, lam_cg = solve_saddle(A, c, b, iterative=True)
        np.testing.assert_allclose(u_cg, u_direct, atol=1e-8)
        assert lam_cg == pytest.approx(lam_direct, rel=1e-8)
        assert c @ u_direct == pytest.approx(0.0, abs=1e-10)
        np.testing.assert_allclose(A @ u_direct + lam_direct * c, b, atol=1e-10)
