"""Tests for bulk, interface, ghost-penalty and boundary assembly."""
import numpy as np
import pytest

from cutpatch.assembly import (
    BoundarySpec,
    Discretization,
    FormParams,
    assemble_boundary,
    assemble_bulk,
    assemble_ghost_penalty,
    assemble_interface,
    assemble_mass,
    assemble_system,
    face_matrix,
    green_terms,
    solve,
    write_triplets,
)
from cutpatch.basis import ShapeSet
from cutpatch.geometry import sphere
from cutpatch.geometry.surfaces import BoundaryEdge
from cutpatch.harness.problems import get_problem
from cutpatch.norms import interpolate
from cutpatch.utils.errors import AssemblyError, BoundaryOverlapError


def _ones(X):
    return np.ones(X.shape[:-1])


@pytest.fixture
def sphere_system(sphere_disc):
    return assemble_system(sphere_disc, get_problem("sphere").load)


class TestParams:
    def test_defaults(self):
        params = FormParams()
        assert params.beta == 100.0
        assert params.gammas(3) == [1e-2] * 3
        assert params.f_degree(2) == 6
        assert params.curve_points(2) == 4

    def test_per_order_gamma(self):
        assert FormParams(gamma=(1.0, 0.5)).gammas(2) == [1.0, 0.5]
        with pytest.raises(AssemblyError):
            FormParams(gamma=(1.0, 0.5)).gammas(3)

    @pytest.mark.parametrize("kwargs", [{"beta": 0.0}, {"beta": -1.0}, {"gamma": (-1e-3,)}])
    def test_invalid(self, kwargs):
        with pytest.raises(AssemblyError):
            FormParams(**kwargs)

    def test_zero_gamma_allowed(self):
        assert FormParams(gamma=(0.0,)).gammas(1) == [0.0]


class TestBulk:
    def test_bilinear_stiffness(self, flat_surface):
        """Interior nodes of an unrotated flat patch see the standard Q1 stencil."""
        disc = Discretization(flat_surface, 4, 1)
        K, _, _ = assemble_bulk(disc, 0)
        A = K.toarray()
        node = disc.dofmap.nodes[0]
        center, right, corner = node[(2, 2)], node[(3, 2)], node[(3, 3)]
        assert A[center, center] == pytest.approx(8 / 3, abs=1e-12)
        assert A[center, right] == pytest.approx(-1 / 3, abs=1e-12)
        assert A[center, corner] == pytest.approx(-1 / 3, abs=1e-12)

    def test_row_sums_vanish(self, sphere_disc):
        for patch in range(len(sphere_disc.surface.patches)):
            K, _, _ = assemble_bulk(sphere_disc, patch)
            assert np.max(np.abs(K @ np.ones(sphere_disc.n_dofs))) < 1e-11 * np.max(np.abs(K.toarray()))
            assert K.is_symmetric()

    def test_sphere_area(self):
        disc = Discretization(sphere(), 8, 2)
        area = sum(assemble_bulk(disc, patch, _ones)[1].sum() for patch in range(6))
        assert area == pytest.approx(4 * np.pi, rel=1e-6)

    def test_mass_matrix(self, sphere_disc):
        M = assemble_mass(sphere_disc)
        c = sum(assemble_bulk(sphere_disc, patch)[2] for patch in range(6))
        ones = np.ones(sphere_disc.n_dofs)
        assert ones @ (M @ ones) == pytest.approx(c.sum(), rel=1e-12)
        assert M.is_symmetric()


class TestInterface:
    def test_constants_in_kernel(self, sphere_disc):
        ones = np.ones(sphere_disc.n_dofs)
        for k in range(len(sphere_disc.surface.interfaces)):
            K = assemble_interface(sphere_disc, k)
            assert K.is_symmetric()
            assert np.max(np.abs(K @ ones)) < 1e-9

    def test_linear_in_beta(self, sphere_disc):
        K1, K2, K3 = (assemble_interface(sphere_disc, 0, FormParams(beta=b)).toarray() for b in (100.0, 200.0, 300.0))
        assert np.max(np.abs(K2 - K1)) > 0
        np.testing.assert_allclose(K3 - 2 * K2 + K1, 0.0, atol=1e-9 * np.max(np.abs(K3)))


class TestGhostPenalty:
    def test_first_derivative_jump(self):
        """Unit jump of the normal derivative across a face of length 1/2 gives gamma/4."""
        gamma = 0.7
        block = face_matrix(ShapeSet(1), 0.5, 1, [gamma])
        v = np.zeros(8)
        v[[5, 7]] = 0.5
        assert v @ block @ v == pytest.approx(gamma / 4, rel=1e-13)

    def test_second_derivative_jump(self):
        """v = (x - x_F)^2 / 2 on the plus side only fires the second-order term."""
        h = 0.5
        block = face_matrix(ShapeSet(2), h, 1, [3.0, 1.0])
        v = np.zeros(18)
        for b in range(3):
            v[9 + 3 * b: 9 + 3 * b + 3] = 0.5 * h**2 * np.array([0.0, 0.25, 1.0])
        assert v @ block @ v == pytest.approx(h**4, rel=1e-12)

    def test_horizontal_face(self):
        block = face_matrix(ShapeSet(1), 0.5, 2, [1.0])
        v = np.zeros(8)
        v[[6, 7]] = 0.5
        assert v @ block @ v == pytest.approx(0.25, rel=1e-13)

    def test_polynomials_in_kernel(self, sphere_disc):
        disc = sphere_disc
        G = assemble_ghost_penalty(disc, 0)
        start, end = disc.dofmap.patch_range(0)
        x = disc.dofmap.node_coordinates(0, disc.h)
        v = np.zeros(disc.n_dofs)
        v[start:end] = 1 + x[:, 0] + 2 * x[:, 1] + 3 * x[:, 0] * x[:, 1]
        assert v @ (G @ v) < 1e-12 * (v @ v)
        assert G.is_symmetric()

    def test_zero_gamma(self, sphere_surface):
        disc = Discretization(sphere_surface, 4, 1, FormParams(gamma=(0.0,)))
        assert assemble_ghost_penalty(disc, 0).matrix.nnz == 0


class TestSystem:
    def test_parts(self, sphere_system):
        assert set(sphere_system.parts) == {"bulk", "interface", "ghost", "boundary"}
        assert sphere_system.constrained
        assert sphere_system.A.is_symmetric()

    def test_constants_in_kernel(self, sphere_disc, sphere_system):
        ones = np.ones(sphere_disc.n_dofs)
        assert np.max(np.abs(sphere_system.A @ ones)) < 1e-9

    def test_coercive_on_mean_free_functions(self, sphere_system, rng):
        c = sphere_system.c
        for _ in range(100):
            v = rng.normal(size=sphere_system.n)
            v -= (c @ v) / c.sum()
            assert v @ (sphere_system.A @ v) > 0

    def test_solve(self, sphere_system):
        sol = solve(sphere_system)
        assert sol.residual < 1e-10
        assert abs(sol.mean) < 1e-10
        assert sol.multiplier is not None

    def test_write_triplets(self, sphere_system, out_dir):
        path = out_dir / "A.txt"
        write_triplets(sphere_system.A, path)
        lines = path.read_text().splitlines()
        n, _, nnz = (int(v) for v in lines[0].lstrip("# ").split())
        assert n == sphere_system.n
        assert len(lines) == nnz + 1


@pytest.mark.parametrize("p", [1, 2])
def test_flat_strip_reproduces_polynomials(p):
    """A Q_p solution split across two patches is recovered to round-off."""
    problem = get_problem("flat2", p)
    surface = problem.surface()
    disc = Discretization(surface, 4, p, boundary=problem.boundary_spec(surface))
    system = assemble_system(disc, problem.load)
    assert not system.constrained
    sol = solve(system)
    assert np.max(np.abs(sol.u - interpolate(disc, problem.value))) < 1e-9


def test_flat_linear_dirichlet():
    problem = get_problem("flat")
    surface = problem.surface()
    disc = Discretization(surface, 4, 1, boundary=problem.boundary_spec(surface))
    sol = solve(assemble_system(disc, problem.load))
    assert np.max(np.abs(sol.u - interpolate(disc, problem.value))) < 1e-9


def test_flat_mixed_boundary():
    problem = get_problem("flat_mixed")
    surface = problem.surface()
    disc = Discretization(surface, 4, 1, boundary=problem.boundary_spec(surface))
    sol = solve(assemble_system(disc, problem.load))
    assert np.max(np.abs(sol.u - interpolate(disc, problem.value))) < 1e-9


class TestBoundary:
    def test_overlap(self):
        edge = BoundaryEdge(0, 0)
        with pytest.raises(BoundaryOverlapError):
            BoundarySpec(dirichlet=[edge], neumann=[edge])

    def test_unknown_edge(self, flat2_surface):
        with pytest.raises(AssemblyError):
            Discretization(flat2_surface, 4, 1, boundary=BoundarySpec(dirichlet=[BoundaryEdge(0, 1)]))

    def test_zero_data(self, flat_surface):
        zero = lambda X, *args: np.zeros(X.shape[:-1])  # noqa: E731
        spec = BoundarySpec([BoundaryEdge(0, 1)], [BoundaryEdge(0, 0)], zero, zero)
        disc = Discretization(flat_surface, 4, 1, boundary=spec)
        K, b = assemble_boundary(disc)
        np.testing.assert_array_equal(b, 0.0)
        assert K.is_symmetric()

    def test_neumann_only_has_no_matrix(self, flat_surface):
        spec = BoundarySpec(neumann=[BoundaryEdge(0, 0)], neumann_data=lambda X, n: np.ones(X.shape[:-1]))
        disc = Discretization(flat_surface, 4, 1, boundary=spec)
        K, b = assemble_boundary(disc)
        assert K.matrix.nnz == 0
        # unit flux over a side of ambient length 1
        assert b.sum() == pytest.approx(1.0, abs=1e-12)


class TestGreenIdentity:
    @pytest.mark.parametrize("p", [1, 2])
    def test_exact_for_polynomials(self, p, rng):
        problem = get_problem("flat2", p)
        disc = Discretization(problem.surface(), 4, p)
        u = rng.normal(size=disc.n_dofs)
        terms = green_terms(disc, u, problem.gradient, problem.load)
        assert abs(terms["residual"]) < 1e-9 * max(1.0, abs(terms["bulk"]))

    @pytest.mark.parametrize("p", [1, 2])
    def test_bulk_matches_stiffness(self, p, rng):
        problem = get_problem("flat2", p)
        disc = Discretization(problem.surface(), 4, p)
        u = rng.normal(size=disc.n_dofs)
        K = assemble_system(disc).parts["bulk"]
        terms = green_terms(disc, u, problem.gradient, problem.load)
        expected = u @ (K @ interpolate(disc, problem.value))
        assert terms["bulk"] == pytest.approx(expected, rel=1e-9, abs=1e-9)

    def test_sphere_residual_decays(self):
        problem = get_problem("sphere")
        residuals = []
        for n in (4, 8):
            disc = Discretization(sphere(), n, 1)
            u = interpolate(disc, problem.value)
            residuals.append(abs(green_terms(disc, u, problem.gradient, problem.load)["residual"]))
        assert residuals[1] < residuals[0] / 4
