import numpy as np
import pytest
from scipy.integrate import dblquad

from iifem.assembly import apply_dirichlet, assemble_load, assemble_stiffness, build_dofmap
from iifem.basis import build_bases, build_standard_basis
from iifem.fvm import (
    all_fluxes,
    check_flux_continuity,
    dump_velocity,
    edge_flux,
    element_fluxes,
    element_mean_source,
    recover_velocities,
    recover_velocity,
)
from iifem.geometry import CutInfo, circle_levelset, classify_elements
from iifem.mesh import Mesh, build_uniform_mesh
from iifem.problems import circle_r3_problem
from iifem.quadrature import triangle_area


def setup(nx, ny, domain, levelset, beta_minus=1.0, beta_plus=1.0):
    mesh = build_uniform_mesh(nx, ny, domain)
    cuts = classify_elements(mesh, levelset)
    bases = build_bases(mesh, cuts, beta_minus, beta_plus)
    return mesh, cuts, bases


def solve_mixed(problem, n, dense=False, rel_tol=1e-12):
    mesh, cuts, bases = setup(
        n, n, problem.domain, problem.levelset, problem.beta_minus, problem.beta_plus
    )
    A = assemble_stiffness(mesh, cuts, bases, problem.beta_minus, problem.beta_plus)
    load = assemble_load(mesh, cuts, bases, problem.source, "cellmean")
    system = apply_dirichlet(A, load, mesh, build_dofmap(mesh), problem.boundary)
    if dense:
        x = np.linalg.solve(system.matrix.toarray(), system.rhs)
    else:
        from iifem.solver import cg_solve

        report = cg_solve(system.matrix, system.rhs, rel_tol=rel_tol)
        assert report.converged
        x = report.x
    pressure = system.expand(x)
    fbar = element_mean_source(mesh, cuts, problem.source)
    return mesh, cuts, bases, pressure, fbar


class TestElementMeans:
    def test_constant_source(self):
        mesh, cuts, _ = setup(4, 4, (-1, 1, -1, 1), circle_levelset(0.55))
        nine = lambda x, y: np.full_like(np.asarray(x, dtype=float), 9.0)
        fbar = element_mean_source(mesh, cuts, nine)
        assert fbar == pytest.approx(np.full(mesh.n_triangles, 9.0), rel=1e-14)

    def test_affine_source_is_centroid_value_on_uncut(self):
        mesh, cuts, _ = setup(3, 3, (0, 1, 0, 1), lambda x, y: np.ones_like(np.asarray(x, float)))
        f = lambda x, y: 2.0 + 3.0 * x - 1.5 * y
        fbar = element_mean_source(mesh, cuts, f)
        for t in range(mesh.n_triangles):
            c = mesh.triangle_points(t).mean(axis=0)
            assert fbar[t] == pytest.approx(f(c[0], c[1]), rel=1e-14)

    def test_radial_source_against_dblquad(self):
        # f = -9 r on one uncut element, compared with scipy's adaptive
        # rule; cells of 1/16 put the degree-4 rule's own error below 1e-10
        problem = circle_r3_problem(1.0, 1000.0)
        mesh, cuts, _ = setup(32, 32, (-1, 1, -1, 1), problem.levelset)
        # lower triangle (ll, lr, ur): x in [xa, xb], y from ya up to the diagonal
        t = 0
        tri = mesh.triangle_points(t)
        assert not cuts[t].is_interface
        xa, ya = tri[0]
        xb = tri[1][0]
        ref, err = dblquad(
            lambda y, x: -9.0 * np.hypot(x, y),
            xa,
            xb,
            lambda x: ya,
            lambda x: ya + (x - xa),
            epsabs=1e-12,
        )
        area = abs(triangle_area(tri))
        fbar = element_mean_source(mesh, cuts, problem.source)
        assert err < 1e-10
        assert fbar[t] == pytest.approx(ref / area, abs=1e-10)


class TestRecovery:
    def test_constant_pressure_zero_velocity(self):
        mesh, cuts, bases = setup(4, 4, (-1, 1, -1, 1), circle_levelset(0.55), 1.0, 100.0)
        for t in range(mesh.n_triangles):
            u = recover_velocity(bases[t], cuts[t], np.array([2.0, 2.0, 2.0]), 0.0)
            assert u.value(0.3, 0.3) == pytest.approx([0.0, 0.0], abs=1e-12)
            assert u.divergence == 0.0

    def test_affine_pressure_constant_velocity(self):
        beta = 4.0
        grad = np.array([1.5, -2.0])
        mesh, cuts, bases = setup(3, 3, (0, 1, 0, 1), lambda x, y: np.ones_like(np.asarray(x, float)), beta, beta)
        p_fn = lambda pts: 0.7 + pts @ grad
        for t in range(mesh.n_triangles):
            tri = mesh.triangle_points(t)
            p_dofs = np.array(
                [p_fn(0.5 * (tri[(k + 1) % 3] + tri[(k + 2) % 3])) for k in range(3)]
            )
            u = recover_velocity(bases[t], cuts[t], p_dofs, 0.0)
            assert u.value(0.1, 0.2) == pytest.approx(-beta * grad, rel=1e-12)

    def test_divergence_identity_exact(self):
        problem = circle_r3_problem(1.0, 1000.0)
        mesh, cuts, bases, pressure, fbar = solve_mixed(problem, 8)
        velocities = recover_velocities(mesh, cuts, bases, pressure, fbar)
        for t, u in enumerate(velocities):
            assert u.divergence == fbar[t]  # bitwise: c = fbar/2 scales exactly

    def test_mean_value_identity(self):
        # the element average of the recovered field equals its barycenter
        # value, which is minus the averaged flux of the pressure
        problem = circle_r3_problem(1.0, 1000.0)
        mesh, cuts, bases, pressure, fbar = solve_mixed(problem, 8)
        velocities = recover_velocities(mesh, cuts, bases, pressure, fbar)
        for t in (0, 5, mesh.n_triangles - 1):
            u = velocities[t]
            mean = np.zeros(2)
            area = 0.0
            for tri, _side in cuts[t].subcells():
                from iifem.quadrature import triangle_rule

                pts, w = triangle_rule(tri)
                mean += w @ u.value(pts[:, 0], pts[:, 1])
                area += w.sum()
            mean /= area
            assert mean == pytest.approx(u.value(*u.barycenter), abs=1e-13)

    def test_uncut_matches_pointwise_formula(self):
        # on uncut elements the averaged-flux recovery and the plain
        # pointwise formula coincide
        rng = np.random.default_rng(9)
        problem = circle_r3_problem(1.0, 1000.0)
        mesh, cuts, bases, pressure, fbar = solve_mixed(problem, 8)
        uncut = [t for t, c in enumerate(cuts) if not c.is_interface]
        for t in rng.choice(uncut, size=20, replace=False):
            basis, cut = bases[t], cuts[t]
            p_local = pressure[mesh.triangle_edges[t]]
            u = recover_velocity(basis, cut, p_local, fbar[t])
            beta = 1000.0 if cut.side > 0 else 1.0
            grad_p = basis.gradients(cut.side).T @ p_local
            xb = cut.tri.mean(axis=0)
            x_probe = xb + np.array([0.01, -0.02])
            pointwise = -beta * grad_p + 0.5 * fbar[t] * (x_probe - xb)
            assert u.value(*x_probe) == pytest.approx(pointwise, rel=1e-12)


class TestEdgeFluxes:
    def test_zero_solution_zero_flux(self):
        mesh, cuts, bases = setup(2, 2, (0, 1, 0, 1), lambda x, y: np.ones_like(np.asarray(x, float)))
        for t in range(mesh.n_triangles):
            fluxes = element_fluxes(bases[t], cuts[t], np.zeros(3), 0.0)
            assert fluxes == pytest.approx(np.zeros(3), abs=0)

    def test_flux_sum_is_element_divergence(self):
        problem = circle_r3_problem(1.0, 1000.0)
        mesh, cuts, bases, pressure, fbar = solve_mixed(problem, 8)
        fluxes = all_fluxes(mesh, cuts, bases, pressure, fbar)
        areas = np.array(
            [abs(triangle_area(mesh.triangle_points(t))) for t in range(mesh.n_triangles)]
        )
        assert fluxes.sum(axis=1) == pytest.approx(areas * fbar, abs=1e-12 * np.abs(fbar).max())

    def test_flux_matches_rt_normal_component(self):
        problem = circle_r3_problem(1.0, 1000.0)
        mesh, cuts, bases, pressure, fbar = solve_mixed(problem, 8)
        velocities = recover_velocities(mesh, cuts, bases, pressure, fbar)
        scale = max(1.0, np.abs(all_fluxes(mesh, cuts, bases, pressure, fbar)).max())
        for t in (0, 31, 77):
            tri = mesh.triangle_points(t)
            p_local = pressure[mesh.triangle_edges[t]]
            for j in range(3):
                p_a, p_b = tri[(j + 1) % 3], tri[(j + 2) % 3]
                mid = 0.5 * (p_a + p_b)
                tangent = p_b - p_a
                outward = np.array([tangent[1], -tangent[0]])
                centroid = tri.mean(axis=0)
                if np.dot(outward, mid - centroid) < 0:
                    outward = -outward
                outward /= np.linalg.norm(outward)
                length = np.linalg.norm(tangent)
                rt_flux = length * float(velocities[t].value(*mid) @ outward)
                formula = edge_flux(bases[t], cuts[t], p_local, fbar[t], j)
                assert formula == pytest.approx(rt_flux, abs=1e-12 * scale)


class TestFluxContinuity:
    def test_dense_solve_is_exactly_conservative(self):
        problem = circle_r3_problem(1.0, 1000.0)
        mesh, cuts, bases, pressure, fbar = solve_mixed(problem, 2, dense=True)
        fluxes = all_fluxes(mesh, cuts, bases, pressure, fbar)
        assert check_flux_continuity(mesh, fluxes) <= 1e-12 * np.abs(fluxes).max()

    def test_cg_solve_matches_solver_tolerance(self):
        problem = circle_r3_problem(1.0, 1000.0)
        mesh, cuts, bases, pressure, fbar = solve_mixed(problem, 16, rel_tol=1e-12)
        fluxes = all_fluxes(mesh, cuts, bases, pressure, fbar)
        assert check_flux_continuity(mesh, fluxes) <= 1e-8 * np.abs(fluxes).max()

    def test_no_interior_edges(self):
        # a hand-built single-triangle mesh: every edge is boundary
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        mesh = Mesh(
            nx=1,
            ny=1,
            domain=(0, 1, 0, 1),
            vertices=verts,
            triangles=np.array([[0, 1, 2]]),
            edges=np.array([[1, 2], [2, 0], [0, 1]]),
            triangle_edges=np.array([[0, 1, 2]]),
            edge_triangles=np.array([[0, -1], [0, -1], [0, -1]]),
            boundary_edge=np.array([True, True, True]),
            h=np.sqrt(2),
        )
        assert check_flux_continuity(mesh, np.ones((1, 3))) == 0.0

    def test_global_conservation(self):
        problem = circle_r3_problem(1.0, 1000.0)
        mesh, cuts, bases, pressure, fbar = solve_mixed(problem, 8)
        fluxes = all_fluxes(mesh, cuts, bases, pressure, fbar)
        boundary_total = 0.0
        for e in np.nonzero(mesh.boundary_edge)[0]:
            t = mesh.edge_triangles[e, 0]
            local = int(np.nonzero(mesh.triangle_edges[t] == e)[0][0])
            boundary_total += fluxes[t, local]
        areas = np.array(
            [abs(triangle_area(mesh.triangle_points(t))) for t in range(mesh.n_triangles)]
        )
        assert boundary_total == pytest.approx(float(areas @ fbar), abs=1e-8)


def test_velocity_dump(tmp_path):
    problem = circle_r3_problem(1.0, 1000.0)
    mesh, cuts, bases, pressure, fbar = solve_mixed(problem, 2, dense=True)
    velocities = recover_velocities(mesh, cuts, bases, pressure, fbar)
    path = tmp_path / "vel.txt"
    dump_velocity(velocities, path)
    lines = path.read_text().splitlines()
    assert len(lines) == mesh.n_triangles
    t, a, b, c, fb = lines[0].split()
    assert int(t) == 0
    assert float(a) == velocities[0].a
    assert float(fb) == velocities[0].fbar
