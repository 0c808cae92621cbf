import numpy as np
import pytest

from iifem.basis import (
    AffinePair,
    SingularSystemError,
    build_broken_basis,
    build_standard_basis,
    chord_flux_jump,
    evaluate,
    reference_determinant,
)
from iifem.geometry import CutInfo, circle_levelset, classify_elements, cut_from_edge_points
from iifem.mesh import build_uniform_mesh

REF_TRI = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def reference_system(x0, y0, rho):
    """The 6x6 reference-configuration matrix, assembled independently.

    Row order: three edge averages (hypotenuse, left leg, bottom leg), value
    continuity at (x0,0) and (0,y0), flux continuity across the chord.
    Unknown order: plus-piece (a0,b0,c0) then minus-piece (a1,b1,c1).
    """
    return np.array(
        [
            [1.0, 0.5, 0.5, 0.0, 0.0, 0.0],
            [1 - y0, 0.0, 0.5 * (1 - y0**2), y0, 0.0, 0.5 * y0**2],
            [1 - x0, 0.5 * (1 - x0**2), 0.0, x0, 0.5 * x0**2, 0.0],
            [-1.0, -x0, 0.0, 1.0, x0, 0.0],
            [-1.0, 0.0, -y0, 1.0, 0.0, y0],
            [0.0, -y0, -x0, 0.0, rho * y0, rho * x0],
        ]
    )


def reference_cut(x0, y0):
    """Chord through (x0,0) and (0,y0) on the reference triangle; the corner
    at the origin is the minus side."""
    return cut_from_edge_points(REF_TRI, 2, (x0, 0.0), 1, (0.0, y0), -1)


def solve_reference(x0, y0, rho, k):
    """Independent solve of the reference system with a different
    elimination order (rows and columns reversed before factorization)."""
    A = reference_system(x0, y0, rho)
    rhs = np.zeros(6)
    rhs[k] = 1.0
    perm = np.arange(5, -1, -1)  # self-inverse reversal
    y = np.linalg.solve(A[np.ix_(perm, perm)], rhs[perm])
    return y[::-1]


class TestReferenceDeterminant:
    @pytest.mark.parametrize(
        "x0, y0, rho, expected",
        [(0.5, 0.5, 1.0, -0.125), (0.5, 0.5, 2.0, -0.21875)],
    )
    def test_known_values(self, x0, y0, rho, expected):
        assert reference_determinant(x0, y0, rho) == pytest.approx(expected, rel=1e-15)

    @pytest.mark.parametrize("rho", [0.001, 1.0, 1000.0])
    def test_corner_value_is_rho_independent(self, rho):
        assert reference_determinant(1.0, 1.0, rho) == pytest.approx(-0.5, rel=1e-15)
        brute = np.linalg.det(reference_system(1.0, 1.0, rho))
        assert brute == pytest.approx(-0.5, rel=1e-12)

    def test_matches_brute_force_spot_checks(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            x0, y0 = rng.uniform(0.05, 1.0, size=2)
            rho = 10.0 ** rng.uniform(-3, 3)
            brute = np.linalg.det(reference_system(x0, y0, rho))
            assert reference_determinant(x0, y0, rho) == pytest.approx(brute, rel=1e-12)

    @pytest.mark.parametrize(
        "x0, y0, rho", [(0.0, 0.5, 1.0), (1.5, 0.5, 1.0), (0.5, -0.1, 1.0), (0.5, 0.5, 0.0)]
    )
    def test_rejects_out_of_range(self, x0, y0, rho):
        with pytest.raises(ValueError):
            reference_determinant(x0, y0, rho)


class TestStandardBasis:
    def test_hypotenuse_basis_closed_form(self):
        # solving the 3x3 midpoint system by hand gives -1 + 2x + 2y
        basis = build_standard_basis(REF_TRI)
        assert basis.functions[0].plus == pytest.approx([-1.0, 2.0, 2.0], abs=1e-14)

    def test_midpoint_duality(self):
        tri = np.array([[0.2, -0.1], [1.3, 0.4], [0.5, 1.1]])
        basis = build_standard_basis(tri)
        for j in range(3):
            mid = 0.5 * (tri[(j + 1) % 3] + tri[(j + 2) % 3])
            for k in range(3):
                expected = 1.0 if j == k else 0.0
                assert basis.functions[k].value(mid, 1) == pytest.approx(
                    expected, abs=1e-13
                )

    def test_partition_of_unity(self):
        tri = np.array([[0.0, 0.0], [2.0, 0.3], [0.4, 1.7]])
        basis = build_standard_basis(tri)
        total = sum(f.plus for f in basis.functions)
        assert total == pytest.approx([1.0, 0.0, 0.0], abs=1e-13)

    def test_degenerate_triangle(self):
        with pytest.raises(ValueError):
            build_standard_basis(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]))


def random_cut(rng, tri):
    """A random admissible chord on a triangle: two distinct edges, interior
    parameters, random minus side."""
    edge_d, edge_e = rng.choice(3, size=2, replace=False)
    points = []
    for j in (edge_d, edge_e):
        t = rng.uniform(0.05, 0.95)
        p = tri[(j + 1) % 3] + t * (tri[(j + 2) % 3] - tri[(j + 1) % 3])
        points.append(p)
    sign = 1 if rng.random() < 0.5 else -1
    return cut_from_edge_points(tri, edge_d, points[0], edge_e, points[1], sign)


def exact_edge_average(basis, cut, local_edge, k):
    """Independent exact edge average: split at the chord endpoint lying on
    the edge, value at sub-segment midpoints, length weights."""
    tri = cut.tri
    p_a, p_b = tri[(local_edge + 1) % 3], tri[(local_edge + 2) % 3]
    total = np.linalg.norm(p_b - p_a)
    pieces = [(p_a, p_b)]
    for point in (cut.point_d, cut.point_e):
        t = np.dot(point - p_a, p_b - p_a) / total**2
        off = point - (p_a + t * (p_b - p_a))
        if 1e-9 < t < 1 - 1e-9 and np.linalg.norm(off) < 1e-10 * total:
            pieces = [(p_a, point), (point, p_b)]
            break
    avg = 0.0
    for q0, q1 in pieces:
        mid = 0.5 * (q0 + q1)
        side = int(cut.chord_side(mid))
        avg += (np.linalg.norm(q1 - q0) / total) * basis.functions[k].value(mid, side)
    return avg


class TestBrokenBasis:
    def test_equal_coefficients_reduce_to_standard(self):
        mesh = build_uniform_mesh(8, 8, (-1, 1, -1, 1))
        cuts = classify_elements(mesh, circle_levelset(0.5))
        t = next(i for i, c in enumerate(cuts) if c.is_interface)
        tri = mesh.triangle_points(t)
        broken = build_broken_basis(tri, cuts[t], 3.7, 3.7)
        standard = build_standard_basis(tri)
        for k in range(3):
            assert broken.functions[k].plus == pytest.approx(
                standard.functions[k].plus, abs=1e-12
            )
            assert broken.functions[k].minus == pytest.approx(
                standard.functions[k].plus, abs=1e-12
            )

    def test_constant_averages_give_constant(self):
        # equal edge averages c force the piecewise function to be c
        cut = reference_cut(0.4, 0.7)
        basis = build_broken_basis(REF_TRI, cut, 1.0, 50.0)
        c = 2.5
        plus = c * sum(f.plus for f in basis.functions)
        minus = c * sum(f.minus for f in basis.functions)
        assert plus == pytest.approx([c, 0.0, 0.0], abs=1e-12)
        assert minus == pytest.approx([c, 0.0, 0.0], abs=1e-12)

    def test_reference_cut_against_independent_solve(self):
        # frozen coefficients from the independent reference-system solve,
        # x0=0.35, y0=0.65, beta- = 1, beta+ = 1000 (rho = 1e-3), k = 1
        frozen = np.array(
            [
                8.268243501424e-01,
                -3.748716551852e-01,
                7.212229549003e-01,
                -2.826824350142e00,
                1.006412463134e01,
                6.342220955339e00,
            ]
        )
        cut = reference_cut(0.35, 0.65)
        basis = build_broken_basis(REF_TRI, cut, 1.0, 1000.0)
        got = np.concatenate([basis.functions[0].plus, basis.functions[0].minus])
        assert got == pytest.approx(frozen, abs=1e-10)
        for k in range(3):
            oracle = solve_reference(0.35, 0.65, 1.0 / 1000.0, k)
            got_k = np.concatenate(
                [basis.functions[k].plus, basis.functions[k].minus]
            )
            assert got_k == pytest.approx(oracle, abs=1e-10)

    def test_random_cut_properties(self):
        rng = np.random.default_rng(42)
        mesh = build_uniform_mesh(8, 8, (0, 1, 0, 1))
        for _ in range(30):
            tri = mesh.triangle_points(rng.integers(mesh.n_triangles))
            cut = random_cut(rng, tri)
            rho = 10.0 ** rng.uniform(-3, 3)
            beta_minus, beta_plus = rho, 1.0
            basis = build_broken_basis(tri, cut, beta_minus, beta_plus)
            scale = max(
                1.0, max(np.max(np.abs(f.plus)) for f in basis.functions),
                max(np.max(np.abs(f.minus)) for f in basis.functions),
            )
            for k in range(3):
                fn = basis.functions[k]
                # duality against the independent exact average
                for j in range(3):
                    target = 1.0 if j == k else 0.0
                    assert exact_edge_average(basis, cut, j, k) == pytest.approx(
                        target, abs=1e-12 * scale
                    )
                # continuity at the chord endpoints
                for point in (cut.point_d, cut.point_e):
                    assert fn.value(point, 1) == pytest.approx(
                        fn.value(point, -1), abs=1e-12 * scale
                    )
                # flux continuity across the chord
                jump = chord_flux_jump(fn, cut, beta_minus, beta_plus)
                grad_scale = (beta_minus + beta_plus) * max(
                    1.0,
                    np.linalg.norm(fn.gradient(1)),
                    np.linalg.norm(fn.gradient(-1)),
                )
                assert abs(jump) <= 1e-12 * grad_scale
            # partition of unity, coefficient-wise
            plus = sum(f.plus for f in basis.functions)
            minus = sum(f.minus for f in basis.functions)
            assert plus == pytest.approx([1, 0, 0], abs=1e-12 * scale)
            assert minus == pytest.approx([1, 0, 0], abs=1e-12 * scale)

    def test_rejects_uncut_element(self):
        uncut = CutInfo(tri=REF_TRI, side=1)
        with pytest.raises(ValueError):
            build_broken_basis(REF_TRI, uncut, 1.0, 2.0)

    def test_rejects_nonpositive_beta(self):
        cut = reference_cut(0.5, 0.5)
        with pytest.raises(ValueError):
            build_broken_basis(REF_TRI, cut, -1.0, 2.0)

    def test_corrupted_cut_raises_singular(self):
        cut = reference_cut(0.5, 0.5)
        cut.normal = np.zeros(2)  # flux row vanishes
        with pytest.raises(SingularSystemError):
            build_broken_basis(REF_TRI, cut, 1.0, 2.0)


class TestEvaluate:
    def test_constant_pair(self):
        cut = reference_cut(0.5, 0.5)
        fn = AffinePair(plus=np.array([3.0, 0, 0]), minus=np.array([3.0, 0, 0]))
        value, grad = evaluate(fn, cut, (0.2, 0.2))
        assert value == 3.0
        assert grad == pytest.approx([0.0, 0.0])

    def test_sides_agree_at_chord_endpoint(self):
        cut = reference_cut(0.35, 0.65)
        basis = build_broken_basis(REF_TRI, cut, 1.0, 1000.0)
        value, _ = evaluate(basis.functions[1], cut, cut.point_d)
        assert value == pytest.approx(basis.functions[1].value(cut.point_d, -1), abs=1e-12)

    def test_gradient_is_affine_coefficients(self):
        cut = reference_cut(0.5, 0.5)
        fn = AffinePair(plus=np.array([1.0, 2.0, -3.0]), minus=np.array([0.5, 1.0, 0.0]))
        # a point strictly on the plus side of the chord
        _, grad = evaluate(fn, cut, (0.6, 0.3))
        assert grad == pytest.approx([2.0, -3.0])

    def test_outside_point_rejected(self):
        cut = reference_cut(0.5, 0.5)
        fn = AffinePair(plus=np.zeros(3), minus=np.zeros(3))
        with pytest.raises(ValueError):
            evaluate(fn, cut, (0.7, 0.7))


class TestChordFluxJump:
    def test_synthetic_unit_jump(self):
        # vertical chord x = 0.5, normal (1, 0)
        cut = cut_from_edge_points(REF_TRI, 2, (0.5, 0.0), 0, (0.5, 0.5), 1)
        assert cut.normal == pytest.approx([1.0, 0.0])
        fn = AffinePair(plus=np.array([0.0, 1.0, 0.0]), minus=np.zeros(3))
        assert chord_flux_jump(fn, cut, 1.0, 1.0) == pytest.approx(-1.0)

    def test_constructed_basis_has_no_jump(self):
        cut = reference_cut(0.25, 0.8)
        basis = build_broken_basis(REF_TRI, cut, 2.0, 300.0)
        for fn in basis.functions:
            assert abs(chord_flux_jump(fn, cut, 2.0, 300.0)) < 1e-10

    def test_equal_betas_zero_gradient_jump(self):
        cut = reference_cut(0.5, 0.5)
        basis = build_broken_basis(REF_TRI, cut, 7.0, 7.0)
        for fn in basis.functions:
            assert fn.gradient(1) == pytest.approx(fn.gradient(-1), abs=1e-12)
            assert abs(chord_flux_jump(fn, cut, 7.0, 7.0)) < 1e-11

    def test_uncut_rejected(self):
        fn = AffinePair(plus=np.zeros(3), minus=np.zeros(3))
        with pytest.raises(ValueError):
            chord_flux_jump(fn, CutInfo(tri=REF_TRI, side=1), 1.0, 1.0)
