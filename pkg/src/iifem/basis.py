"""Local basis functions with edge-average degrees of freedom.

Uncut elements carry the standard nonconforming P1 basis (dual to edge
averages).  Cut elements carry 'broken' piecewise-affine functions: affine
on each side of the chord, continuous at the chord endpoints, with matched
normal flux ``beta * dphi/dn`` across the chord, and edge averages dual to
the three edges.  The six coefficients are found from a 6x6 linear system
assembled in physical coordinates; the closed-form determinant of the
reference-configuration system is kept as a solvability oracle.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .geometry import CutInfo


class SingularSystemError(RuntimeError):
    """The local 6x6 coefficient system lost its pivots.

    The reference determinant is strictly negative for every admissible cut,
    so this signals corrupted cut geometry rather than a legitimate input.
    """


@dataclass
class AffinePair:
    """A piecewise-affine function: one affine piece per side of the chord.

    Each piece is stored as coefficients ``(a, b, c)`` meaning
    ``a + b*x + c*y``.  On uncut elements the two pieces coincide.
    """

    plus: np.ndarray
    minus: np.ndarray

    def coeffs(self, side):
        return self.plus if side >= 0 else self.minus

    def value(self, points, side):
        points = np.asarray(points, dtype=float)
        c = self.coeffs(side)
        return c[0] + c[1] * points[..., 0] + c[2] * points[..., 1]

    def gradient(self, side):
        return self.coeffs(side)[1:].copy()


@dataclass
class ElementBasis:
    """The three local basis functions of an element, indexed by local edge."""

    functions: list
    cut: "CutInfo"
    beta_minus: float = 1.0
    beta_plus: float = 1.0

    @property
    def rho(self):
        return self.beta_minus / self.beta_plus

    def gradients(self, side):
        """(3, 2) array of the basis gradients on one side of the chord."""
        return np.array([f.gradient(side) for f in self.functions])


def reference_determinant(x0, y0, rho):
    """Closed-form determinant of the reference-cut coefficient system.

    The reference configuration puts the right-angle vertex at the origin
    with the chord meeting the legs at ``(x0, 0)`` and ``(0, y0)``,
    ``0 < x0, y0 <= 1``, and ``rho`` the ratio of the inside to the outside
    diffusion coefficient.  The value is strictly negative on the whole
    admissible range, which is what guarantees solvability of the broken
    basis construction.
    """
    x0, y0, rho = float(x0), float(y0), float(rho)
    if not (0.0 < x0 <= 1.0 and 0.0 < y0 <= 1.0):
        raise ValueError(f"cut positions must lie in (0, 1], got {(x0, y0)}")
    if rho <= 0.0:
        raise ValueError(f"coefficient ratio must be positive, got {rho}")
    return 0.25 * (x0**2 + y0**2) * (rho * (x0 * y0 - 1.0) - x0 * y0)


def _barycentric_coeffs(tri):
    """Coefficient rows of the barycentric coordinates of a triangle."""
    tri = np.asarray(tri, dtype=float)
    M = np.column_stack([np.ones(3), tri])
    det = np.linalg.det(M)
    if abs(det) < 1e-14 * max(1.0, np.max(np.abs(tri))) ** 2:
        raise ValueError("degenerate triangle")
    return np.linalg.solve(M, np.eye(3)).T  # row k: coefficients of lambda_k


def build_standard_basis(tri, beta_minus=1.0, beta_plus=1.0):
    """Standard nonconforming P1 basis, dual to edge averages.

    With local edge k opposite vertex k, the basis function of edge k is
    ``1 - 2*lambda_k`` in barycentric coordinates; its average over edge j
    (equivalently its value at the midpoint of edge j) is the Kronecker
    delta.
    """
    tri = np.asarray(tri, dtype=float)
    lam = _barycentric_coeffs(tri)
    one = np.array([1.0, 0.0, 0.0])
    functions = []
    for k in range(3):
        coeff = one - 2.0 * lam[k]
        functions.append(AffinePair(plus=coeff, minus=coeff.copy()))
    cut = CutInfo(tri=tri, side=1)
    return ElementBasis(
        functions=functions,
        cut=cut,
        beta_minus=float(beta_minus),
        beta_plus=float(beta_plus),
    )


def _edge_split(cut, tri, local_edge):
    """Sub-segments of a local edge with their chord sides.

    Returns a list of ``(q0, q1, side)``; a single whole-edge entry when the
    chord does not split the edge's interior.
    """
    j = local_edge
    p_a = tri[(j + 1) % 3]
    p_b = tri[(j + 2) % 3]
    length2 = np.dot(p_b - p_a, p_b - p_a)
    split = None
    for point in (cut.point_d, cut.point_e):
        t = np.dot(point - p_a, p_b - p_a) / length2
        if 1e-9 < t < 1.0 - 1e-9:
            off = point - (p_a + t * (p_b - p_a))
            if np.dot(off, off) <= 1e-20 * length2:
                split = point
                break
    if split is None:
        mid = 0.5 * (p_a + p_b)
        return [(p_a, p_b, int(cut.chord_side(mid)))]
    sa = int(cut.chord_side(0.5 * (p_a + split)))
    sb = int(cut.chord_side(0.5 * (split + p_b)))
    return [(p_a, split, sa), (split, p_b, sb)]


def build_broken_basis(tri, cut, beta_minus, beta_plus):
    """Construct the broken basis of a cut element.

    The six coefficients of each basis function solve, in physical
    coordinates: three edge-average conditions (cut edges integrated exactly
    as length-weighted midpoint values of the affine pieces per
    sub-segment), value continuity at both chord endpoints, and normal-flux
    continuity across the chord.  All three basis functions share one LU
    factorization; a single refinement step keeps the edge-average residual
    at roundoff even for extreme coefficient contrast.
    """
    tri = np.asarray(tri, dtype=float)
    beta_minus = float(beta_minus)
    beta_plus = float(beta_plus)
    if beta_minus <= 0.0 or beta_plus <= 0.0:
        raise ValueError("diffusion coefficients must be positive")
    if not cut.is_interface:
        raise ValueError("build_broken_basis requires an interface cut")

    A = np.zeros((6, 6))
    for j in range(3):
        pieces = _edge_split(cut, tri, j)
        p_a = tri[(j + 1) % 3]
        p_b = tri[(j + 2) % 3]
        total = np.linalg.norm(p_b - p_a)
        for q0, q1, side in pieces:
            w = np.linalg.norm(np.asarray(q1) - np.asarray(q0)) / total
            mid = 0.5 * (np.asarray(q0) + np.asarray(q1))
            col = 0 if side > 0 else 3
            A[j, col : col + 3] += w * np.array([1.0, mid[0], mid[1]])
    for r, point in ((3, cut.point_d), (4, cut.point_e)):
        A[r, 0:3] = (1.0, point[0], point[1])
        A[r, 3:6] = (-1.0, -point[0], -point[1])
    scale = max(beta_plus, beta_minus)
    n = cut.normal
    A[5, 1:3] = (beta_plus / scale) * n
    A[5, 4:6] = -(beta_minus / scale) * n

    row_norm = np.max(np.abs(A), axis=1).max()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # the pivot check below decides
            lu, piv = lu_factor(A)
    except Exception as exc:  # LinAlgError on exact singularity
        raise SingularSystemError(f"local coefficient system is singular: {exc}")
    if np.min(np.abs(np.diag(lu))) < 1e-14 * row_norm:
        raise SingularSystemError(
            "local coefficient system lost its pivots; the cut data is corrupted"
        )

    B = np.zeros((6, 3))
    B[:3, :3] = np.eye(3)
    X = lu_solve((lu, piv), B)
    X += lu_solve((lu, piv), B - A @ X)  # one refinement step

    functions = [AffinePair(plus=X[0:3, k].copy(), minus=X[3:6, k].copy()) for k in range(3)]
    return ElementBasis(
        functions=functions, cut=cut, beta_minus=beta_minus, beta_plus=beta_plus
    )


def build_bases(mesh, cuts, beta_minus, beta_plus):
    """Per-element basis list for a classified mesh."""
    bases = []
    for t in range(mesh.n_triangles):
        tri = mesh.triangle_points(t)
        cut = cuts[t]
        if cut.is_interface:
            bases.append(build_broken_basis(tri, cut, beta_minus, beta_plus))
        else:
            basis = build_standard_basis(tri, beta_minus, beta_plus)
            basis.cut = cut
            bases.append(basis)
    return bases


def evaluate(basis_fn, cut, point):
    """Value and gradient of a basis function at a point of its element.

    The affine piece is selected by the side of the chord line; points on
    the chord use the plus piece (the two values agree there by
    construction).
    """
    point = np.asarray(point, dtype=float)
    tri = cut.tri
    M = np.column_stack([np.ones(3), tri])
    lam = np.linalg.solve(M.T, np.array([1.0, point[0], point[1]]))
    if np.min(lam) < -1e-12:
        raise ValueError(f"point {point} lies outside the element")
    side = int(cut.chord_side(point)) if cut.is_interface else cut.side
    coeff = basis_fn.coeffs(side)
    value = coeff[0] + coeff[1] * point[0] + coeff[2] * point[1]
    return float(value), coeff[1:].copy()


def chord_flux_jump(basis_fn, cut, beta_minus, beta_plus):
    """Jump of the normal flux across the chord:
    ``beta- * grad(minus) . n - beta+ * grad(plus) . n``.

    Zero (to roundoff) for every constructed broken basis function.
    """
    if not cut.is_interface:
        raise ValueError("uncut elements have no chord")
    n = cut.normal
    return float(
        beta_minus * np.dot(basis_fn.gradient(-1), n)
        - beta_plus * np.dot(basis_fn.gradient(+1), n)
    )
