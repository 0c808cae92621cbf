"""Interpolation, discrete error norms, and convergence-order fitting.

Error integrands pick the exact-solution branch by the true level-set sign
at each quadrature node while the discrete solution follows the chord side,
so the thin mismatch region between chord and curve is integrated honestly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import edge_intersection
from .quadrature import GAUSS3_NODES, GAUSS3_WEIGHTS, triangle_rule


def _edge_split_points(mesh, cuts):
    """Map edge id -> interface point, collected from the cut elements."""
    points = {}
    for t, cut in enumerate(cuts):
        if not cut.is_interface:
            continue
        for local, point in zip(cut.cut_edges, (cut.point_d, cut.point_e)):
            points.setdefault(int(mesh.triangle_edges[t][local]), point)
    return points


def _edge_average(p0, p1, fn, split=None):
    """Edge average of ``fn`` by 3-point Gauss per smooth sub-segment."""

    def gauss(q0, q1):
        pts = q0[None, :] + GAUSS3_NODES[:, None] * (q1 - q0)[None, :]
        vals = np.broadcast_to(
            np.asarray(fn(pts[:, 0], pts[:, 1]), dtype=float), GAUSS3_WEIGHTS.shape
        )
        return float(np.dot(GAUSS3_WEIGHTS, vals))

    if split is None:
        return gauss(p0, p1)
    total = np.linalg.norm(p1 - p0)
    w0 = np.linalg.norm(split - p0) / total
    if w0 <= 1e-12 or w0 >= 1.0 - 1e-12:
        return gauss(p0, p1)
    return w0 * gauss(p0, split) + (1.0 - w0) * gauss(split, p1)


def interpolate(p_exact, mesh, cuts):
    """Edge-average interpolant: one DOF per edge, the average of ``p_exact``.

    Edges crossed by the interface are split at the crossing before the
    3-point Gauss rule is applied, so each sub-segment sees a smooth branch.
    """
    splits = _edge_split_points(mesh, cuts)
    dofs = np.empty(mesh.n_edges)
    for e in range(mesh.n_edges):
        p0, p1 = mesh.edge_points(e)
        dofs[e] = _edge_average(p0, p1, p_exact, splits.get(e))
    return dofs


def discrete_function(mesh, cuts, bases, dofs):
    """Point-evaluable callable for a DOF vector (vectorized over arrays).

    Points in an element interior take that element's value.  Points on a
    shared edge (where the space is discontinuous) take the mean of the two
    one-sided traces; the mean trace keeps the edge averages and the
    piecewise-affine structure, so interpolating the result reproduces the
    DOF vector exactly.
    """
    x0, x1, y0, y1 = mesh.domain
    dx = (x1 - x0) / mesh.nx
    dy = (y1 - y0) / mesh.ny
    on_edge_tol = 1e-12

    def element_value(t, px, py):
        cut = cuts[t]
        side = (
            int(cut.chord_side(np.array([px, py]))) if cut.is_interface else cut.side
        )
        p_local = dofs[mesh.triangle_edges[t]]
        value = 0.0
        for k, basis_fn in enumerate(bases[t].functions):
            c = basis_fn.coeffs(side)
            value += p_local[k] * (c[0] + c[1] * px + c[2] * py)
        return value

    def containing_triangles(px, py):
        i = min(max(int((px - x0) / dx), 0), mesh.nx - 1)
        j = min(max(int((py - y0) / dy), 0), mesh.ny - 1)
        cells = {(i, j)}
        lx = (px - (x0 + i * dx)) / dx
        ly = (py - (y0 + j * dy)) / dy
        if lx <= on_edge_tol and i > 0:
            cells.add((i - 1, j))
        if lx >= 1.0 - on_edge_tol and i < mesh.nx - 1:
            cells.add((i + 1, j))
        if ly <= on_edge_tol and j > 0:
            cells.add((i, j - 1))
        if ly >= 1.0 - on_edge_tol and j < mesh.ny - 1:
            cells.add((i, j + 1))
        found = []
        for ci, cj in cells:
            for t in (2 * (cj * mesh.nx + ci), 2 * (cj * mesh.nx + ci) + 1):
                tri = cuts[t].tri
                M = np.column_stack([np.ones(3), tri])
                lam = np.linalg.solve(M.T, np.array([1.0, px, py]))
                if lam.min() >= -on_edge_tol:
                    found.append(t)
        return found

    def fn(x, y):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.empty(np.broadcast(x, y).shape)
        bx = np.broadcast_to(x, out.shape).ravel()
        by = np.broadcast_to(y, out.shape).ravel()
        flat = out.ravel()
        for idx in range(flat.size):
            px, py = bx[idx], by[idx]
            hosts = containing_triangles(px, py)
            flat[idx] = np.mean([element_value(t, px, py) for t in hosts])
        return out if out.shape else float(out)

    return fn


def _element_affine(basis, p_dofs, side):
    """Coefficients of ``sum_k p_k phi_k`` on one side of the chord."""
    coeff = np.zeros(3)
    for k, fn in enumerate(basis.functions):
        coeff += p_dofs[k] * fn.coeffs(side)
    return coeff


def l2_error(mesh, cuts, bases, p_dofs, p_exact):
    """``||p - p_h||_0`` by the degree-4 rule on chord sub-triangles."""
    total = 0.0
    for t in range(mesh.n_triangles):
        cut = cuts[t]
        local = p_dofs[mesh.triangle_edges[t]]
        for tri, side in cut.subcells():
            coeff = _element_affine(bases[t], local, side)
            pts, w = triangle_rule(tri)
            ph = coeff[0] + coeff[1] * pts[:, 0] + coeff[2] * pts[:, 1]
            pe = np.broadcast_to(
                np.asarray(p_exact(pts[:, 0], pts[:, 1]), dtype=float), w.shape
            )
            total += float(np.dot(w, (pe - ph) ** 2))
    return math.sqrt(total)


def h1_broken_error(mesh, cuts, bases, p_dofs, p_exact, p_exact_grad):
    """Full broken H1 norm of the error (element-wise H1, summed in squares)."""
    total = 0.0
    for t in range(mesh.n_triangles):
        cut = cuts[t]
        local = p_dofs[mesh.triangle_edges[t]]
        for tri, side in cut.subcells():
            coeff = _element_affine(bases[t], local, side)
            pts, w = triangle_rule(tri)
            ph = coeff[0] + coeff[1] * pts[:, 0] + coeff[2] * pts[:, 1]
            pe = np.broadcast_to(
                np.asarray(p_exact(pts[:, 0], pts[:, 1]), dtype=float), w.shape
            )
            ge = np.asarray(p_exact_grad(pts[:, 0], pts[:, 1]), dtype=float)
            diff = ge - coeff[1:][None, :]
            total += float(np.dot(w, (pe - ph) ** 2))
            total += float(np.dot(w, np.einsum("qi,qi->q", diff, diff)))
    return math.sqrt(total)


def hdiv_error(mesh, cuts, velocities, u_exact, f):
    """``(||u - u_h||_0, ||div(u - u_h)||_0)``.

    The divergence of the recovered field is the cell mean of ``f``, so the
    second norm is the distance of ``f`` from its element means.
    """
    err_u = 0.0
    err_div = 0.0
    for t in range(mesh.n_triangles):
        u_h = velocities[t]
        for tri, _side in cuts[t].subcells():
            pts, w = triangle_rule(tri)
            ue = np.asarray(u_exact(pts[:, 0], pts[:, 1]), dtype=float)
            diff = ue - u_h.value(pts[:, 0], pts[:, 1])
            err_u += float(np.dot(w, np.einsum("qi,qi->q", diff, diff)))
            fv = np.broadcast_to(
                np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float), w.shape
            )
            err_div += float(np.dot(w, (fv - u_h.fbar) ** 2))
    return math.sqrt(err_u), math.sqrt(err_div)


def fit_order(hs, errors):
    """Least-squares slope of ``log(error)`` against ``log(h)``."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if hs.shape != errors.shape or hs.size < 2:
        raise ValueError("need at least two matching (h, error) pairs")
    if np.any(hs <= 0) or np.any(errors <= 0):
        raise ValueError("mesh sizes and errors must be positive")
    return float(np.polyfit(np.log10(hs), np.log10(errors), 1)[0])


#: Column names carried by a convergence report, in output order.
REPORT_COLUMNS = ("p_l2", "p_h1", "u_l2", "div_l2")


@dataclass
class ConvergenceReport:
    """Error table over a mesh ladder plus fitted convergence orders."""

    inv_h: list = field(default_factory=list)
    errors: dict = field(default_factory=lambda: {c: [] for c in REPORT_COLUMNS})

    def add_row(self, inv_h, **errs):
        self.inv_h.append(float(inv_h))
        for c in REPORT_COLUMNS:
            self.errors[c].append(float(errs.get(c, math.nan)))

    def column(self, name):
        return np.array(self.errors[name])

    def has_column(self, name):
        col = self.column(name)
        return len(col) > 0 and not np.any(np.isnan(col))

    def step_orders(self, name):
        """Per-refinement orders ``log(e_prev/e_cur) / log(h_prev/h_cur)``;
        the first entry is NaN."""
        col = self.column(name)
        n = np.asarray(self.inv_h)
        out = [math.nan]
        for i in range(1, len(col)):
            out.append(
                math.log(col[i - 1] / col[i]) / math.log(n[i] / n[i - 1])
            )
        return out

    def fitted_order(self, name):
        """Overall least-squares order of one error column."""
        return fit_order(1.0 / np.asarray(self.inv_h), self.column(name))

    def fitted_orders(self):
        return {
            c: self.fitted_order(c) if self.has_column(c) and len(self.inv_h) > 1 else math.nan
            for c in REPORT_COLUMNS
        }
