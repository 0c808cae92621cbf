"""Global assembly over edge-average degrees of freedom.

One global unknown per mesh edge; boundary edges are Dirichlet and carry the
edge average of the boundary data.  Stiffness entries on cut elements are
exact: the basis gradients are piecewise constant, so each local entry is a
two-term sum of gradient products weighted by the sub-region areas.
Dirichlet data is imposed by elimination, which keeps the reduced system
symmetric positive definite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .quadrature import (
    GAUSS3_NODES,
    GAUSS3_WEIGHTS,
    integrate_subcells,
    polygon_area,
    triangle_area,
    triangle_rule,
)

LOAD_MODES = ("pointwise", "cellmean")


@dataclass(frozen=True)
class DofMap:
    """Edge-indexed degrees of freedom split into free and Dirichlet sets."""

    n_edges: int
    free_index: np.ndarray  # -1 on Dirichlet edges, else 0..n_free-1
    free_edges: np.ndarray
    dirichlet_edges: np.ndarray

    @property
    def n_free(self):
        return len(self.free_edges)


@dataclass
class LinearSystem:
    """Reduced SPD system over the free edge-average unknowns."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    dofmap: DofMap
    dirichlet_values: np.ndarray

    def expand(self, x_free):
        """Scatter a free-DOF solution into the full per-edge vector."""
        full = np.empty(self.dofmap.n_edges)
        full[self.dofmap.free_edges] = x_free
        full[self.dofmap.dirichlet_edges] = self.dirichlet_values
        return full


def build_dofmap(mesh):
    """One DOF per edge; boundary edges are Dirichlet."""
    free = ~mesh.boundary_edge
    free_edges = np.nonzero(free)[0]
    free_index = np.full(mesh.n_edges, -1, dtype=np.int64)
    free_index[free_edges] = np.arange(len(free_edges))
    return DofMap(
        n_edges=mesh.n_edges,
        free_index=free_index,
        free_edges=free_edges,
        dirichlet_edges=np.nonzero(mesh.boundary_edge)[0],
    )


def local_stiffness(basis, cut, beta_minus=None, beta_plus=None):
    """Exact 3x3 element stiffness block ``int_T beta grad(phi_i).grad(phi_j)``."""
    bm = basis.beta_minus if beta_minus is None else beta_minus
    bp = basis.beta_plus if beta_plus is None else beta_plus
    if cut.is_interface:
        gp = basis.gradients(+1)
        gm = basis.gradients(-1)
        return bp * (gp @ gp.T) * cut.area_plus + bm * (gm @ gm.T) * cut.area_minus
    g = basis.gradients(cut.side)
    beta = bp if cut.side > 0 else bm
    return beta * (g @ g.T) * abs(triangle_area(cut.tri))


def basis_integrals(basis, cut):
    """Exact integrals ``int_T phi_k`` of the three basis functions.

    Piecewise-affine integrands: each sub-polygon contributes its area times
    the value at its centroid.
    """
    out = np.zeros(3)
    for tri, side in cut.subcells():
        area = abs(triangle_area(tri))
        centroid = tri.mean(axis=0)
        for k, fn in enumerate(basis.functions):
            out[k] += area * fn.value(centroid, side)
    return out


def assemble_stiffness(mesh, cuts, bases, beta_minus, beta_plus):
    """Symmetric stiffness matrix over all edge DOFs (CSR)."""
    if len(cuts) != mesh.n_triangles or len(bases) != mesh.n_triangles:
        raise ValueError("cuts and bases must have one entry per triangle")
    nt = mesh.n_triangles
    blocks = np.empty((nt, 3, 3))
    for t in range(nt):
        blocks[t] = local_stiffness(bases[t], cuts[t], beta_minus, beta_plus)
    rows = np.repeat(mesh.triangle_edges, 3, axis=1).ravel()
    cols = np.tile(mesh.triangle_edges, (1, 3)).ravel()
    mat = sp.coo_matrix(
        (blocks.ravel(), (rows, cols)), shape=(mesh.n_edges, mesh.n_edges)
    )
    return mat.tocsr()


def element_mean(cut, f):
    """Cell mean of ``f`` by the shared degree-4 sub-region quadrature."""
    total = integrate_subcells(cut.subcells(), f)
    area = sum(abs(triangle_area(tri)) for tri, _ in cut.subcells())
    return total / area


def assemble_load(mesh, cuts, bases, f, mode="pointwise"):
    """Load vector ``(f, phi_k)`` over all edge DOFs.

    ``pointwise`` integrates ``f * phi_k`` by the degree-4 rule on the
    sub-triangles of each sub-region.  ``cellmean`` first replaces ``f`` by
    its per-element mean (same quadrature) and then integrates exactly.
    """
    if mode not in LOAD_MODES:
        raise ValueError(f"unknown load mode {mode!r}; expected one of {LOAD_MODES}")
    load = np.zeros(mesh.n_edges)
    for t in range(mesh.n_triangles):
        cut = cuts[t]
        basis = bases[t]
        local = np.zeros(3)
        if mode == "cellmean":
            local = element_mean(cut, f) * basis_integrals(basis, cut)
        else:
            for tri, side in cut.subcells():
                pts, w = triangle_rule(tri)
                fv = np.broadcast_to(
                    np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float), w.shape
                )
                for k, fn in enumerate(basis.functions):
                    local[k] += np.dot(w * fv, fn.value(pts, side))
        load[mesh.triangle_edges[t]] += local
    return load


def boundary_edge_average(mesh, edge, g):
    """Average of the boundary data over one edge, by 3-point Gauss."""
    p0, p1 = mesh.edge_points(edge)
    pts = p0[None, :] + GAUSS3_NODES[:, None] * (p1 - p0)[None, :]
    vals = np.broadcast_to(
        np.asarray(g(pts[:, 0], pts[:, 1]), dtype=float), GAUSS3_WEIGHTS.shape
    )
    return float(np.dot(GAUSS3_WEIGHTS, vals))


def apply_dirichlet(stiffness, load, mesh, dofmap, g=None):
    """Eliminate the Dirichlet edges and fold their lift into the load.

    ``g`` is the boundary data (``None`` means homogeneous); each Dirichlet
    DOF takes the 3-point Gauss average of ``g`` over its edge.
    """
    if g is None:
        values = np.zeros(len(dofmap.dirichlet_edges))
    else:
        values = np.array(
            [boundary_edge_average(mesh, e, g) for e in dofmap.dirichlet_edges]
        )
    free = dofmap.free_edges
    diri = dofmap.dirichlet_edges
    csr = stiffness.tocsr()
    matrix = csr[free][:, free]
    rhs = load[free] - csr[free][:, diri] @ values
    return LinearSystem(matrix=matrix, rhs=rhs, dofmap=dofmap, dirichlet_values=values)


def dump_matrix(matrix, path):
    """Write a sparse matrix in coordinate text format, one 'i j value' per line."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{i} {j} {float(v)!r}\n")
