"""Uniform unfitted triangular meshes with edge enumeration.

The background grid is a uniform nx-by-ny rectangular partition of the
domain; every rectangle is cut along its lower-left to upper-right diagonal,
giving 2*nx*ny congruent right triangles.  Edges carry the global degrees of
freedom downstream, so their enumeration is deterministic: edges are numbered
in order of first appearance while sweeping triangles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Mesh:
    """Uniform right-triangle mesh of a rectangle.

    Attributes
    ----------
    nx, ny : int
        Subdivision counts per axis.
    domain : tuple
        ``(x0, x1, y0, y1)`` bounds of the rectangle.
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array
        Vertex indices, counter-clockwise.
    edges : (ne, 2) int array
        Vertex index pairs in order of first appearance.
    triangle_edges : (nt, 3) int array
        Global edge index of local edge k; local edge k is opposite local
        vertex k.
    edge_triangles : (ne, 2) int array
        Incident triangles, -1 padding for boundary edges.
    boundary_edge : (ne,) bool array
    h : float
        Mesh size, the maximum edge length (the diagonal).
    """

    nx: int
    ny: int
    domain: tuple
    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    triangle_edges: np.ndarray
    edge_triangles: np.ndarray
    boundary_edge: np.ndarray
    h: float

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def cell_size(self):
        x0, x1, y0, y1 = self.domain
        return max((x1 - x0) / self.nx, (y1 - y0) / self.ny)

    def triangle_points(self, t):
        """Vertex coordinates of triangle ``t`` as a (3, 2) array."""
        return self.vertices[self.triangles[t]]

    def edge_points(self, e):
        """Endpoint coordinates of edge ``e`` as a (2, 2) array."""
        return self.vertices[self.edges[e]]

    def edge_lengths(self):
        """(ne,) array of edge lengths."""
        p = self.vertices[self.edges]
        return np.linalg.norm(p[:, 1] - p[:, 0], axis=1)


def build_uniform_mesh(nx, ny, domain=(0.0, 1.0, 0.0, 1.0)):
    """Build the uniform diagonal-cut triangulation of a rectangle.

    Parameters
    ----------
    nx, ny : int
        Number of cells per axis, at least 1.
    domain : tuple
        ``(x0, x1, y0, y1)``; must be non-degenerate.

    Returns
    -------
    Mesh
    """
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1:
        raise ValueError(f"subdivision counts must be >= 1, got nx={nx}, ny={ny}")
    x0, x1, y0, y1 = (float(v) for v in domain)
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate domain rectangle {domain}")

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)  # row j = constant y
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    t = 0
    for j in range(ny):
        for i in range(nx):
            ll, lr = vid(i, j), vid(i + 1, j)
            ur, ul = vid(i + 1, j + 1), vid(i, j + 1)
            triangles[t] = (ll, lr, ur)      # below the diagonal
            triangles[t + 1] = (ll, ur, ul)  # above the diagonal
            t += 2

    # Edges in order of first appearance; local edge k is opposite vertex k.
    edge_index = {}
    edges = []
    triangle_edges = np.empty_like(triangles)
    for t, (a, b, c) in enumerate(triangles):
        for k, (u, v) in enumerate(((b, c), (c, a), (a, b))):
            key = (u, v) if u < v else (v, u)
            e = edge_index.get(key)
            if e is None:
                e = len(edges)
                edge_index[key] = e
                edges.append(key)
            triangle_edges[t, k] = e
    edges = np.array(edges, dtype=np.int64)

    edge_triangles = np.full((len(edges), 2), -1, dtype=np.int64)
    for t in range(len(triangles)):
        for e in triangle_edges[t]:
            if edge_triangles[e, 0] < 0:
                edge_triangles[e, 0] = t
            else:
                edge_triangles[e, 1] = t
    boundary_edge = edge_triangles[:, 1] < 0

    dx, dy = (x1 - x0) / nx, (y1 - y0) / ny
    return Mesh(
        nx=nx,
        ny=ny,
        domain=(x0, x1, y0, y1),
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        triangle_edges=triangle_edges,
        edge_triangles=edge_triangles,
        boundary_edge=boundary_edge,
        h=float(np.hypot(dx, dy)),
    )


def dump_mesh(mesh, path):
    """Write a plain-text mesh dump: one 'v x y' line per vertex followed by
    one 't i j k' line per triangle."""
    with open(path, "w", encoding="utf-8") as fh:
        for x, y in mesh.vertices:
            fh.write(f"v {float(x)!r} {float(y)!r}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"t {i} {j} {k}\n")
