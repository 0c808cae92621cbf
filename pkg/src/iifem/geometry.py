"""Interface geometry on unfitted meshes: classification and cut data.

The interface is represented by a level-set function ``phi(x, y)`` that is
negative inside (the minus region) and positive outside.  Each element is
classified as cut or uncut from the level-set signs at its vertices; cut
elements carry the chord between the two edge intersections, the chord
normal, and the two sub-polygons it delimits.

The chord replaces the true curve everywhere downstream; the thin mismatch
region between chord and curve is never meshed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import fan_triangles, polygon_area

#: Intersections closer than this fraction of an edge to a vertex are
#: snapped onto the vertex.
VERTEX_SNAP = 1e-9
#: Level-set vertex values below this fraction of the overall value scale
#: are treated as exact zeros.
VALUE_SNAP = 1e-12
#: Cut elements whose smaller sub-region is below this fraction of the
#: element area are reclassified as uncut on the majority side.
SLIVER_FRACTION = 1e-10


class UnsupportedGeometryError(ValueError):
    """The interface violates the two-crossings-per-element assumption.

    Raised with the offending element index; the remedy is mesh refinement,
    not parameter tuning.
    """

    def __init__(self, element, reason):
        self.element = element
        self.reason = reason
        super().__init__(f"element {element}: {reason}")


def circle_levelset(radius, center=(0.0, 0.0)):
    """Level set of a circle: negative inside, positive outside."""
    cx, cy = center
    r2 = float(radius) ** 2

    def phi(x, y):
        return (x - cx) ** 2 + (y - cy) ** 2 - r2

    return phi


def edge_intersection(p0, p1, levelset, tol=0.0):
    """Root of the level set on the segment p0-p1, if its sign changes.

    Endpoint values with magnitude below ``tol`` count as zero; an endpoint
    at zero is itself the intersection.  A strict sign change is resolved by
    bisection to a relative tolerance of 1e-13 in the segment parameter, and
    roots within 1e-9 of an endpoint are snapped onto it.

    Returns the intersection point, or ``None`` when the sign does not
    change (including a tangential graze that never flips the sign).
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    f0 = float(levelset(p0[0], p0[1]))
    f1 = float(levelset(p1[0], p1[1]))
    if abs(f0) <= tol:
        f0 = 0.0
    if abs(f1) <= tol:
        f1 = 0.0
    if f0 == 0.0 and f1 == 0.0:
        return None
    if f0 == 0.0:
        return p0.copy()
    if f1 == 0.0:
        return p1.copy()
    if (f0 > 0.0) == (f1 > 0.0):
        return None

    a, b = 0.0, 1.0
    fa = f0
    while b - a > 1e-13:
        m = 0.5 * (a + b)
        fm = float(levelset(*(p0 + m * (p1 - p0))))
        if fm == 0.0:
            a = b = m
            break
        if (fm > 0.0) == (fa > 0.0):
            a, fa = m, fm
        else:
            b = m
    t = 0.5 * (a + b)
    if t < VERTEX_SNAP:
        return p0.copy()
    if t > 1.0 - VERTEX_SNAP:
        return p1.copy()
    return p0 + t * (p1 - p0)


@dataclass
class CutInfo:
    """Per-element interface data.

    ``side`` is +1/-1 for uncut elements (sign of the level set there) and 0
    for interface elements.  Interface elements carry the chord endpoints D
    and E with the local edges hosting them, the unit chord normal oriented
    from the minus to the plus side, the local index of the vertex the chord
    separates, and the two sub-polygons (counter-clockwise) with their areas.
    """

    tri: np.ndarray
    side: int
    cut_edges: tuple | None = None
    point_d: np.ndarray | None = None
    point_e: np.ndarray | None = None
    normal: np.ndarray | None = None
    isolated: int | None = None
    poly_plus: np.ndarray | None = None
    poly_minus: np.ndarray | None = None
    area_plus: float = 0.0
    area_minus: float = 0.0

    @property
    def is_interface(self):
        return self.side == 0

    @property
    def area(self):
        return self.area_plus + self.area_minus

    def chord_side(self, points):
        """+1/-1 side of the chord line; points on the chord count as plus.

        For uncut elements the element's own side tag is returned.
        """
        points = np.asarray(points, dtype=float)
        if not self.is_interface:
            return np.full(points.shape[:-1], self.side, dtype=int)
        s = (points - self.point_d) @ self.normal
        return np.where(s >= 0.0, 1, -1)

    def subcells(self):
        """Sub-triangles tiling the element, each tagged with its side.

        Interface elements return the fan triangulations of both
        sub-polygons (the quadrilateral is split by the diagonal from D);
        uncut elements return themselves.
        """
        if not self.is_interface:
            return [(self.tri, self.side)]
        cells = [(t, 1) for t in fan_triangles(self.poly_plus)]
        cells += [(t, -1) for t in fan_triangles(self.poly_minus)]
        return cells


def _dedup_polygon(points):
    """Drop consecutive (nearly) duplicate vertices, cyclically."""
    out = []
    n = len(points)
    scale = max(np.max(np.abs(points)), 1.0)
    for i in range(n):
        p = points[i]
        q = points[(i + 1) % n]
        if np.max(np.abs(p - q)) > 1e-14 * scale:
            out.append(p)
    return np.array(out)


def _interface_cut(tri, isolated, point_d, point_e, isolated_sign):
    """Assemble a CutInfo for a chord separating vertex ``isolated``.

    ``point_d`` lies on the edge from the isolated vertex to the next one
    (local edge (isolated+2) % 3), ``point_e`` on the edge from the previous
    vertex to the isolated one (local edge (isolated+1) % 3);
    ``isolated_sign`` is the level-set sign at the isolated vertex.
    """
    k = isolated
    vk = tri[k]
    corner = _dedup_polygon(np.array([vk, point_d, point_e]))
    rest = _dedup_polygon(
        np.array([point_d, tri[(k + 1) % 3], tri[(k + 2) % 3], point_e])
    )
    area_corner = polygon_area(corner) if len(corner) >= 3 else 0.0
    area_rest = polygon_area(rest) if len(rest) >= 3 else 0.0

    chord = point_e - point_d
    normal = np.array([chord[1], -chord[0]])
    normal /= np.linalg.norm(normal)
    # Orient from the minus side to the plus side.
    toward_isolated = np.dot(vk - point_d, normal)
    if (isolated_sign > 0) != (toward_isolated > 0):
        normal = -normal

    if isolated_sign > 0:
        poly_plus, area_plus = corner, area_corner
        poly_minus, area_minus = rest, area_rest
    else:
        poly_plus, area_plus = rest, area_rest
        poly_minus, area_minus = corner, area_corner

    return CutInfo(
        tri=tri,
        side=0,
        cut_edges=((k + 2) % 3, (k + 1) % 3),
        point_d=np.asarray(point_d, dtype=float),
        point_e=np.asarray(point_e, dtype=float),
        normal=normal,
        isolated=k,
        poly_plus=poly_plus,
        poly_minus=poly_minus,
        area_plus=float(area_plus),
        area_minus=float(area_minus),
    )


def cut_from_edge_points(tri, edge_d, point_d, edge_e, point_e, isolated_sign):
    """Build the CutInfo of a chord crossing two distinct element edges.

    Parameters
    ----------
    tri : (3, 2) array
        Element vertices, counter-clockwise.
    edge_d, edge_e : int
        Local edges (opposite the same-numbered vertex) hosting the chord
        endpoints; must differ.
    point_d, point_e : 2-vectors
        Chord endpoints on those edges.
    isolated_sign : int
        Level-set sign (+1/-1) at the vertex shared by the two cut edges.

    The endpoints are relabelled, if needed, so that D lies on the edge
    running from the isolated vertex to the next vertex.
    """
    tri = np.asarray(tri, dtype=float)
    if edge_d == edge_e:
        raise ValueError("chord endpoints must lie on two distinct edges")
    if isolated_sign not in (-1, 1):
        raise ValueError("isolated_sign must be +1 or -1")
    k = 3 - edge_d - edge_e  # vertex shared by the two cut edges
    if edge_d != (k + 2) % 3:
        point_d, point_e = point_e, point_d
    return _interface_cut(
        tri,
        k,
        np.asarray(point_d, dtype=float),
        np.asarray(point_e, dtype=float),
        isolated_sign,
    )


def _vertex_chord_cut(tri, vertex, point, signs):
    """CutInfo for a chord from a vertex on the interface to the opposite edge."""
    c = vertex
    a, b = (c + 1) % 3, (c + 2) % 3
    first = _dedup_polygon(np.array([tri[c], tri[a], point]))
    second = _dedup_polygon(np.array([tri[c], point, tri[b]]))
    area_first = polygon_area(first) if len(first) >= 3 else 0.0
    area_second = polygon_area(second) if len(second) >= 3 else 0.0

    point_d = tri[c]
    chord = point - point_d
    normal = np.array([chord[1], -chord[0]])
    normal /= np.linalg.norm(normal)
    if (signs[a] > 0) != (np.dot(tri[a] - point_d, normal) > 0):
        normal = -normal

    if signs[a] > 0:
        poly_plus, area_plus = first, area_first
        poly_minus, area_minus = second, area_second
    else:
        poly_plus, area_plus = second, area_second
        poly_minus, area_minus = first, area_first

    return CutInfo(
        tri=tri,
        side=0,
        cut_edges=(min(a, b), c),  # D sits at vertex c, on edge min(a, b); E on edge c
        point_d=point_d.copy(),
        point_e=np.asarray(point, dtype=float),
        normal=normal,
        isolated=a if signs[a] < 0 else b,
        poly_plus=poly_plus,
        poly_minus=poly_minus,
        area_plus=float(area_plus),
        area_minus=float(area_minus),
    )


def _majority_cut(tri, cut):
    """Collapse a sliver cut onto an uncut element of the majority side."""
    side = 1 if cut.area_plus >= cut.area_minus else -1
    return CutInfo(tri=tri, side=side)


def classify_elements(mesh, levelset, collect_violations=False):
    """Classify every element against the level set.

    Returns a list of :class:`CutInfo`, one per triangle.  Elements the
    interface merely touches (a vertex, or a whole edge) are uncut; an
    interface passing through a vertex and out the opposite edge yields a
    cut element whose chord endpoint D sits at that vertex.

    With ``collect_violations=True`` the return value is
    ``(cuts, violations)`` where violations is a list of
    ``(element, reason)`` pairs and the offending elements are tagged by
    their barycenter side instead of raising.
    """
    verts = mesh.vertices
    phi_v = np.asarray(levelset(verts[:, 0], verts[:, 1]), dtype=float)
    if phi_v.shape != (len(verts),):
        phi_v = np.array(
            [float(levelset(x, y)) for x, y in verts], dtype=float
        )
    scale = float(np.max(np.abs(phi_v)))
    snap = VALUE_SNAP * (scale if scale > 0 else 1.0)
    phi_v = np.where(np.abs(phi_v) <= snap, 0.0, phi_v)

    # One intersection per edge, shared by both incident elements.  Roots
    # that bisection snaps onto a vertex zero out that vertex instead, which
    # may invalidate neighbouring roots, so iterate to a fixed point.
    n_edges = mesh.n_edges
    roots = [None] * n_edges
    pending = list(range(n_edges))
    while pending:
        changed_vertices = []
        for e in pending:
            a, b = mesh.edges[e]
            fa, fb = phi_v[a], phi_v[b]
            if fa == 0.0 or fb == 0.0 or (fa > 0) == (fb > 0):
                roots[e] = None
                continue
            pa, pb = verts[a], verts[b]
            point = edge_intersection(pa, pb, levelset, tol=0.0)
            if point is None:
                roots[e] = None
            elif np.array_equal(point, pa):
                changed_vertices.append(a)
                roots[e] = None
            elif np.array_equal(point, pb):
                changed_vertices.append(b)
                roots[e] = None
            else:
                roots[e] = point
        if not changed_vertices:
            break
        phi_v[changed_vertices] = 0.0
        affected = set()
        for v in changed_vertices:
            affected.update(np.nonzero((mesh.edges == v).any(axis=1))[0])
        pending = sorted(affected)

    bary = verts[mesh.triangles].mean(axis=1)
    phi_b = np.asarray(levelset(bary[:, 0], bary[:, 1]), dtype=float)
    if phi_b.shape != (mesh.n_triangles,):
        phi_b = np.array([float(levelset(x, y)) for x, y in bary], dtype=float)

    mids = 0.5 * (verts[mesh.edges[:, 0]] + verts[mesh.edges[:, 1]])
    phi_m = np.asarray(levelset(mids[:, 0], mids[:, 1]), dtype=float)
    if phi_m.shape != (n_edges,):
        phi_m = np.array([float(levelset(x, y)) for x, y in mids], dtype=float)

    cuts = []
    violations = []

    def violate(t, reason, tri):
        if collect_violations:
            violations.append((t, reason))
            side = 1 if phi_b[t] >= 0 else -1
            cuts.append(CutInfo(tri=tri, side=side))
        else:
            raise UnsupportedGeometryError(t, reason)

    for t in range(mesh.n_triangles):
        tri = mesh.triangle_points(t)
        vids = mesh.triangles[t]
        signs = np.sign(phi_v[vids]).astype(int)
        eids = mesh.triangle_edges[t]
        cut_locals = [k for k in range(3) if roots[eids[k]] is not None]

        # Probe the midpoints of uncrossed edges: a sign flip there means
        # the interface crosses that edge twice.
        for k in range(3):
            if k in cut_locals:
                continue
            e = eids[k]
            a, b = mesh.edges[e]
            if phi_v[a] != 0.0 and (phi_v[a] > 0) != (phi_m[e] > 0) and abs(
                phi_m[e]
            ) > snap:
                violate(t, f"interface crosses local edge {k} twice", tri)
                break
        else:
            if len(cut_locals) == 0:
                if (signs > 0).any() and (signs < 0).any():
                    violate(t, "inconsistent vertex signs without edge crossings", tri)
                    continue
                nonzero = signs[signs != 0]
                if len(nonzero):
                    side = int(nonzero[0])
                    if abs(phi_b[t]) > snap and (phi_b[t] > 0) != (side > 0):
                        violate(t, "interface encloses the element interior", tri)
                        continue
                else:
                    side = 1 if phi_b[t] >= 0 else -1
                cuts.append(CutInfo(tri=tri, side=side))
            elif len(cut_locals) == 1:
                k = cut_locals[0]
                if signs[k] != 0:
                    violate(t, "single edge crossing without a vertex on the interface", tri)
                    continue
                cut = _vertex_chord_cut(tri, k, roots[eids[k]], signs)
                cuts.append(_finish_cut(tri, cut))
            elif len(cut_locals) == 2:
                ka, kb = cut_locals
                iso = 3 - ka - kb
                if signs[iso] == 0:
                    violate(t, "crossed edges meet at a vertex on the interface", tri)
                    continue
                cut = cut_from_edge_points(
                    tri, ka, roots[eids[ka]], kb, roots[eids[kb]], int(signs[iso])
                )
                cuts.append(_finish_cut(tri, cut))
            else:
                violate(t, "interface crosses all three edges", tri)

    if collect_violations:
        return cuts, violations
    return cuts


def _finish_cut(tri, cut):
    """Apply the sliver policy to a freshly built interface cut."""
    total = cut.area_plus + cut.area_minus
    if min(cut.area_plus, cut.area_minus) < SLIVER_FRACTION * total:
        return _majority_cut(tri, cut)
    return cut
