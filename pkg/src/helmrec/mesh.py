"""Conforming triangulations: builders, red refinement, edge geometry, quality.

Meshes are immutable after construction.  Nodes are stored as an (n, 2)
float array, triangles as a (t, 3) int array with counterclockwise vertex
order.  Edge connectivity, boundary flags and the mesh size are derived at
construction time and validated (positive areas, Euler relation, at most
two triangles per edge).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class Point2(NamedTuple):
    x: float
    y: float


class MeshError(ValueError):
    """Invalid mesh input (bad polygon, non-conforming data, ...)."""


def _cross2(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _signed_areas(nodes, triangles):
    p0 = nodes[triangles[:, 0]]
    p1 = nodes[triangles[:, 1]]
    p2 = nodes[triangles[:, 2]]
    return 0.5 * _cross2(p1 - p0, p2 - p0)


class Mesh:
    """Immutable conforming triangulation.

    Attributes
    ----------
    nodes : (n, 2) float array
    triangles : (t, 3) int array, counterclockwise
    edges : (e, 2) int array, each row sorted, rows in lexicographic order
    edge_tris : (e, 2) int array, adjacent triangle indices (-1 if none)
    tri_edges : (t, 3) int array, edge index opposite local vertex i
    boundary_edges : (e,) bool mask
    boundary_nodes : (n,) bool mask
    corner_nodes : int array, vertices of the polygonal domain
    h_max : float, longest edge length
    """

    def __init__(self, nodes, triangles, corner_nodes=None):
        nodes = np.ascontiguousarray(nodes, dtype=float)
        triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise MeshError("nodes must be an (n, 2) array")
        if not np.all(np.isfinite(nodes)):
            raise MeshError("node coordinates must be finite")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise MeshError("triangles must be a (t, 3) array")

        areas = _signed_areas(nodes, triangles)
        if np.any(areas <= 0):
            bad = int(np.argmin(areas))
            raise MeshError(
                f"triangle {bad} is not counterclockwise (signed area {areas[bad]:g})"
            )

        self.nodes = nodes
        self.triangles = triangles
        self.areas = areas
        self._build_edges()

        self.h_max = float(self.edge_lengths.max())
        if corner_nodes is None:
            corner_nodes = _detect_corners(self)
        self.corner_nodes = np.asarray(sorted(int(i) for i in corner_nodes), dtype=np.int64)
        self._cache = {}

        self.nodes.setflags(write=False)
        self.triangles.setflags(write=False)

        n, e, t = self.num_nodes, len(self.edges), self.num_triangles
        if n - e + t != 1:
            raise MeshError(f"Euler relation violated: {n} - {e} + {t} != 1")

    def _build_edges(self):
        t = self.triangles
        # local edge i is opposite local vertex i
        raw = np.concatenate([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]])
        raw_sorted = np.sort(raw, axis=1)
        edges, inverse = np.unique(raw_sorted, axis=0, return_inverse=True)
        counts = np.bincount(inverse, minlength=len(edges))
        if counts.max() > 2:
            raise MeshError("non-conforming mesh: an edge has more than two triangles")

        tri_of_entry = np.tile(np.arange(self.num_triangles), 3)
        edge_tris = np.full((len(edges), 2), -1, dtype=np.int64)
        order = np.argsort(inverse, kind="stable")
        sorted_inv = inverse[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = sorted_inv[1:] != sorted_inv[:-1]
        edge_tris[sorted_inv, np.where(first, 0, 1)] = tri_of_entry[order]

        self.edges = edges
        self.edge_tris = edge_tris
        self.tri_edges = inverse.reshape(3, self.num_triangles).T.copy()
        self.boundary_edges = edge_tris[:, 1] < 0
        self.boundary_nodes = np.zeros(self.num_nodes, dtype=bool)
        self.boundary_nodes[edges[self.boundary_edges].ravel()] = True
        d = self.nodes[edges[:, 1]] - self.nodes[edges[:, 0]]
        self.edge_lengths = np.hypot(d[:, 0], d[:, 1])

    @property
    def num_nodes(self):
        return self.nodes.shape[0]

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    def __repr__(self):
        return (
            f"Mesh({self.num_nodes} nodes, {self.num_triangles} triangles, "
            f"h_max={self.h_max:.4g})"
        )


def _detect_corners(mesh, angle_tol=1e-6):
    """Boundary nodes where the two incident boundary edges are not collinear."""
    bedges = mesh.edges[mesh.boundary_edges]
    incident = {}
    for a, b in bedges:
        incident.setdefault(int(a), []).append(int(b))
        incident.setdefault(int(b), []).append(int(a))
    corners = []
    for node, nbrs in incident.items():
        if len(nbrs) != 2:
            corners.append(node)
            continue
        u = mesh.nodes[nbrs[0]] - mesh.nodes[node]
        v = mesh.nodes[nbrs[1]] - mesh.nodes[node]
        cross = abs(u[0] * v[1] - u[1] * v[0])
        if cross > angle_tol * np.hypot(*u) * np.hypot(*v):
            corners.append(node)
    return corners


# ---------------------------------------------------------------------------
# structured builders


def build_hexagon_mesh(m):
    """Mesh the unit regular hexagon (side 1, center origin) with 6*m**2
    equilateral triangles of side 1/m.
    """
    if m < 1:
        raise MeshError("m must be >= 1")
    a = np.array([1.0 / m, 0.0])
    b = np.array([0.5 / m, 0.5 * np.sqrt(3.0) / m])

    def inside(i, j):
        return abs(i) <= m and abs(j) <= m and abs(i + j) <= m

    index = {}
    coords = []
    for i in range(-m, m + 1):
        for j in range(-m, m + 1):
            if inside(i, j):
                index[(i, j)] = len(coords)
                coords.append(i * a + j * b)

    tris = []
    for i in range(-m, m + 1):
        for j in range(-m, m + 1):
            if inside(i, j) and inside(i + 1, j) and inside(i, j + 1):
                tris.append((index[i, j], index[i + 1, j], index[i, j + 1]))
            if inside(i + 1, j) and inside(i + 1, j + 1) and inside(i, j + 1):
                tris.append((index[i + 1, j], index[i + 1, j + 1], index[i, j + 1]))

    corners = [index[c] for c in [(m, 0), (0, m), (-m, m), (-m, 0), (0, -m), (m, -m)]]
    return Mesh(np.array(coords), np.array(tris), corner_nodes=corners)


def build_square_mesh(m, domain="unit_square", diagonal="north_east"):
    """Regular-pattern triangulation of the unit square or the L-shaped
    domain [0,1]^2 minus [0.5,1]x[0.5,1].

    Each grid cell is split along the chosen diagonal (``north_east`` runs
    from the lower-left to the upper-right corner).  For ``l_shape`` the
    subdivision count m must be even so the reentrant corner lies on the grid.
    """
    if m < 1:
        raise MeshError("m must be >= 1")
    if domain not in ("unit_square", "l_shape"):
        raise MeshError(f"unknown domain {domain!r}")
    if diagonal not in ("north_east", "north_west"):
        raise MeshError(f"unknown diagonal {diagonal!r}")
    if domain == "l_shape" and m % 2 != 0:
        raise MeshError("l_shape requires even m")

    xs = np.arange(m + 1) / m
    grid = np.array([(x, y) for y in xs for x in xs])
    idx = lambda i, j: j * (m + 1) + i

    half = m // 2
    tris = []
    for j in range(m):
        for i in range(m):
            if domain == "l_shape" and i >= half and j >= half:
                continue
            v00, v10 = idx(i, j), idx(i + 1, j)
            v01, v11 = idx(i, j + 1), idx(i + 1, j + 1)
            if diagonal == "north_east":
                tris.append((v00, v10, v11))
                tris.append((v00, v11, v01))
            else:
                tris.append((v00, v10, v01))
                tris.append((v10, v11, v01))

    tris = np.array(tris)
    used = np.unique(tris)
    remap = -np.ones(grid.shape[0], dtype=np.int64)
    remap[used] = np.arange(len(used))
    nodes = grid[used]
    tris = remap[tris]

    if domain == "unit_square":
        corner_pts = [(0, 0), (1, 0), (1, 1), (0, 1)]
    else:
        corner_pts = [(0, 0), (1, 0), (1, 0.5), (0.5, 0.5), (0.5, 1), (0, 1)]
    corners = [
        int(np.argmin(np.hypot(nodes[:, 0] - x, nodes[:, 1] - y))) for x, y in corner_pts
    ]
    return Mesh(nodes, tris, corner_nodes=corners)


L_SHAPE_POLYGON = [
    Point2(0.0, 0.0),
    Point2(1.0, 0.0),
    Point2(1.0, 0.5),
    Point2(0.5, 0.5),
    Point2(0.5, 1.0),
    Point2(0.0, 1.0),
]

UNIT_SQUARE_POLYGON = [Point2(0.0, 0.0), Point2(1.0, 0.0), Point2(1.0, 1.0), Point2(0.0, 1.0)]


# ---------------------------------------------------------------------------
# Delaunay generation (Bowyer-Watson)


def _point_in_polygon(points, polygon):
    """Ray-casting test, vectorized over points (undefined exactly on the boundary)."""
    x, y = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    n = len(polygon)
    for i in range(n):
        x0, y0 = polygon[i]
        x1, y1 = polygon[(i + 1) % n]
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < np.where(crosses, xi, np.inf))
    return inside


def _dist_to_polygon(points, polygon):
    d = np.full(len(points), np.inf)
    n = len(polygon)
    for i in range(n):
        a = np.asarray(polygon[i], dtype=float)
        b = np.asarray(polygon[(i + 1) % n], dtype=float)
        ab = b - a
        t = np.clip((points - a) @ ab / (ab @ ab), 0.0, 1.0)
        proj = a + t[:, None] * ab
        d = np.minimum(d, np.hypot(*(points - proj).T))
    return d


def _circumcircle(a, b, c):
    """Circumcenter and squared radius, computed relative to vertex a."""
    bx, by = b[0] - a[0], b[1] - a[1]
    cx, cy = c[0] - a[0], c[1] - a[1]
    d = 2.0 * (bx * cy - by * cx)
    if d == 0.0:
        return (np.inf, np.inf), np.inf
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    ux = (cy * b2 - by * c2) / d
    uy = (bx * c2 - cx * b2) / d
    return (a[0] + ux, a[1] + uy), ux * ux + uy * uy


def _bowyer_watson(points):
    """Delaunay triangulation of a point set by incremental insertion.

    Returns a (t, 3) int array of CCW triangles.  Cocircular ties are
    resolved by the strict in-circle test; the result is a valid Delaunay
    triangulation up to floating-point tolerance.
    """
    pts = np.asarray(points, dtype=float)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    center = 0.5 * (lo + hi)
    span = max(hi[0] - lo[0], hi[1] - lo[1], 1e-12)
    big = 64.0 * span
    sv = np.array(
        [center + [-big, -big], center + [big, -big], center + [0.0, 2.0 * big]]
    )
    allp = np.vstack([pts, sv])
    ns = len(pts)

    tris = [(ns, ns + 1, ns + 2)]
    cc, rr = _circumcircle(allp[ns], allp[ns + 1], allp[ns + 2])
    centers = [cc]
    radii2 = [rr]

    for ip in range(ns):
        p = allp[ip]
        carr = np.asarray(centers)
        d2 = (carr[:, 0] - p[0]) ** 2 + (carr[:, 1] - p[1]) ** 2
        bad_mask = d2 < np.asarray(radii2)
        bad_idx = np.nonzero(bad_mask)[0]
        if not len(bad_idx):
            raise MeshError("Delaunay insertion failed: point outside all circumcircles")
        # cavity boundary: directed edges of bad triangles not shared by two of them
        edge_count = {}
        for bi in bad_idx:
            t = tris[bi]
            for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                key = (min(e), max(e))
                edge_count[key] = edge_count.get(key, 0) + 1
        boundary = []
        for bi in bad_idx:
            t = tris[bi]
            for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                if edge_count[(min(e), max(e))] == 1:
                    boundary.append(e)

        keep = ~bad_mask
        tris = [t for t, k in zip(tris, keep) if k]
        centers = [c for c, k in zip(centers, keep) if k]
        radii2 = [r for r, k in zip(radii2, keep) if k]
        for e in boundary:
            tris.append((e[0], e[1], ip))
            cc, rr = _circumcircle(allp[e[0]], allp[e[1]], allp[ip])
            centers.append(cc)
            radii2.append(rr)

    tris = [t for t in tris if max(t) < ns]
    out = np.array(tris, dtype=np.int64)
    areas = _signed_areas(allp, out)
    flip = areas < 0
    out[flip] = out[flip][:, [0, 2, 1]]
    return out


def _polygon_boundary_points(polygon, target_h):
    pts = []
    n = len(polygon)
    for i in range(n):
        a = np.asarray(polygon[i], dtype=float)
        b = np.asarray(polygon[(i + 1) % n], dtype=float)
        length = np.hypot(*(b - a))
        k = max(1, int(np.ceil(length / target_h)))
        for j in range(k):
            pts.append(a + (b - a) * (j / k))
    return np.array(pts)


def delaunay_mesh(polygon, target_h, seed=0):
    """Conforming Delaunay triangulation of a simple CCW polygon.

    The boundary is subdivided at spacing <= target_h; interior points are
    placed on a jittered grid (seeded) and the set is triangulated by
    Bowyer-Watson insertion.  Up to three Laplacian smoothing sweeps move
    interior points, re-triangulating after each sweep so the final mesh
    keeps the empty-circumcircle property.
    """
    poly = np.array([(p[0], p[1]) for p in polygon], dtype=float)
    if len(poly) < 3:
        raise MeshError("polygon needs at least 3 vertices")
    if len(np.unique(poly.round(14), axis=0)) != len(poly):
        raise MeshError("degenerate polygon: repeated vertices")
    area2 = 0.0
    for i in range(len(poly)):
        a, b = poly[i], poly[(i + 1) % len(poly)]
        area2 += a[0] * b[1] - a[1] * b[0]
    if area2 <= 1e-14:
        raise MeshError("degenerate polygon: not simple CCW with positive area")
    if target_h <= 0:
        raise MeshError("target_h must be positive")

    bpts = _polygon_boundary_points(poly, target_h)
    n_boundary = len(bpts)

    rng = np.random.default_rng(seed)
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    s = target_h
    gx = np.arange(lo[0] + s, hi[0] - 0.25 * s, s)
    gy = np.arange(lo[1] + s, hi[1] - 0.25 * s, s)
    gridpts = np.array([(x, y) for y in gy for x in gx])
    if len(gridpts):
        gridpts = gridpts + rng.uniform(-0.2 * s, 0.2 * s, size=gridpts.shape)
        keep = _point_in_polygon(gridpts, poly) & (_dist_to_polygon(gridpts, poly) >= 0.45 * s)
        interior = gridpts[keep]
    else:
        interior = np.zeros((0, 2))

    rng_order = rng.permutation(len(interior))

    def triangulate(pts):
        # interior first so boundary insertions never split a collinear cavity edge
        if len(interior):
            order = np.concatenate([n_boundary + rng_order, np.arange(n_boundary)])
        else:
            order = np.arange(n_boundary)
        tris = order[_bowyer_watson(pts[order])]
        cent = pts[tris].mean(axis=1)
        return tris[_point_in_polygon(cent, poly) & (_dist_to_polygon(cent, poly) > 1e-12)]

    pts = np.vstack([bpts, interior]) if len(interior) else bpts
    tris = triangulate(pts)

    for _ in range(3):
        if not len(interior):
            break
        nbr_sum = np.zeros_like(pts)
        nbr_cnt = np.zeros(len(pts))
        for t in tris:
            for i in range(3):
                a, b = t[i], t[(i + 1) % 3]
                nbr_sum[a] += pts[b]
                nbr_sum[b] += pts[a]
                nbr_cnt[a] += 1
                nbr_cnt[b] += 1
        movable = np.zeros(len(pts), dtype=bool)
        movable[n_boundary:] = nbr_cnt[n_boundary:] > 0
        pts = pts.copy()
        pts[movable] = nbr_sum[movable] / nbr_cnt[movable, None]
        tris = triangulate(pts)

    used = np.unique(tris)
    remap = -np.ones(len(pts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    nodes = pts[used]
    tris = remap[tris]
    corners = [
        int(np.argmin(np.hypot(nodes[:, 0] - c[0], nodes[:, 1] - c[1]))) for c in poly
    ]
    return Mesh(nodes, tris, corner_nodes=corners)


# ---------------------------------------------------------------------------
# red refinement


@dataclass(frozen=True)
class ParentMap:
    """Ancestry of a red refinement.

    ``fine_node_origin`` holds one row per fine node: ``(i, -1)`` for a
    retained coarse node i, ``(i, j)`` for the midpoint of coarse edge (i, j).
    """

    fine_tri_to_coarse_tri: np.ndarray
    fine_node_origin: np.ndarray

    @property
    def num_coarse_nodes(self):
        return int(np.count_nonzero(self.fine_node_origin[:, 1] < 0))


def refine_red(mesh):
    """Split every triangle into four congruent children via edge midpoints.

    Returns the fine mesh and the ParentMap.  Coarse nodes keep their
    indices; midpoint of coarse edge e becomes fine node n_coarse + e.
    """
    nc = mesh.num_nodes
    mid = 0.5 * (mesh.nodes[mesh.edges[:, 0]] + mesh.nodes[mesh.edges[:, 1]])
    fine_nodes = np.vstack([mesh.nodes, mid])

    t = mesh.triangles
    # midpoint opposite local vertex i   (edge i = {v_{i+1}, v_{i+2}})
    m0 = nc + mesh.tri_edges[:, 0]
    m1 = nc + mesh.tri_edges[:, 1]
    m2 = nc + mesh.tri_edges[:, 2]
    v0, v1, v2 = t[:, 0], t[:, 1], t[:, 2]
    children = np.stack(
        [
            np.column_stack([v0, m2, m1]),
            np.column_stack([v1, m0, m2]),
            np.column_stack([v2, m1, m0]),
            np.column_stack([m0, m1, m2]),
        ],
        axis=1,
    ).reshape(-1, 3)

    origin = np.empty((len(fine_nodes), 2), dtype=np.int64)
    origin[:nc, 0] = np.arange(nc)
    origin[:nc, 1] = -1
    origin[nc:] = mesh.edges

    parent = np.repeat(np.arange(mesh.num_triangles), 4)
    fine = Mesh(fine_nodes, children, corner_nodes=mesh.corner_nodes)
    return fine, ParentMap(parent, origin)


# ---------------------------------------------------------------------------
# P1 evaluation


def eval_p1(mesh, field, tri, barycentric):
    """Evaluate a nodal field inside one triangle at barycentric coordinates."""
    bary = np.asarray(barycentric, dtype=float)
    if abs(bary.sum() - 1.0) > 1e-9 or bary.min() < -1e-12:
        raise ValueError("barycentric coordinates must be >= 0 and sum to 1")
    if not 0 <= tri < mesh.num_triangles:
        raise IndexError(f"triangle index {tri} out of range")
    vals = field.values[mesh.triangles[tri]]
    return np.tensordot(bary, vals, axes=1)


# ---------------------------------------------------------------------------
# edge geometry (mesh diagnostics)


@dataclass(frozen=True)
class EdgeGeometry:
    """Per (edge, adjacent triangle) lengths, opposite angle, tangent, outward
    normal, and the coefficients

        beta  = cot(theta) * (h_plus**2 - h_minus**2) / 12
        gamma = cot(theta) * area / 3

    Arrays are indexed (edge, side) with side 1 unset (NaN) on the boundary.
    ``h_plus``/``h_minus`` are the next/previous edge lengths in the
    triangle's counterclockwise traversal starting from the edge itself.
    """

    h_e: np.ndarray
    h_plus: np.ndarray
    h_minus: np.ndarray
    theta: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray


def edge_geometry(mesh):
    ne = len(mesh.edges)
    h_plus = np.full((ne, 2), np.nan)
    h_minus = np.full((ne, 2), np.nan)
    theta = np.full((ne, 2), np.nan)
    beta = np.full((ne, 2), np.nan)
    gamma = np.full((ne, 2), np.nan)
    tangent = np.full((ne, 2, 2), np.nan)
    normal = np.full((ne, 2, 2), np.nan)

    nodes = mesh.nodes
    for e in range(ne):
        for side in range(2):
            ti = mesh.edge_tris[e, side]
            if ti < 0:
                continue
            tv = mesh.triangles[ti]
            local = int(np.where(mesh.tri_edges[ti] == e)[0][0])
            # edge e runs v_{local+1} -> v_{local+2} in CCW traversal
            a = tv[(local + 1) % 3]
            b = tv[(local + 2) % 3]
            opposite = tv[local]
            pe = nodes[b] - nodes[a]
            he = np.hypot(*pe)
            t_e = pe / he
            n_e = np.array([t_e[1], -t_e[0]])
            # CCW successor edge starts at b, predecessor ends at a
            hp = np.hypot(*(nodes[opposite] - nodes[b]))
            hm = np.hypot(*(nodes[a] - nodes[opposite]))
            u = nodes[a] - nodes[opposite]
            v = nodes[b] - nodes[opposite]
            cross = u[0] * v[1] - u[1] * v[0]
            dot = u @ v
            th = np.arctan2(cross, dot)
            area = mesh.areas[ti]
            tangent[e, side] = t_e
            normal[e, side] = n_e
            h_plus[e, side] = hp
            h_minus[e, side] = hm
            theta[e, side] = th
            cot = dot / cross
            beta[e, side] = cot * (hp**2 - hm**2) / 12.0
            gamma[e, side] = cot * area / 3.0

    return EdgeGeometry(
        h_e=mesh.edge_lengths.copy(),
        h_plus=h_plus,
        h_minus=h_minus,
        theta=theta,
        beta=beta,
        gamma=gamma,
        tangent=tangent,
        normal=normal,
    )


# ---------------------------------------------------------------------------
# approximate-parallelogram quality report


@dataclass(frozen=True)
class MeshQualityReport:
    """Defect measures of the approximate-parallelogram / isosceles mesh
    condition, and the fitted decay exponent when several nested meshes
    are supplied (defect ~ h**(1+alpha)).

    The exponent and the "exact" label are keyed on the interior
    (parallelogram) series; regular-pattern square meshes have an O(h)
    boundary defect by construction (right boundary triangles), which is
    reported but not fitted.
    """

    max_interior_defect: float
    max_boundary_defect: float
    fitted_alpha: float | None
    label: str
    levels: tuple = field(default_factory=tuple)  # (h, interior, boundary) per mesh


def _mesh_defects(mesh):
    geo = edge_geometry(mesh)
    interior = ~mesh.boundary_edges
    if interior.any():
        d_int = np.abs(geo.h_minus[interior, 0] - geo.h_minus[interior, 1]) + np.abs(
            geo.h_plus[interior, 0] - geo.h_plus[interior, 1]
        )
        max_int = float(d_int.max())
    else:
        max_int = 0.0
    bnd = mesh.boundary_edges
    d_bnd = np.abs(geo.h_plus[bnd, 0] - geo.h_minus[bnd, 0])
    max_bnd = float(d_bnd.max()) if bnd.any() else 0.0
    return max_int, max_bnd


def alpha_report(meshes):
    """Quality report per Def. of the parallelogram/isosceles defects.

    With three or more meshes at halving h, fits log(defect) against log(h)
    and reports the slope minus one as alpha.
    """
    if isinstance(meshes, Mesh):
        meshes = [meshes]
    meshes = list(meshes)
    if not meshes:
        raise MeshError("alpha_report needs at least one mesh")

    levels = []
    for msh in meshes:
        mi, mb = _mesh_defects(msh)
        levels.append((msh.h_max, mi, mb))

    max_int, max_bnd = levels[-1][1], levels[-1][2]
    interior = np.array([li for _, li, _ in levels])

    if np.all(interior < 1e-14):
        return MeshQualityReport(max_int, max_bnd, None, "exact (defect 0)", tuple(levels))

    alpha = None
    if len(meshes) >= 3 and np.all(interior > 0):
        hs = np.log([lv[0] for lv in levels])
        slope = np.polyfit(hs, np.log(interior), 1)[0]
        alpha = float(slope - 1.0)
    label = "fitted" if alpha is not None else "defects reported"
    return MeshQualityReport(max_int, max_bnd, alpha, label, tuple(levels))


# ---------------------------------------------------------------------------
# plain-text mesh format: .node section then .ele section, 0-based indices


def save_mesh(mesh, path):
    """Write a mesh as a node section (index x y boundary_flag) followed by
    an element section (index v0 v1 v2)."""
    lines = [f"{mesh.num_nodes}"]
    for i, (x, y) in enumerate(mesh.nodes):
        lines.append(f"{i} {float(x)!r} {float(y)!r} {int(mesh.boundary_nodes[i])}")
    lines.append(f"{mesh.num_triangles}")
    for i, (a, b, c) in enumerate(mesh.triangles):
        lines.append(f"{i} {a} {b} {c}")
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def load_mesh(path):
    with open(path) as f:
        tokens = f.read().split("\n")
    rows = [ln.split() for ln in tokens if ln.strip()]
    pos = 0
    n = int(rows[pos][0])
    pos += 1
    nodes = np.empty((n, 2))
    flags = np.zeros(n, dtype=int)
    for r in rows[pos : pos + n]:
        i = int(r[0])
        nodes[i] = (float(r[1]), float(r[2]))
        flags[i] = int(r[3])
    pos += n
    t = int(rows[pos][0])
    pos += 1
    tris = np.empty((t, 3), dtype=np.int64)
    for r in rows[pos : pos + t]:
        tris[int(r[0])] = (int(r[1]), int(r[2]), int(r[3]))
    mesh = Mesh(nodes, tris)
    declared = flags.astype(bool)
    if not np.array_equal(declared, mesh.boundary_nodes):
        raise MeshError("boundary flags in file disagree with mesh topology")
    return mesh
