"""Quadrature rules and assembly of the complex Helmholtz system.

The stiffness, mass and boundary-mass matrices use exact closed-form
element integrals for straight-sided P1 triangles; only the data terms
(source, impedance data, elliptic-projection right side) are integrated
numerically.  The assembled system

    A = S - k^2 M + i k B

is complex symmetric (A = A^T entrywise, not Hermitian): matrix entries
are accumulated in triangle-index order on both sides of the diagonal, so
mirrored values are bitwise equal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse

from .analytic import exact_gradients, exact_values, robin_values, source_values

_MAX_DEGREE = 8


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights on the reference element.

    Triangle rules store barycentric triples; edge rules store abscissae in
    [0, 1].  Weights sum to one, so physical integrals are
    |element| * sum(w_q f(x_q)).
    """

    kind: str
    degree: int
    points: np.ndarray
    weights: np.ndarray


def _gauss01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def quadrature_rule(kind, degree):
    """Rule exact for polynomials up to ``degree`` on the reference element."""
    if not 1 <= degree <= _MAX_DEGREE:
        raise ValueError(f"unsupported quadrature degree {degree}")
    if kind == "edge":
        t, w = _gauss01((degree + 2) // 2)
        return QuadratureRule("edge", degree, t, w)
    if kind != "triangle":
        raise ValueError(f"unknown rule kind {kind!r}")
    if degree == 1:
        pts = np.array([[1.0, 1.0, 1.0]]) / 3.0
        return QuadratureRule("triangle", 1, pts, np.array([1.0]))
    # collapsed Gauss product on x = u, y = v (1 - u); the (1 - u) Jacobian
    # raises the u-degree by one, and one extra point per direction offsets
    # the accuracy bias of the collapsed map on smooth integrands
    u, wu = _gauss01((degree + 4) // 2)
    v, wv = _gauss01((degree + 4) // 2)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    x = uu.ravel()
    y = (vv * (1.0 - uu)).ravel()
    w = (np.outer(wu * (1.0 - u), wv)).ravel() * 2.0
    pts = np.column_stack([1.0 - x - y, x, y])
    return QuadratureRule("triangle", degree, pts, w)


@dataclass(frozen=True)
class SparseComplexMatrix:
    """Compressed sparse row complex matrix with a symmetry tag."""

    csr: scipy.sparse.csr_matrix
    symmetric: bool = True

    @property
    def n(self):
        return self.csr.shape[0]

    def matvec(self, x):
        return self.csr @ x

    def to_dense(self):
        return self.csr.toarray()


def write_matrix_market(matrix, path):
    """Dump in Matrix Market coordinate format (complex general, 1-based)."""
    scipy.io.mmwrite(path, matrix.csr.tocoo(), field="complex", symmetry="general")


def p1_gradients(mesh):
    """Gradients of the three barycentric basis functions, (t, 3, 2)."""
    p = mesh.nodes[mesh.triangles]
    b = p[:, [1, 2, 0], 1] - p[:, [2, 0, 1], 1]
    c = p[:, [2, 0, 1], 0] - p[:, [1, 2, 0], 0]
    return np.stack([b, c], axis=-1) / (2.0 * mesh.areas[:, None, None])


def _coalesce_csr(ii, jj, vals, n):
    """Deterministic COO -> CSR: stable sort by (row, col), sequential sums.

    Keeps the element-index accumulation order identical for (i, j) and
    (j, i), which makes symmetric assembly bitwise symmetric.
    """
    order = np.lexsort((jj, ii))
    ii, jj, vals = ii[order], jj[order], vals[order]
    new = np.ones(len(ii), dtype=bool)
    new[1:] = (ii[1:] != ii[:-1]) | (jj[1:] != jj[:-1])
    starts = np.nonzero(new)[0]
    data = np.add.reduceat(vals, starts)
    rows = ii[starts]
    cols = jj[starts]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    np.cumsum(indptr, out=indptr)
    return scipy.sparse.csr_matrix((data, cols, indptr), shape=(n, n))


def _assemble_from_local(mesh, local):
    t = mesh.triangles
    nt = mesh.num_triangles
    ii = np.broadcast_to(t[:, :, None], (nt, 3, 3)).ravel()
    jj = np.broadcast_to(t[:, None, :], (nt, 3, 3)).ravel()
    return _coalesce_csr(ii, jj, local.ravel(), mesh.num_nodes)


def stiffness_matrix(mesh):
    g = p1_gradients(mesh)
    local = np.einsum("tia,tja->tij", g, g) * mesh.areas[:, None, None]
    return _assemble_from_local(mesh, local)


def mass_matrix(mesh):
    base = (np.ones((3, 3)) + np.eye(3)) / 12.0
    local = mesh.areas[:, None, None] * base
    return _assemble_from_local(mesh, local)


def _directed_boundary_edges(mesh):
    """Boundary edges as (a, b) directed so that the domain lies on the left;
    the outward unit normal is then (t_y, -t_x)."""
    idx = np.nonzero(mesh.boundary_edges)[0]
    a = np.empty(len(idx), dtype=np.int64)
    b = np.empty(len(idx), dtype=np.int64)
    for out, e in enumerate(idx):
        ti = mesh.edge_tris[e, 0]
        tv = mesh.triangles[ti]
        local = int(np.where(mesh.tri_edges[ti] == e)[0][0])
        a[out] = tv[(local + 1) % 3]
        b[out] = tv[(local + 2) % 3]
    return a, b


def boundary_mass_matrix(mesh):
    a, b = _directed_boundary_edges(mesh)
    lengths = np.hypot(*(mesh.nodes[b] - mesh.nodes[a]).T)
    base = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    local = lengths[:, None, None] * base
    pairs = np.column_stack([a, b])
    ne = len(a)
    ii = np.broadcast_to(pairs[:, :, None], (ne, 2, 2)).ravel()
    jj = np.broadcast_to(pairs[:, None, :], (ne, 2, 2)).ravel()
    return _coalesce_csr(ii, jj, local.ravel(), mesh.num_nodes)


def _triangle_load(mesh, values_at, rule):
    """Assemble b_i = int f phi_i over triangles with the given rule."""
    bary = rule.points
    pts = np.einsum("qc,tcd->tqd", bary, mesh.nodes[mesh.triangles])
    fv = values_at(pts.reshape(-1, 2)).reshape(pts.shape[:2])
    contrib = mesh.areas[:, None] * np.einsum("tq,q,qi->ti", fv, rule.weights, bary)
    b = np.zeros(mesh.num_nodes, dtype=complex)
    np.add.at(b, mesh.triangles, contrib)
    return b


def _edge_load(mesh, values_at, rule):
    """Assemble b_i = int g phi_i over the boundary with the given rule.

    ``values_at(points, normals)`` receives the quadrature points and the
    outward normals of their edges.
    """
    a, b_idx = _directed_boundary_edges(mesh)
    pa, pb = mesh.nodes[a], mesh.nodes[b_idx]
    tang = pb - pa
    lengths = np.hypot(tang[:, 0], tang[:, 1])
    normals = np.column_stack([tang[:, 1], -tang[:, 0]]) / lengths[:, None]
    t = rule.points
    pts = pa[:, None, :] + t[None, :, None] * tang[:, None, :]
    nrm = np.broadcast_to(normals[:, None, :], pts.shape)
    gv = values_at(pts.reshape(-1, 2), nrm.reshape(-1, 2)).reshape(pts.shape[:2])
    wa = np.einsum("eq,q,q->e", gv, rule.weights, 1.0 - t)
    wb = np.einsum("eq,q,q->e", gv, rule.weights, t)
    out = np.zeros(mesh.num_nodes, dtype=complex)
    np.add.at(out, a, lengths * wa)
    np.add.at(out, b_idx, lengths * wb)
    return out


def assemble_helmholtz(mesh, p, quad_load=None, quad_edge=None):
    """System matrix S - k^2 M + i k B and load vector for the Helmholtz
    problem with impedance boundary data.
    """
    if mesh.num_triangles == 0:
        raise ValueError("empty mesh")
    if quad_load is None:
        quad_load = quadrature_rule("triangle", 4)
    if quad_edge is None:
        quad_edge = quadrature_rule("edge", 5)

    k = p.k
    S = stiffness_matrix(mesh)
    M = mass_matrix(mesh)
    B = boundary_mass_matrix(mesh)
    A = (S - k**2 * M + 1j * k * B).tocsr()

    b = _triangle_load(mesh, lambda pts: source_values(p, pts), quad_load)
    if p.has_exact:
        b += _edge_load(mesh, lambda pts, nrm: robin_values(p, pts, nrm), quad_edge)
    return SparseComplexMatrix(A, symmetric=True), b


def assemble_elliptic_projection(mesh, p, quad=None, quad_edge=None):
    """System S + i k B and data for the impedance-Poisson projection of the
    exact solution; needs the problem with a closed form.
    """
    if not p.has_exact:
        raise ValueError("elliptic projection needs the exact-solution problem")
    if quad is None:
        quad = quadrature_rule("triangle", 4)
    if quad_edge is None:
        quad_edge = quadrature_rule("edge", 5)

    k = p.k
    S = stiffness_matrix(mesh)
    B = boundary_mass_matrix(mesh)
    A = (S + 1j * k * B).tocsr()

    # volume term: grad(phi_j) is constant per triangle, so only the mean
    # of grad(u) over each triangle is needed
    bary = quad.points
    pts = np.einsum("qc,tcd->tqd", bary, mesh.nodes[mesh.triangles])
    gu = exact_gradients(p, pts.reshape(-1, 2)).reshape(*pts.shape[:2], 2)
    gu_mean = np.einsum("tqd,q->td", gu, quad.weights)
    g = p1_gradients(mesh)
    contrib = mesh.areas[:, None] * np.einsum("td,tid->ti", gu_mean, g.astype(complex))
    b = np.zeros(mesh.num_nodes, dtype=complex)
    np.add.at(b, mesh.triangles, contrib)

    b += 1j * k * _edge_load(mesh, lambda pts, nrm: exact_values(p, pts), quad_edge)
    return SparseComplexMatrix(A, symmetric=True), b
