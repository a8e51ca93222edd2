"""Polynomial-preserving gradient recovery.

For every node z a quadratic is fitted, in the least-squares sense, to the
nodal values over a patch of surrounding nodes; the recovered gradient at
z is the gradient of that quadratic.  The fit runs in local coordinates
centered at z and scaled by the patch radius, which makes the
degeneracy test (all sampling points on one conic) mesh-size independent.
The node-to-value map is linear, so the whole operator is precomputed as a
pair of sparse matrices and reused for every field on the same mesh.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .fields import NodalField, VectorNodalField

_MIN_POINTS = 6
_MAX_RINGS = 4
_RANK_TOL = 1e-10


class PatchDegenerate(RuntimeError):
    """Sampling points stay on one conic after the ring-growth cap."""


@dataclass(frozen=True)
class Patch:
    """Sampling nodes around a center node, including the center itself."""

    center: int
    nodes: np.ndarray
    scale: float
    rings_used: int


def _node_to_tris(mesh):
    cached = mesh._cache.get("node_to_tris")
    if cached is not None:
        return cached
    flat = mesh.triangles.ravel()
    order = np.argsort(flat, kind="stable")
    tri_of = order // 3
    counts = np.bincount(flat, minlength=mesh.num_nodes)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    table = (tri_of, offsets)
    mesh._cache["node_to_tris"] = table
    return table


def _tris_of(mesh, nodes):
    tri_of, offsets = _node_to_tris(mesh)
    parts = [tri_of[offsets[n] : offsets[n + 1]] for n in nodes]
    return np.unique(np.concatenate(parts))


def _design_matrix(mesh, z, nodes):
    local = mesh.nodes[nodes] - mesh.nodes[z]
    scale = np.hypot(local[:, 0], local[:, 1]).max()
    x = local[:, 0] / scale
    y = local[:, 1] / scale
    V = np.column_stack([np.ones_like(x), x, y, x * x, x * y, y * y])
    return V, scale


def _patch_rank_ok(V):
    s = np.linalg.svd(V, compute_uv=False)
    return s[-1] >= _RANK_TOL * s[0]


def build_patch(mesh, z):
    """Grow element rings around node z until the quadratic fit is unisolvent.

    Starts from the elements touching z; while fewer than six sampling
    nodes are available or they lie on a common conic, the next ring of
    elements is added (at most four rings).
    """
    if not 0 <= z < mesh.num_nodes:
        raise IndexError(f"node index {z} out of range")
    nodes = np.unique(mesh.triangles[_tris_of(mesh, [z])])
    rings = 1
    while True:
        if len(nodes) >= _MIN_POINTS:
            V, scale = _design_matrix(mesh, z, nodes)
            if _patch_rank_ok(V):
                return Patch(center=z, nodes=nodes, scale=scale, rings_used=rings)
        if rings >= _MAX_RINGS:
            raise PatchDegenerate(
                f"patch of node {z} still degenerate after {rings} rings"
            )
        nodes = np.unique(mesh.triangles[_tris_of(mesh, nodes)])
        rings += 1


def _grad_weights(V, scale):
    """Recovery weights of one patch: rows 1 and 2 of the pseudoinverse of
    the design matrix are the gradient of the fitted quadratic at the
    (local) origin."""
    u, s, vt = np.linalg.svd(V, full_matrices=False)
    pinv = (vt.T / s) @ u.T
    return pinv[1] / scale, pinv[2] / scale


class RecoveryOperator:
    """The fixed linear map from nodal values to recovered nodal gradients.

    All first-ring patches of equal size are processed by one batched SVD;
    nodes whose first ring is too small or degenerate fall back to the
    ring-growing path of ``build_patch``.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        n = mesh.num_nodes
        ring1 = [np.unique(mesh.triangles[_tris_of(mesh, [z])]) for z in range(n)]

        self.patches = [None] * n
        wx = [None] * n
        wy = [None] * n
        sizes = np.array([len(p) for p in ring1])
        fallback = list(np.nonzero(sizes < _MIN_POINTS)[0])

        for size in np.unique(sizes[sizes >= _MIN_POINTS]):
            idx = np.nonzero(sizes == size)[0]
            local = mesh.nodes[np.stack([ring1[z] for z in idx])] - mesh.nodes[idx][:, None, :]
            scale = np.hypot(local[..., 0], local[..., 1]).max(axis=1)
            x = local[..., 0] / scale[:, None]
            y = local[..., 1] / scale[:, None]
            V = np.stack([np.ones_like(x), x, y, x * x, x * y, y * y], axis=-1)
            u, s, vt = np.linalg.svd(V, full_matrices=False)
            ok = s[:, -1] >= _RANK_TOL * s[:, 0]
            pinv = np.einsum("zij,zj,zkj->zik", vt.transpose(0, 2, 1), 1.0 / s, u)
            for pos, z in enumerate(idx):
                if not ok[pos]:
                    fallback.append(z)
                    continue
                self.patches[z] = Patch(
                    center=int(z), nodes=ring1[z], scale=float(scale[pos]), rings_used=1
                )
                wx[z] = pinv[pos, 1] / scale[pos]
                wy[z] = pinv[pos, 2] / scale[pos]

        for z in fallback:
            patch = build_patch(mesh, int(z))
            self.patches[z] = patch
            V, scale = _design_matrix(mesh, z, patch.nodes)
            wx[z], wy[z] = _grad_weights(V, scale)

        rows = np.concatenate([np.full(len(p.nodes), p.center) for p in self.patches])
        cols = np.concatenate([p.nodes for p in self.patches])
        self.gx = scipy.sparse.csr_matrix((np.concatenate(wx), (rows, cols)), shape=(n, n))
        self.gy = scipy.sparse.csr_matrix((np.concatenate(wy), (rows, cols)), shape=(n, n))

    def apply(self, field):
        if field.mesh is not self.mesh:
            raise ValueError("field lives on a different mesh")
        vals = field.values
        return VectorNodalField(self.mesh, np.column_stack([self.gx @ vals, self.gy @ vals]))


def recovery_operator(mesh):
    op = mesh._cache.get("recovery_op")
    if op is None:
        op = RecoveryOperator(mesh)
        mesh._cache["recovery_op"] = op
    return op


def recover_gradient(mesh, field):
    """Recovered gradient of a nodal field (complex P1 vector field)."""
    if not isinstance(field, NodalField):
        field = NodalField(mesh, field)
    return recovery_operator(mesh).apply(field)
