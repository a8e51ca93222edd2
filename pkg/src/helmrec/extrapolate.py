"""Two-level Richardson extrapolation of nodal fields and the recovery-based
a posteriori error estimator.

With the fine mesh obtained from the coarse one by red refinement, both
fields live in nested P1 spaces, so the elementwise combination
(4 v_fine - v_coarse)/3 equals the nodewise combination after exact
prolongation of the coarse field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import NodalField, VectorNodalField
from .mesh import Mesh, ParentMap, refine_red
from .metrics import fem_gradients, l2_diff_p1_const


@dataclass(frozen=True)
class LevelPair:
    """A coarse mesh and its red refinement, with the ancestry map."""

    coarse: Mesh
    fine: Mesh
    parent_map: ParentMap

    def __post_init__(self):
        pm = self.parent_map
        if self.fine.num_triangles != 4 * self.coarse.num_triangles:
            raise ValueError("fine mesh is not a red refinement (triangle count)")
        if len(pm.fine_node_origin) != self.fine.num_nodes:
            raise ValueError("parent map does not match the fine mesh")
        origin = pm.fine_node_origin
        coarse_ids = origin[:, 1] < 0
        if not np.allclose(
            self.fine.nodes[coarse_ids],
            self.coarse.nodes[origin[coarse_ids, 0]],
            rtol=0.0,
            atol=1e-12,
        ):
            raise ValueError("coarse nodes do not retain their positions")
        mids = ~coarse_ids
        expected = 0.5 * (
            self.coarse.nodes[origin[mids, 0]] + self.coarse.nodes[origin[mids, 1]]
        )
        if not np.allclose(self.fine.nodes[mids], expected, rtol=0.0, atol=1e-12):
            raise ValueError("midpoint nodes are not at coarse edge midpoints")


def make_level_pair(coarse):
    fine, pm = refine_red(coarse)
    return LevelPair(coarse, fine, pm), fine


def prolong(pair, coarse_field):
    """Exact P1 evaluation of a coarse field on the fine mesh: coarse nodes
    keep their value, midpoints average the two edge endpoints."""
    origin = pair.parent_map.fine_node_origin
    values = coarse_field.values
    if values.shape[0] != pair.coarse.num_nodes:
        raise ValueError("field does not live on the coarse mesh of the pair")
    out = np.where(
        (origin[:, 1] < 0)[:, None] if values.ndim == 2 else origin[:, 1] < 0,
        values[origin[:, 0]],
        0.5 * (values[origin[:, 0]] + values[origin[:, 1].clip(min=0)]),
    )
    cls = VectorNodalField if values.ndim == 2 else NodalField
    return cls(pair.fine, out)


def richardson(pair, fine_field, prolonged_coarse_field):
    """Nodewise (4 fine - coarse)/3 on the fine mesh."""
    for f in (fine_field, prolonged_coarse_field):
        if f.values.shape[0] != pair.fine.num_nodes:
            raise ValueError("richardson needs both fields on the fine mesh")
    if type(fine_field) is not type(prolonged_coarse_field):
        raise ValueError("fields must be of the same kind")
    out = (4.0 * fine_field.values - prolonged_coarse_field.values) / 3.0
    return type(fine_field)(pair.fine, out)


def richardson_raw_gradient(pair, coarse_solution, fine_solution):
    """(4 grad u_fine - grad u_coarse)/3 combined per fine triangle.

    Both gradients are piecewise constant; the coarse one is taken from the
    parent triangle.  Returns one 2-vector per fine triangle.
    """
    gc = fem_gradients(pair.coarse, coarse_solution)
    gf = fem_gradients(pair.fine, fine_solution)
    return (4.0 * gf - gc[pair.parent_map.fine_tri_to_coarse_tri]) / 3.0


def estimator_eta(pair, coarse_recovered, fine_recovered, fine_solution):
    """|| R G u_h - grad u_h ||_0 on the fine mesh.

    R G u_h is the Richardson combination of the recovered gradients of the
    two levels; grad u_h is the raw piecewise-constant gradient of the fine
    solution.  The integrand is piecewise quadratic, integrated exactly.
    """
    rg = richardson(pair, fine_recovered, prolong(pair, coarse_recovered))
    return l2_diff_p1_const(
        pair.fine, rg.values, fem_gradients(pair.fine, fine_solution)
    )
