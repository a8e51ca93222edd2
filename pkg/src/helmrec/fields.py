"""Complex nodal coefficient vectors for continuous piecewise-linear functions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh


@dataclass(frozen=True)
class NodalField:
    """Complex scalar coefficients, one per mesh node."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=complex)
        if vals.shape != (self.mesh.num_nodes,):
            raise ValueError(
                f"expected {self.mesh.num_nodes} nodal values, got shape {vals.shape}"
            )
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class VectorNodalField:
    """Complex 2-vector coefficients, one per mesh node."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=complex)
        if vals.shape != (self.mesh.num_nodes, 2):
            raise ValueError(
                f"expected ({self.mesh.num_nodes}, 2) nodal values, got shape {vals.shape}"
            )
        object.__setattr__(self, "values", vals)
