"""Error norms against exact solutions, observed convergence orders, and
the critical-mesh-size search.

All norms are computed by per-triangle quadrature.  The energy norm is
(|v|_1^2 + k^2 ||v||_0^2)^(1/2).  Relative errors in the convergence
records divide by the reference norms of the exact solution, computed once
per wave number and domain on the finest mesh of a study (degree-8 rule)
so every level shares the same denominator.
"""

from __future__ import annotations

from dataclasses import dataclass, fields as dc_fields

import numpy as np

from .analytic import bessel_problem, exact_gradients, exact_values
from .assembly import assemble_helmholtz, p1_gradients, quadrature_rule
from .fields import NodalField, VectorNodalField
from .mesh import build_hexagon_mesh


@dataclass(frozen=True)
class ReferenceNorms:
    """Norms of the exact solution used as relative-error denominators."""

    l2: float
    h1_semi: float
    energy: float


@dataclass(frozen=True)
class ErrorBundle:
    l2_err: float
    h1_semi_err: float
    energy_err: float
    rel_l2: float
    rel_h1: float
    rel_energy: float
    reference: ReferenceNorms


@dataclass
class ConvergenceRecord:
    """One refinement level of a study; column layout of the output CSV."""

    k: float
    m: int
    h: float
    dof: int
    rel_h1_fem: float | None = None
    rel_l2_fem: float | None = None
    rel_energy_fem: float | None = None
    rel_grad_ppr: float | None = None
    rel_grad_rppr: float | None = None
    rel_grad_ppr_interp: float | None = None
    rel_grad_rfem: float | None = None
    eta: float | None = None
    effectivity: float | None = None
    order_fem: float | None = None
    order_ppr: float | None = None
    status: str = "ok"


CSV_COLUMNS = [f.name for f in dc_fields(ConvergenceRecord)]


def _quad_points(mesh, rule):
    return np.einsum("qc,tcd->tqd", rule.points, mesh.nodes[mesh.triangles])


def fem_gradients(mesh, solution):
    """Piecewise-constant gradient of a P1 solution, one 2-vector per triangle."""
    vals = solution.values if isinstance(solution, NodalField) else np.asarray(solution)
    g = p1_gradients(mesh)
    return np.einsum("tid,ti->td", g.astype(complex), vals[mesh.triangles])


def _p1_at_quad(mesh, nodal_values, rule):
    return np.einsum("qc,tc...->tq...", rule.points, nodal_values[mesh.triangles])


def reference_norms(p, mesh, degree=8):
    """||u||_0, |u|_1 and the energy norm of the exact solution by quadrature."""
    rule = quadrature_rule("triangle", degree)
    pts = _quad_points(mesh, rule)
    flat = pts.reshape(-1, 2)
    u = exact_values(p, flat).reshape(pts.shape[:2])
    gu = exact_gradients(p, flat).reshape(*pts.shape[:2], 2)
    l2sq = float(np.einsum("t,tq,q->", mesh.areas, np.abs(u) ** 2, rule.weights))
    h1sq = float(
        np.einsum("t,tqd,q->", mesh.areas, np.abs(gu) ** 2, rule.weights)
    )
    return ReferenceNorms(
        l2=np.sqrt(l2sq),
        h1_semi=np.sqrt(h1sq),
        energy=np.sqrt(h1sq + p.k**2 * l2sq),
    )


def error_bundle(mesh, solution, p, quad=None, reference=None):
    """L2, H1-seminorm and energy errors of a P1 solution, absolute and
    relative to the exact-solution norms."""
    if not p.has_exact:
        raise ValueError("error_bundle needs the problem with a closed form")
    if quad is None:
        quad = quadrature_rule("triangle", 6)
    if reference is None:
        reference = reference_norms(p, mesh)

    vals = solution.values if isinstance(solution, NodalField) else np.asarray(solution)
    pts = _quad_points(mesh, quad)
    flat = pts.reshape(-1, 2)
    u = exact_values(p, flat).reshape(pts.shape[:2])
    gu = exact_gradients(p, flat).reshape(*pts.shape[:2], 2)
    uh = _p1_at_quad(mesh, vals, quad)
    guh = fem_gradients(mesh, vals)

    l2sq = float(np.einsum("t,tq,q->", mesh.areas, np.abs(u - uh) ** 2, quad.weights))
    diff_g = gu - guh[:, None, :]
    h1sq = float(np.einsum("t,tqd,q->", mesh.areas, np.abs(diff_g) ** 2, quad.weights))
    energy = np.sqrt(h1sq + p.k**2 * l2sq)

    return ErrorBundle(
        l2_err=np.sqrt(l2sq),
        h1_semi_err=np.sqrt(h1sq),
        energy_err=energy,
        rel_l2=np.sqrt(l2sq) / reference.l2,
        rel_h1=np.sqrt(h1sq) / reference.h1_semi,
        rel_energy=energy / reference.energy,
        reference=reference,
    )


def grad_error_l2(mesh, g, p, quad=None):
    """||g - grad u||_0 for a P1 vector field g, by quadrature."""
    if not p.has_exact:
        raise ValueError("grad_error_l2 needs the problem with a closed form")
    if quad is None:
        quad = quadrature_rule("triangle", 6)
    vals = g.values if isinstance(g, VectorNodalField) else np.asarray(g)
    pts = _quad_points(mesh, quad)
    gu = exact_gradients(p, pts.reshape(-1, 2)).reshape(*pts.shape[:2], 2)
    gq = _p1_at_quad(mesh, vals, quad)
    sq = float(np.einsum("t,tqd,q->", mesh.areas, np.abs(gu - gq) ** 2, quad.weights))
    return np.sqrt(sq)


def grad_error_const(mesh, gconst, p, quad=None):
    """||g - grad u||_0 for a piecewise-constant (per triangle) field g."""
    if not p.has_exact:
        raise ValueError("grad_error_const needs the problem with a closed form")
    if quad is None:
        quad = quadrature_rule("triangle", 6)
    gconst = np.asarray(gconst)
    pts = _quad_points(mesh, quad)
    gu = exact_gradients(p, pts.reshape(-1, 2)).reshape(*pts.shape[:2], 2)
    diff = gu - gconst[:, None, :]
    sq = float(np.einsum("t,tqd,q->", mesh.areas, np.abs(diff) ** 2, quad.weights))
    return np.sqrt(sq)


def l2_diff_p1_const(mesh, vec_values, const_per_tri):
    """Exact ||v - c||_0 with v a P1 vector field and c constant per triangle.

    The integrand is quadratic on each triangle, so the degree-2 rule is
    exact.
    """
    rule = quadrature_rule("triangle", 2)
    vq = _p1_at_quad(mesh, np.asarray(vec_values), rule)
    diff = vq - np.asarray(const_per_tri)[:, None, :]
    sq = float(np.einsum("t,tqd,q->", mesh.areas, np.abs(diff) ** 2, rule.weights))
    return np.sqrt(sq)


def grad_diff_l2(mesh, g, solution):
    """||g - grad u_h||_0 with g a recovered (P1) gradient field."""
    vals = g.values if isinstance(g, VectorNodalField) else np.asarray(g)
    return l2_diff_p1_const(mesh, vals, fem_gradients(mesh, solution))


def l2_norm_p1_vector(mesh, g):
    vals = g.values if isinstance(g, VectorNodalField) else np.asarray(g)
    return l2_diff_p1_const(mesh, vals, np.zeros((mesh.num_triangles, 2)))


def fit_order(records, column=None):
    """Observed order log2(err_coarse / err_fine) of the last halving step.

    ``records`` is either a sequence of ConvergenceRecord (use ``column``)
    or a sequence of (h, err) pairs / plain errors at successively halved h.
    """
    if column is not None:
        data = [(r.h, getattr(r, column)) for r in records]
    else:
        seq = list(records)
        if seq and np.ndim(seq[0]) == 0:
            data = [(0.5**i, float(v)) for i, v in enumerate(seq)]
        else:
            data = [(float(h), float(v)) for h, v in seq]
    data = [(h, v) for h, v in data if v is not None]
    if len(data) < 2:
        raise ValueError("need at least two records with values")
    (h0, e0), (h1, e1) = data[-2], data[-1]
    if abs(h0 / h1 - 2.0) > 1e-6:
        raise ValueError(f"mesh sizes do not halve: {h0:g} -> {h1:g}")
    return float(np.log2(e0 / e1))


class NotReached(RuntimeError):
    """The target relative error was not met at the finest affordable mesh."""

    def __init__(self, message, best_m=None, evaluations=None):
        super().__init__(message)
        self.best_m = best_m
        self.evaluations = evaluations


def critical_mesh_size(
    k,
    eps,
    quantity="fem_grad",
    solver="direct",
    solve_tol=1e-10,
    max_solves=12,
    m_cap=None,
    reference=None,
):
    """Largest h = 1/m on the hexagon family with relative error <= eps.

    Scans m coarse-to-fine on a geometric grid, then bisects integers; the
    number of solves is capped, so the returned m is the best bracketed
    success.  Returns (h, m, evaluations) where evaluations is the list of
    (m, relative_error) pairs.
    """
    from .recovery import recover_gradient
    from .solve import solve as solve_system

    if not 0.0 < eps < 1.0:
        raise ValueError("eps must be in (0, 1)")
    if quantity not in ("fem_grad", "recovered_grad"):
        raise ValueError(f"unknown quantity {quantity!r}")
    if m_cap is None:
        m_cap = max(64, int(6 * k))
    problem = bessel_problem(k, "hexagon")
    if reference is None:
        m_ref = min(m_cap, max(16, int(2 * k)))
        reference = reference_norms(problem, build_hexagon_mesh(m_ref))

    evaluations = []

    def rel_err(m):
        mesh = build_hexagon_mesh(m)
        A, b = assemble_helmholtz(mesh, problem)
        x, _ = solve_system(A, b, tol=solve_tol, method=solver)
        if quantity == "fem_grad":
            err = grad_error_const(mesh, fem_gradients(mesh, x), problem)
        else:
            err = grad_error_l2(mesh, recover_gradient(mesh, x), problem)
        e = err / reference.h1_semi
        evaluations.append((m, e))
        return e

    m = max(2, int(np.ceil(k / 4)))
    lo = None  # largest failing m
    hi = None  # smallest succeeding m
    while len(evaluations) < max_solves:
        e = rel_err(m)
        if e <= eps:
            hi = m
            break
        lo = m
        m = int(np.ceil(m * 1.5))
        if m > m_cap:
            raise NotReached(
                f"error {e:.3g} > {eps:g} at m={lo} and cap m={m_cap} reached",
                best_m=lo,
                evaluations=evaluations,
            )
    if hi is None:
        raise NotReached(
            f"solve budget {max_solves} exhausted before reaching eps={eps:g}",
            best_m=lo,
            evaluations=evaluations,
        )

    if lo is None:
        # the coarsest candidate already passes; scan down for the true onset
        while hi > 2 and len(evaluations) < max_solves:
            m = max(2, hi // 2)
            if rel_err(m) <= eps:
                hi = m
                if m == 2:
                    break
            else:
                lo = m
                break

    while lo is not None and hi - lo > max(1, round(0.02 * hi)) and len(evaluations) < max_solves:
        mid = (lo + hi) // 2
        if rel_err(mid) <= eps:
            hi = mid
        else:
            lo = mid

    return 1.0 / hi, hi, evaluations
