import numpy as np
import pytest

from helmrec.analytic import bessel_problem, exact_values
from helmrec.assembly import assemble_helmholtz, quadrature_rule
from helmrec.fields import NodalField, VectorNodalField
from helmrec.mesh import build_hexagon_mesh, build_square_mesh
from helmrec.metrics import (
    ConvergenceRecord,
    NotReached,
    critical_mesh_size,
    error_bundle,
    fem_gradients,
    fit_order,
    grad_diff_l2,
    grad_error_const,
    grad_error_l2,
    l2_diff_p1_const,
    reference_norms,
)
from helmrec.solve import solve


def interpolant(p, mesh):
    return NodalField(mesh, exact_values(p, mesh.nodes))


def test_energy_norm_pythagoras():
    p = bessel_problem(10.0)
    mesh = build_hexagon_mesh(8)
    bundle = error_bundle(mesh, interpolant(p, mesh), p)
    lhs = bundle.energy_err**2
    rhs = bundle.h1_semi_err**2 + p.k**2 * bundle.l2_err**2
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert bundle.l2_err > 0  # the exact solution is not piecewise linear


def test_interpolant_h1_order_one_no_plateau():
    # low wave number: the interpolation error decays cleanly at first order
    p = bessel_problem(5.0)
    meshes = [build_hexagon_mesh(m) for m in (8, 16, 32)]
    ref = reference_norms(p, meshes[-1])
    errs = [error_bundle(m, interpolant(p, m), p, reference=ref).rel_h1 for m in meshes]
    for e0, e1 in zip(errs, errs[1:]):
        assert np.log2(e0 / e1) == pytest.approx(1.0, abs=0.05)


def test_fem_solution_h1_order_one_k5():
    p = bessel_problem(5.0)
    meshes = [build_hexagon_mesh(m) for m in (8, 16, 32)]
    ref = reference_norms(p, meshes[-1])
    errs = []
    for mesh in meshes:
        A, b = assemble_helmholtz(mesh, p)
        x, _ = solve(A, b)
        errs.append(error_bundle(mesh, NodalField(mesh, x), p, reference=ref).rel_h1)
    for e0, e1 in zip(errs, errs[1:]):
        assert np.log2(e0 / e1) == pytest.approx(1.0, abs=0.05)


def test_grad_error_zero_for_exact_nodal_gradient_of_linear():
    # if the target gradient is globally constant, its interpolant is exact
    mesh = build_square_mesh(6)
    p = bessel_problem(10.0, domain="unit_square")
    g = VectorNodalField(mesh, np.tile([0.2, -0.4], (mesh.num_nodes, 1)).astype(complex))
    sol = NodalField(mesh, 0.2 * mesh.nodes[:, 0] - 0.4 * mesh.nodes[:, 1])
    assert grad_diff_l2(mesh, g, sol) < 1e-13
    assert grad_error_l2(mesh, g, p) > 0


def test_grad_error_const_matches_bundle():
    p = bessel_problem(10.0)
    mesh = build_hexagon_mesh(8)
    sol = interpolant(p, mesh)
    ref = reference_norms(p, mesh)
    bundle = error_bundle(mesh, sol, p, reference=ref)
    direct = grad_error_const(mesh, fem_gradients(mesh, sol), p)
    assert direct == pytest.approx(bundle.h1_semi_err, rel=1e-12)


def test_l2_diff_degree_two_rule_is_exact():
    # cross-check the closed quadratic integration against a degree-6 rule
    mesh = build_square_mesh(3)
    rng = np.random.default_rng(6)
    vec = rng.normal(size=(mesh.num_nodes, 2)) + 1j * rng.normal(size=(mesh.num_nodes, 2))
    const = rng.normal(size=(mesh.num_triangles, 2)).astype(complex)
    got = l2_diff_p1_const(mesh, vec, const)
    rule = quadrature_rule("triangle", 6)
    pts = np.einsum("qc,tc...->tq...", rule.points, vec[mesh.triangles])
    diff = pts - const[:, None, :]
    expected = np.sqrt(np.einsum("t,tqd,q->", mesh.areas, np.abs(diff) ** 2, rule.weights))
    assert got == pytest.approx(expected, rel=1e-13)


def test_fit_order_basics():
    assert fit_order([(0.5, 4e-2), (0.25, 1e-2)]) == pytest.approx(2.0)
    # plain error sequences assume halving steps
    assert fit_order([4e-2, 1e-2]) == pytest.approx(2.0)
    records = [
        ConvergenceRecord(k=10, m=8, h=0.25, dof=1, rel_grad_ppr=4e-2),
        ConvergenceRecord(k=10, m=16, h=0.125, dof=1, rel_grad_ppr=1e-2),
    ]
    assert fit_order(records, column="rel_grad_ppr") == pytest.approx(2.0)


def test_fit_order_reference_table_rows():
    # arithmetic on frozen reference convergence rows
    assert fit_order([8.1935e-04, 2.0524e-04]) == pytest.approx(1.997, abs=5e-3)
    assert fit_order([7.2365e-03, 3.6177e-03]) == pytest.approx(1.000, abs=5e-3)


def test_fit_order_rejects_non_halving():
    with pytest.raises(ValueError):
        fit_order([(0.5, 1.0), (0.3, 0.5)])
    with pytest.raises(ValueError):
        fit_order([(0.5, 1.0)])


def test_critical_mesh_size_basic():
    h, m, evals = critical_mesh_size(5.0, 0.5, max_solves=12)
    assert h == 1.0 / m
    assert len(evals) <= 12
    errs = dict(evals)
    assert errs[m] <= 0.5
    # one-coarser mesh must fail, otherwise m is not the onset
    coarser = [mm for mm, e in evals if mm < m and e > 0.5]
    assert coarser


def test_critical_mesh_size_nested_tolerances():
    h_loose, _, _ = critical_mesh_size(8.0, 0.5)
    h_tight, _, _ = critical_mesh_size(8.0, 0.25)
    assert h_loose >= h_tight


def test_critical_mesh_size_not_reached():
    with pytest.raises(NotReached):
        critical_mesh_size(5.0, 0.02, max_solves=3)
    with pytest.raises(ValueError):
        critical_mesh_size(5.0, 1.5)
    with pytest.raises(ValueError):
        critical_mesh_size(5.0, 0.5, quantity="bogus")
