"""Configuration-driven study runners and CSV emission.

Each refinement study builds its mesh hierarchy by red refinement of an
initial mesh (structured, Delaunay, or loaded from file), solves level by
level, and records FEM errors, recovered-gradient errors, the Richardson
combination of recovered gradients and the a posteriori estimator.  The
reference norms of the exact solution are computed once per wave number on
the finest mesh of the hierarchy so all levels share one denominator.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, fields as dc_fields

from .analytic import bessel_problem, exact_values, gaussian_problem
from .assembly import assemble_helmholtz, quadrature_rule
from .extrapolate import LevelPair, prolong, richardson, richardson_raw_gradient
from .fields import NodalField
from .mesh import (
    L_SHAPE_POLYGON,
    UNIT_SQUARE_POLYGON,
    MeshError,
    build_hexagon_mesh,
    build_square_mesh,
    delaunay_mesh,
    load_mesh,
    refine_red,
)
from .metrics import (
    CSV_COLUMNS,
    ConvergenceRecord,
    NotReached,
    critical_mesh_size,
    error_bundle,
    fit_order,
    grad_diff_l2,
    grad_error_const,
    grad_error_l2,
    reference_norms,
)
from .recovery import PatchDegenerate, recover_gradient
from .solve import NoConvergence, SingularSystem, solve

_LEVEL_ERRORS = (NoConvergence, SingularSystem, PatchDegenerate, MeshError)


class ConfigError(ValueError):
    """Invalid study configuration."""


@dataclass
class StudyConfig:
    domain: str = "square"  # hexagon | square | lshape
    problem: str = "bessel"  # bessel | gaussian
    mesh_source: str = "structured"  # structured | delaunay | file:<path>
    k_list: tuple = (10.0,)
    levels: tuple = (8, 16, 32)
    kh: float = 1.0
    eps: float = 0.5
    quantity: str = "fem_grad"
    diagonal: str = "north_east"
    solver: str = "direct"
    solve_tol: float = 1e-10
    quad_load: int = 4
    quad_err: int = 6
    target_h: float = 0.15
    seed: int = 0
    out: str = "study.csv"
    figure: bool = True

    def validate(self):
        if not self.k_list:
            raise ConfigError("at least one wave number is required")
        if any(k <= 0 for k in self.k_list):
            raise ConfigError("wave numbers must be positive")
        if not self.levels:
            raise ConfigError("level range must be non-empty")
        if self.domain not in ("hexagon", "square", "lshape"):
            raise ConfigError(f"unknown domain {self.domain!r}")
        if self.problem not in ("bessel", "gaussian"):
            raise ConfigError(f"unknown problem {self.problem!r}")
        src = self.mesh_source
        if src not in ("structured", "delaunay") and not src.startswith("file:"):
            raise ConfigError(f"unknown mesh source {src!r}")
        if self.diagonal not in ("north_east", "north_west"):
            raise ConfigError(f"unknown diagonal {self.diagonal!r}")
        if self.solver not in ("direct", "iterative"):
            raise ConfigError(f"unknown solver {self.solver!r}")
        return self


@dataclass
class PollutionRecord:
    k: float
    m: int
    h: float
    dof: int
    rel_h1_fem: float | None = None
    rel_l2_fem: float | None = None
    rel_energy_fem: float | None = None
    rel_grad_ppr: float | None = None
    rel_grad_diff: float | None = None
    status: str = "ok"


@dataclass
class CriticalRecord:
    k: float
    eps: float
    quantity: str
    m: int | None = None
    h: float | None = None
    solves: int | None = None
    status: str = "ok"


POLLUTION_COLUMNS = [f.name for f in dc_fields(PollutionRecord)]
CRITICAL_COLUMNS = [f.name for f in dc_fields(CriticalRecord)]


def _problem_for(cfg, k):
    if cfg.problem == "gaussian":
        return gaussian_problem(k, domain=cfg.domain)
    center = (0.0, 0.0)
    return bessel_problem(k, domain=cfg.domain, center=center)


def _initial_mesh(cfg):
    if cfg.mesh_source.startswith("file:"):
        return load_mesh(cfg.mesh_source[5:])
    if cfg.mesh_source == "delaunay":
        if cfg.domain == "square":
            poly = UNIT_SQUARE_POLYGON
        elif cfg.domain == "lshape":
            poly = L_SHAPE_POLYGON
        else:
            raise ConfigError("delaunay meshes are generated for square and lshape only")
        return delaunay_mesh(poly, cfg.target_h, seed=cfg.seed)
    m0 = int(cfg.levels[0])
    if cfg.domain == "hexagon":
        return build_hexagon_mesh(m0)
    dom = "unit_square" if cfg.domain == "square" else "l_shape"
    return build_square_mesh(m0, domain=dom, diagonal=cfg.diagonal)


def _mesh_chain(cfg):
    """Mesh per level plus the LevelPair linking consecutive levels.

    Structured levels are m values (each double the previous); Delaunay and
    file meshes use the level list only for its length (red refinements of
    the initial mesh).
    """
    levels = [int(v) for v in cfg.levels]
    structured = cfg.mesh_source == "structured"
    if structured:
        for a, b in zip(levels, levels[1:]):
            if b != 2 * a:
                raise ConfigError(f"structured levels must double: {a} -> {b}")

    meshes = [_initial_mesh(cfg)]
    pairs = [None]
    for _ in levels[1:]:
        fine, pm = refine_red(meshes[-1])
        pairs.append(LevelPair(meshes[-1], fine, pm))
        meshes.append(fine)
    labels = levels if structured else list(range(len(levels)))
    return labels, meshes, pairs


def run_refinement_study(cfg):
    """Solve every level, recover gradients, extrapolate against the previous
    level, and emit one ConvergenceRecord per level."""
    cfg.validate()
    quad_load = quadrature_rule("triangle", cfg.quad_load)
    quad_err = quadrature_rule("triangle", cfg.quad_err)
    records = []
    labels, meshes, pairs = _mesh_chain(cfg)

    for k in cfg.k_list:
        problem = _problem_for(cfg, k)
        reference = (
            reference_norms(problem, meshes[-1]) if problem.has_exact else None
        )
        prev = None
        prev_record = None
        for label, mesh, pair in zip(labels, meshes, pairs):
            record = ConvergenceRecord(k=k, m=label, h=mesh.h_max, dof=mesh.num_nodes)
            try:
                A, b = assemble_helmholtz(mesh, problem, quad_load)
                x, _ = solve(A, b, tol=cfg.solve_tol, method=cfg.solver)
                uh = NodalField(mesh, x)
                g_uh = recover_gradient(mesh, uh)

                if problem.has_exact:
                    bundle = error_bundle(mesh, uh, problem, quad_err, reference)
                    record.rel_h1_fem = bundle.rel_h1
                    record.rel_l2_fem = bundle.rel_l2
                    record.rel_energy_fem = bundle.rel_energy
                    record.rel_grad_ppr = (
                        grad_error_l2(mesh, g_uh, problem, quad_err) / reference.h1_semi
                    )
                    u_i = NodalField(mesh, exact_values(problem, mesh.nodes))
                    record.rel_grad_ppr_interp = (
                        grad_error_l2(mesh, recover_gradient(mesh, u_i), problem, quad_err)
                        / reference.h1_semi
                    )

                if pair is not None and prev is not None:
                    rg = richardson(pair, g_uh, prolong(pair, prev["g_uh"]))
                    record.eta = grad_diff_l2(mesh, rg, uh)
                    if problem.has_exact:
                        record.rel_grad_rppr = (
                            grad_error_l2(mesh, rg, problem, quad_err) / reference.h1_semi
                        )
                        raw = richardson_raw_gradient(pair, prev["uh"], uh)
                        record.rel_grad_rfem = (
                            grad_error_const(mesh, raw, problem, quad_err)
                            / reference.h1_semi
                        )
                        record.effectivity = record.eta / bundle.h1_semi_err

                if prev_record is not None and prev_record.status == "ok":
                    if prev_record.rel_h1_fem and record.rel_h1_fem:
                        record.order_fem = fit_order(
                            [prev_record, record], column="rel_h1_fem"
                        )
                    if prev_record.rel_grad_ppr and record.rel_grad_ppr:
                        record.order_ppr = fit_order(
                            [prev_record, record], column="rel_grad_ppr"
                        )

                prev = {"uh": uh, "g_uh": g_uh}
            except _LEVEL_ERRORS as exc:
                record.status = f"error: {exc}"
                prev = None
            records.append(record)
            prev_record = record
    return records


def run_pollution_scan(cfg):
    """One solve per wave number at fixed kh: m = round(k / kh)."""
    cfg.validate()
    if cfg.kh <= 0:
        raise ConfigError("kh must be positive")
    if cfg.domain != "hexagon":
        raise ConfigError("the pollution scan runs on the hexagon family")
    quad_load = quadrature_rule("triangle", cfg.quad_load)
    quad_err = quadrature_rule("triangle", cfg.quad_err)
    records = []
    for k in cfg.k_list:
        m = max(1, round(k / cfg.kh))
        mesh = build_hexagon_mesh(m)
        problem = bessel_problem(k, domain="hexagon")
        record = PollutionRecord(k=k, m=m, h=mesh.h_max, dof=mesh.num_nodes)
        try:
            reference = reference_norms(problem, mesh)
            A, b = assemble_helmholtz(mesh, problem, quad_load)
            x, _ = solve(A, b, tol=cfg.solve_tol, method=cfg.solver)
            uh = NodalField(mesh, x)
            bundle = error_bundle(mesh, uh, problem, quad_err, reference)
            record.rel_h1_fem = bundle.rel_h1
            record.rel_l2_fem = bundle.rel_l2
            record.rel_energy_fem = bundle.rel_energy
            g_uh = recover_gradient(mesh, uh)
            record.rel_grad_ppr = (
                grad_error_l2(mesh, g_uh, problem, quad_err) / reference.h1_semi
            )
            record.rel_grad_diff = grad_diff_l2(mesh, g_uh, uh) / reference.h1_semi
        except _LEVEL_ERRORS as exc:
            record.status = f"error: {exc}"
        records.append(record)
    return records


def run_estimator_only(cfg):
    """Estimator-per-level study for the problem without a closed form."""
    cfg = StudyConfig(**{**cfg.__dict__, "problem": "gaussian"})
    return run_refinement_study(cfg)


def run_critical_h(cfg):
    cfg.validate()
    records = []
    for k in cfg.k_list:
        record = CriticalRecord(k=k, eps=cfg.eps, quantity=cfg.quantity)
        try:
            h, m, evals = critical_mesh_size(
                k, cfg.eps, quantity=cfg.quantity, solver=cfg.solver,
                solve_tol=cfg.solve_tol,
            )
            record.m = m
            record.h = h
            record.solves = len(evals)
        except NotReached as exc:
            record.status = f"not reached: {exc}"
            record.solves = len(exc.evaluations or [])
        records.append(record)
    return records


# ---------------------------------------------------------------------------
# CSV emission


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):  # includes numpy scalars
        return repr(float(value))
    return str(value)


def write_records_csv(records, path, columns=None):
    """Write records atomically; floats keep full round-trip precision."""
    if columns is None:
        columns = CSV_COLUMNS
    lines = [",".join(columns)]
    for r in records:
        lines.append(",".join(_format_cell(getattr(r, c)) for c in columns))
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as f:
            f.write("\n".join(lines) + "\n")
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def read_records_csv(path):
    """Rows as dicts with floats parsed and empty cells as None."""
    with open(path) as f:
        lines = [ln for ln in f.read().splitlines() if ln]
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        row = {}
        for name, cell in zip(header, ln.split(",")):
            if cell == "":
                row[name] = None
            else:
                try:
                    row[name] = float(cell)
                except ValueError:
                    row[name] = cell
        rows.append(row)
    return rows
