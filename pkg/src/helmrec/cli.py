"""Command-line runner: regenerates the convergence tables and figure data.

Subcommands: study, pollution, estimate, critical-h, mesh-report,
dump-matrix.  Every option can also be supplied through a flat
``key = value`` config file (--config); command-line flags win.

Exit codes: 0 success, 1 configuration error, 2 per-level failures with
partial output written.
"""

from __future__ import annotations

import argparse
import os
import sys

from .assembly import assemble_helmholtz, quadrature_rule, write_matrix_market
from .mesh import alpha_report, build_hexagon_mesh, build_square_mesh, load_mesh, save_mesh
from .studies import (
    CRITICAL_COLUMNS,
    CSV_COLUMNS,
    POLLUTION_COLUMNS,
    ConfigError,
    StudyConfig,
    run_critical_h,
    run_estimator_only,
    run_pollution_scan,
    run_refinement_study,
    write_records_csv,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        raise SystemExit(f"{self.prog}: error: {message}") from None


def _parse_k_list(text):
    try:
        return tuple(float(v) for v in str(text).split(","))
    except ValueError as exc:
        raise ConfigError(f"bad wave-number list {text!r}") from exc


def _parse_levels(text):
    """'a..b' doubles from a to b; 'a,b,c' is explicit; 'a' is one level."""
    text = str(text)
    try:
        if ".." in text:
            lo, hi = (int(v) for v in text.split("..", 1))
            levels = [lo]
            while levels[-1] < hi:
                levels.append(levels[-1] * 2)
            if levels[-1] != hi:
                raise ConfigError(f"range {text!r} does not double from {lo} to {hi}")
            return tuple(levels)
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad level range {text!r}") from exc


def read_config_file(path):
    values = {}
    with open(path) as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"bad config line {line!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return values


_OPTION_SPECS = {
    # name: (flag, converter)
    "domain": ("--domain", str),
    "problem": ("--problem", str),
    "mesh": ("--mesh", str),
    "k": ("--k", str),
    "levels": ("--levels", str),
    "kh": ("--kh", float),
    "eps": ("--eps", float),
    "quantity": ("--quantity", str),
    "diagonal": ("--diagonal", str),
    "solver": ("--solver", str),
    "solve_tol": ("--solve-tol", float),
    "quad_load": ("--quad-load", int),
    "quad_err": ("--quad-err", int),
    "target_h": ("--target-h", float),
    "seed": ("--seed", int),
    "out": ("--out", str),
}

_DIAGONALS = {"ne": "north_east", "nw": "north_west", "north_east": "north_east",
              "north_west": "north_west"}


def _add_common(sub):
    sub.add_argument("--config", default=None, help="flat key = value file")
    for name, (flag, conv) in _OPTION_SPECS.items():
        sub.add_argument(flag, dest=name, default=None, type=conv)
    sub.add_argument("--figure", dest="figure", action="store_true", default=None)
    sub.add_argument("--no-figure", dest="figure", action="store_false", default=None)


def build_config(args):
    raw = {}
    if args.config:
        raw.update(read_config_file(args.config))
    for name in list(_OPTION_SPECS) + ["figure"]:
        val = getattr(args, name, None)
        if val is not None:
            raw[name] = val

    cfg = StudyConfig()
    if "domain" in raw:
        cfg.domain = str(raw["domain"])
    if "problem" in raw:
        cfg.problem = str(raw["problem"])
    if "mesh" in raw:
        cfg.mesh_source = str(raw["mesh"])
    if "k" in raw:
        cfg.k_list = _parse_k_list(raw["k"])
    if "levels" in raw:
        cfg.levels = _parse_levels(raw["levels"])
    if "kh" in raw:
        cfg.kh = float(raw["kh"])
    if "eps" in raw:
        cfg.eps = float(raw["eps"])
    if "quantity" in raw:
        cfg.quantity = str(raw["quantity"]).replace("-", "_")
    if "diagonal" in raw:
        diag = str(raw["diagonal"])
        if diag not in _DIAGONALS:
            raise ConfigError(f"unknown diagonal {diag!r}")
        cfg.diagonal = _DIAGONALS[diag]
    if "solver" in raw:
        cfg.solver = str(raw["solver"])
    if "solve_tol" in raw:
        cfg.solve_tol = float(raw["solve_tol"])
    if "quad_load" in raw:
        cfg.quad_load = int(raw["quad_load"])
    if "quad_err" in raw:
        cfg.quad_err = int(raw["quad_err"])
    if "target_h" in raw:
        cfg.target_h = float(raw["target_h"])
    if "seed" in raw:
        cfg.seed = int(raw["seed"])
    if "out" in raw:
        cfg.out = str(raw["out"])
    if "figure" in raw:
        cfg.figure = raw["figure"] in (True, "true", "yes", "1")
    return cfg.validate()


def _emit(records, cfg, columns, figure_fn):
    write_records_csv(records, cfg.out, columns)
    print(f"wrote {cfg.out} ({len(records)} rows)")
    if cfg.figure and figure_fn is not None:
        from . import report

        fig_path = os.path.splitext(cfg.out)[0] + ".png"
        figure_fn(records, fig_path)
        print(f"wrote {fig_path}")
    failures = [r for r in records if getattr(r, "status", "ok") != "ok"]
    for r in failures:
        print(f"  level k={r.k} m={getattr(r, 'm', '?')}: {r.status}", file=sys.stderr)
    return 2 if failures else 0


def _cmd_study(cfg):
    from .report import study_figure

    return _emit(run_refinement_study(cfg), cfg, CSV_COLUMNS, study_figure)


def _cmd_pollution(cfg):
    from .report import pollution_figure

    cfg.domain = "hexagon"
    return _emit(run_pollution_scan(cfg), cfg, POLLUTION_COLUMNS, pollution_figure)


def _cmd_estimate(cfg):
    from .report import estimate_figure

    return _emit(run_estimator_only(cfg), cfg, CSV_COLUMNS, estimate_figure)


def _cmd_critical(cfg):
    from .report import critical_figure

    return _emit(run_critical_h(cfg), cfg, CRITICAL_COLUMNS, critical_figure)


def _meshes_for_report(cfg):
    if cfg.mesh_source.startswith("file:"):
        return [load_mesh(cfg.mesh_source[5:])]
    meshes = []
    for m in cfg.levels:
        if cfg.domain == "hexagon":
            meshes.append(build_hexagon_mesh(int(m)))
        else:
            dom = "unit_square" if cfg.domain == "square" else "l_shape"
            meshes.append(build_square_mesh(int(m), domain=dom, diagonal=cfg.diagonal))
    return meshes


def _cmd_mesh_report(cfg, export=None):
    meshes = _meshes_for_report(cfg)
    report = alpha_report(meshes)
    for h, di, db in report.levels:
        print(f"h={h:.6g}  interior defect={di:.3e}  boundary defect={db:.3e}")
    print(f"quality: {report.label}", end="")
    if report.fitted_alpha is not None:
        print(f", fitted alpha={report.fitted_alpha:.3f}")
    else:
        print()
    if export:
        save_mesh(meshes[-1], export)
        print(f"wrote {export}")
    return 0


def _cmd_dump_matrix(cfg):
    from .analytic import bessel_problem, gaussian_problem

    meshes = _meshes_for_report(cfg)
    k = cfg.k_list[0]
    problem = (
        gaussian_problem(k, domain=cfg.domain)
        if cfg.problem == "gaussian"
        else bessel_problem(k, domain=cfg.domain)
    )
    A, _ = assemble_helmholtz(meshes[-1], problem, quadrature_rule("triangle", cfg.quad_load))
    write_matrix_market(A, cfg.out)
    print(f"wrote {cfg.out} ({A.n} unknowns)")
    return 0


def main(argv=None):
    parser = _Parser(prog="helmrec", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("study", "pollution", "estimate", "critical-h", "mesh-report", "dump-matrix"):
        sub = subs.add_parser(name)
        _add_common(sub)
        if name == "mesh-report":
            sub.add_argument("--export", default=None, help="write the finest mesh to a file")

    try:
        args = parser.parse_args(argv)
        cfg = build_config(args)
        if args.command == "study":
            return _cmd_study(cfg)
        if args.command == "pollution":
            return _cmd_pollution(cfg)
        if args.command == "estimate":
            return _cmd_estimate(cfg)
        if args.command == "critical-h":
            return _cmd_critical(cfg)
        if args.command == "mesh-report":
            return _cmd_mesh_report(cfg, export=args.export)
        if args.command == "dump-matrix":
            return _cmd_dump_matrix(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return 1
        return exc.code if exc.code is not None else 0
    except (ConfigError, OSError) as exc:
        print(f"helmrec: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
