"""Direct and iterative solution of the assembled complex sparse systems."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

_REFINE_STEPS = 3


@dataclass(frozen=True)
class SolveReport:
    relative_residual: float
    factor_nonzeros: int | None = None
    iterations: int | None = None
    wall_time: float = 0.0


class SingularSystem(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NoConvergence(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


def residual_norm(A, x, b):
    """Relative residual ||Ax - b|| / ||b||, recomputed from scratch."""
    csr = A.csr if hasattr(A, "csr") else A
    num = np.linalg.norm(csr @ x - b)
    den = np.linalg.norm(b)
    return float(num / den) if den > 0 else float(num)


def _solve_direct(csr, b, tol):
    start = time.perf_counter()
    try:
        lu = scipy.sparse.linalg.splu(csr.tocsc())
    except RuntimeError as exc:  # "Factor is exactly singular"
        raise SingularSystem(str(exc)) from exc

    u_diag = np.abs(lu.U.diagonal())
    pivot_floor = 1e-14 * np.abs(csr.data).max()
    if u_diag.min() < pivot_floor:
        raise SingularSystem(
            f"pivot {u_diag.min():.3e} below {pivot_floor:.3e} after ordering"
        )

    x = lu.solve(b)
    rel = residual_norm(csr, x, b)
    for _ in range(_REFINE_STEPS):
        if rel <= tol:
            break
        x = x + lu.solve(b - csr @ x)
        rel = residual_norm(csr, x, b)

    report = SolveReport(
        relative_residual=rel,
        factor_nonzeros=int(lu.L.nnz + lu.U.nnz),
        wall_time=time.perf_counter() - start,
    )
    if rel > tol:
        raise NoConvergence(
            f"direct solve stalled at relative residual {rel:.3e} > {tol:.3e}", report
        )
    return x, report


def _solve_iterative(csr, b, tol):
    start = time.perf_counter()
    n = csr.shape[0]
    cap = int(10 * np.sqrt(n)) + 1
    try:
        ilu = scipy.sparse.linalg.spilu(csr.tocsc(), drop_tol=1e-5, fill_factor=20)
    except RuntimeError as exc:
        raise SingularSystem(str(exc)) from exc
    prec = scipy.sparse.linalg.LinearOperator(csr.shape, ilu.solve, dtype=complex)

    count = [0]

    def cb(_):
        count[0] += 1

    x, info = scipy.sparse.linalg.gmres(
        csr, b, rtol=tol * 0.1, atol=0.0, maxiter=cap, restart=200, M=prec, callback=cb,
        callback_type="pr_norm",
    )
    rel = residual_norm(csr, x, b)
    report = SolveReport(
        relative_residual=rel, iterations=count[0], wall_time=time.perf_counter() - start
    )
    if info != 0 or rel > tol:
        raise NoConvergence(
            f"gmres stopped after {count[0]} iterations at relative residual {rel:.3e}",
            report,
        )
    return x, report


def solve(A, b, tol=1e-10, method="direct"):
    """Solve A x = b to the requested relative residual.

    Returns (x, SolveReport).  The residual in the report is recomputed
    independently of the solver path.
    """
    csr = A.csr if hasattr(A, "csr") else scipy.sparse.csr_matrix(A)
    b = np.asarray(b, dtype=complex)
    if csr.shape[0] != csr.shape[1] or csr.shape[0] != b.shape[0]:
        raise ValueError("matrix must be square and match the right-hand side")
    if tol < 1e-14:
        raise ValueError("tolerance below 1e-14 is not attainable in double precision")
    if method == "direct":
        return _solve_direct(csr, b, tol)
    if method == "iterative":
        return _solve_iterative(csr, b, tol)
    raise ValueError(f"unknown method {method!r}")
