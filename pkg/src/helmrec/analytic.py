"""Bessel functions, exact solutions and data for the two test problems.

The manufactured problem has source f = sin(k r)/r and exact solution

    u(r) = cos(k r)/k - c J0(k r),   c = (cos k + i sin k) / (k (J0(k) + i J1(k)))

(radially symmetric about the problem center).  The particular part
cos(k r)/k satisfies -u'' - u'/r - k^2 u = sin(k r)/r exactly; this is
enforced at build time by ``verify_manufactured``.  The Gaussian-source
problem multiplies the source by exp(-50 r) and has homogeneous impedance
data; it has no closed-form solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Point2

_X_MAX = 1.0e4
_SERIES_CUT = 15.0


def _bessel_series(order, x):
    """Ascending series, accumulated in extended precision."""
    z = np.asarray(x, dtype=np.longdouble) * 0.5
    z2 = z * z
    term = np.ones_like(z) if order == 0 else z.copy()
    total = term.copy()
    for k in range(1, 60):
        term = term * (-z2) / (k * (k + order))
        total += term
        if np.max(np.abs(term)) < 1e-22:
            break
    return total.astype(float)


def _bessel_asymptotic(order, x):
    """Hankel expansion for large arguments.

    The modulus/phase series are truncated after 29 terms; all terms are
    still decreasing there for x > 15, so the truncation error sits at the
    series floor, well below 1e-13.
    """
    xl = np.asarray(x, dtype=np.longdouble)
    mu = np.longdouble(4 * order * order)
    c = np.ones_like(xl)
    p = np.ones_like(xl)
    q = np.zeros_like(xl)
    sign_p, sign_q = -1.0, 1.0
    for k in range(28):
        c = c * (mu - (2 * k + 1) ** 2) / (8.0 * (k + 1) * xl)
        if k % 2 == 0:
            q += sign_q * c
            sign_q = -sign_q
        else:
            p += sign_p * c
            sign_p = -sign_p
    chi = xl - (2 * order + 1) * np.pi / 4.0
    val = np.sqrt(2.0 / (np.pi * xl)) * (p * np.cos(chi) - q * np.sin(chi))
    return val.astype(float)


def bessel_j(order, x):
    """Bessel function J0 or J1 on [0, 1e4], absolute error below 1e-13.

    Accepts scalars or arrays.  Ascending series (extended-precision
    accumulation) up to x = 15, Hankel asymptotic expansion beyond.
    """
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa < 0) or np.any(xa > _X_MAX):
        raise ValueError(f"argument out of supported range [0, {_X_MAX:g}]")
    out = np.empty_like(xa)
    small = xa <= _SERIES_CUT
    if small.any():
        out[small] = _bessel_series(order, xa[small])
    if (~small).any():
        out[~small] = _bessel_asymptotic(order, xa[~small])
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# problem descriptions


@dataclass(frozen=True)
class ProblemSpec:
    """Wave number, domain tag and test-problem kind.

    kind "bessel_exact" is the manufactured problem with known closed-form
    solution; "gaussian_source" is the localized-source problem with g = 0.
    """

    k: float
    domain: str
    kind: str
    center: Point2

    def __post_init__(self):
        if self.k < 1.0:
            raise ValueError("wave number must be >= 1")
        if self.kind not in ("bessel_exact", "gaussian_source"):
            raise ValueError(f"unknown problem kind {self.kind!r}")

    @property
    def has_exact(self):
        return self.kind == "bessel_exact"

    @property
    def c(self):
        """Coefficient of the J0 part of the exact solution."""
        k = self.k
        return complex(np.cos(k), np.sin(k)) / (k * complex(bessel_j(0, k), bessel_j(1, k)))


def bessel_problem(k, domain="hexagon", center=Point2(0.0, 0.0)):
    return ProblemSpec(k=float(k), domain=domain, kind="bessel_exact", center=Point2(*center))


def gaussian_problem(k, domain="unit_square", center=Point2(0.5, 0.5)):
    return ProblemSpec(k=float(k), domain=domain, kind="gaussian_source", center=Point2(*center))


@dataclass(frozen=True)
class ExactEval:
    value: complex
    gradient: np.ndarray  # complex 2-vector


def _radii(p, pts):
    d = np.asarray(pts, dtype=float) - np.array(p.center)
    return np.hypot(d[..., 0], d[..., 1]), d


def exact_values(p, pts):
    """Exact solution at an (N, 2) array of points (vectorized)."""
    if not p.has_exact:
        raise ValueError("problem has no closed-form solution")
    r, _ = _radii(p, pts)
    k, c = p.k, p.c
    return np.cos(k * r) / k - c * bessel_j(0, k * r)


def exact_gradients(p, pts):
    """Exact solution gradient at an (N, 2) array of points (vectorized)."""
    if not p.has_exact:
        raise ValueError("problem has no closed-form solution")
    r, d = _radii(p, pts)
    k, c = p.k, p.c
    du = -np.sin(k * r) + c * k * bessel_j(1, k * r)
    safe = np.where(r < 1e-10, 1.0, r)
    scale = np.where(r < 1e-10, 0.0, du / safe)
    return scale[..., None] * d


def exact_eval(p, pt):
    """Value and gradient of the exact solution at one point."""
    pts = np.array([[pt[0], pt[1]]])
    return ExactEval(complex(exact_values(p, pts)[0]), exact_gradients(p, pts)[0])


def source_values(p, pts):
    """Right-hand side f at an (N, 2) array of points (vectorized)."""
    r, _ = _radii(p, pts)
    k = p.k
    safe = np.where(r < 1e-12, 1.0, r)
    f = np.where(r < 1e-12, k, np.sin(k * r) / safe)
    if p.kind == "gaussian_source":
        f = f * np.exp(-50.0 * r)
    return f.astype(complex)


def source_f(p, pt):
    return complex(source_values(p, np.array([[pt[0], pt[1]]]))[0])


def robin_values(p, pts, normals):
    """Impedance data g = du/dn + i k u at boundary points (vectorized)."""
    if p.kind == "gaussian_source":
        return np.zeros(len(np.atleast_2d(pts)), dtype=complex)
    grads = exact_gradients(p, pts)
    vals = exact_values(p, pts)
    normals = np.asarray(normals, dtype=float)
    return np.einsum("ij,ij->i", grads, normals.astype(complex)) + 1j * p.k * vals


def robin_g(p, pt, normal):
    return complex(robin_values(p, np.array([[pt[0], pt[1]]]), np.array([normal]))[0])


def verify_manufactured(p, samples, step=1e-4):
    """Max residual of -lap(u) - k^2 u - f over the samples.

    The Laplacian is approximated by the 5-point stencil at steps h and
    h/2 combined by Richardson extrapolation.
    """
    if not p.has_exact:
        raise ValueError("needs the problem with a closed-form solution")
    pts = np.asarray(samples, dtype=float)

    def lap(h):
        e_x = np.array([h, 0.0])
        e_y = np.array([0.0, h])
        s = (
            exact_values(p, pts + e_x)
            + exact_values(p, pts - e_x)
            + exact_values(p, pts + e_y)
            + exact_values(p, pts - e_y)
            - 4.0 * exact_values(p, pts)
        )
        return s / h**2

    laplacian = (4.0 * lap(step / 2) - lap(step)) / 3.0
    residual = -laplacian - p.k**2 * exact_values(p, pts) - source_values(p, pts)
    return float(np.max(np.abs(residual)))
