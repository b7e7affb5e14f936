"""Semi-analytic slab oracle and convergence-order estimation.

The oracle expands the isotropic slab solution in scattering orders,

    phi = sum_p lambda^p phi_p,   phi_0 = T(q / sigma_r) + <b_mu>,   phi_p = T phi_{p-1},

with ``sigma_r = sigma_s / lambda``, ``T f = <A_mu (sigma_r f)>`` and ``<.>`` the
average over the truncated direction set ``[-1, -delta) U (delta, 1]``.
``A_mu`` inverts ``mu d/dx + sigma_t`` with zero inflow and ``b_mu`` carries
the boundary data. Both are integrated exactly along characteristics on a
fine x-grid, with the optical depth tabulated by Simpson's rule.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .ensemble import EnsembleConfig, l2_error, resolution, run_ensemble
from .errors import ConvergenceError, InvalidParameter, InvalidProblem
from .quadrature import gauss_slab, gauss_xy, uniform_slab, uniform_xy
from .slab import SlabSetup, characteristic_coefficients, source_iteration_slab
from .xy import XYSetup, source_iteration_xy

log = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# Neumann-series oracle


@dataclass(frozen=True)
class NeumannConfig:
    delta: float = 1e-3
    panels: int = 4096
    mu_order: int = 128
    tol: float = 1e-12
    max_terms: int = 200

    def __post_init__(self):
        if not 0.0 <= self.delta < 1.0:
            raise InvalidParameter(f"truncation delta must lie in [0, 1), got {self.delta}")
        if self.panels < 2 or self.mu_order < 1 or self.max_terms < 1:
            raise InvalidParameter("panels >= 2, mu_order >= 1 and max_terms >= 1 are required")
        if self.tol <= 0:
            raise InvalidParameter("tolerance must be positive")


@dataclass
class NeumannResult:
    x: np.ndarray
    phi: np.ndarray
    terms: int
    tail_bound: float
    term_norms: list = field(default_factory=list)
    lam: float = 0.0

    def at(self, points):
        """Linear interpolation of the oracle onto ``points`` (error O(panel width**2))."""
        return np.interp(points, self.x, self.phi)


class _Characteristics:
    """Fine-grid transport inverses ``A_mu`` for a fixed set of directions."""

    def __init__(self, problem, config):
        self.grid_x = np.linspace(problem.x_left, problem.x_right, config.panels + 1)
        x = self.grid_x
        h = x[1] - x[0]
        st = problem.material.sigma_t
        tau = h / 6.0 * (st(x[:-1]) + 4.0 * st(0.5 * (x[:-1] + x[1:])) + st(x[1:]))
        self.depth = np.concatenate([[0.0], np.cumsum(tau)])

        gx, gw = np.polynomial.legendre.leggauss(config.mu_order)
        half = 0.5 * (1.0 - config.delta)
        mu = config.delta + half * (gx + 1.0)
        # weights of an average over the truncated set (two halves)
        w = gw * half / (2.0 * (1.0 - config.delta))
        self.mu = mu
        self.weights = w
        self.decay, self.c0, self.c1 = characteristic_coefficients(mu, tau, h)

    def average_inverse(self, f):
        """``<A_mu f>`` over both half ranges for a nodal field ``f``."""
        K, P = self.decay.shape
        out = np.zeros((K, P + 1))
        fwd = f[None, :-1] * self.c0 + (f[None, 1:] - f[None, :-1]) * self.c1
        kernels.linear_recurrence(self.decay, np.ascontiguousarray(fwd), out)
        total = self.weights @ out
        fr = f[::-1]
        bwd = fr[None, :-1] * self.c0[:, ::-1] + (fr[None, 1:] - fr[None, :-1]) * self.c1[:, ::-1]
        out[:, 0] = 0.0
        kernels.linear_recurrence(
            np.ascontiguousarray(self.decay[:, ::-1]), np.ascontiguousarray(bwd), out
        )
        return total + (self.weights @ out)[::-1]

    def boundary_average(self, boundary):
        """``<b_mu>``: inflow data attenuated along straight paths."""
        d = self.depth
        left = boundary.left(self.mu)
        right = boundary.right(-self.mu)
        att_l = np.exp(-d[None, :] / self.mu[:, None])
        att_r = np.exp(-(d[-1] - d)[None, :] / self.mu[:, None])
        return self.weights @ (left[:, None] * att_l + right[:, None] * att_r)


def neumann_phi_slab(problem, config=None):
    """Scalar flux of an isotropic slab problem by its scattering-order series.

    Raises
    ------
    InvalidProblem
        anisotropic kernel, angular source or ``lambda >= 1``.
    ConvergenceError
        the tail bound is still above ``config.tol`` after ``max_terms`` terms.
    """
    config = config or NeumannConfig()
    if not problem.kernel.isotropic:
        raise InvalidProblem("the scattering-order oracle needs an isotropic kernel")
    if problem.angular_source:
        raise InvalidProblem("the scattering-order oracle needs an isotropic source")
    ch = _Characteristics(problem, config)
    x = ch.grid_x
    mid = 0.5 * (x[:-1] + x[1:])
    st, ss = problem.material.evaluate(x)
    lam = max(float(np.max(ss / st)), problem.material.scattering_ratio(mid))
    if lam >= 1.0:
        raise InvalidProblem(f"scattering ratio must be < 1, got {lam}")
    q = np.asarray(np.broadcast_to(problem.source(x), x.shape), dtype=float)

    phi_p = ch.average_inverse(q) + ch.boundary_average(problem.boundary)
    phi = phi_p.copy()
    norms = [float(np.max(np.abs(phi_p)))]
    if lam == 0.0:
        return NeumannResult(x, phi, 1, 0.0, norms, 0.0)
    sigma_r = ss / lam
    p = 0
    bound = lam / (1.0 - lam) * norms[0]
    while bound >= config.tol:
        if p + 1 >= config.max_terms:
            raise ConvergenceError(
                f"scattering-order series not converged after {config.max_terms} terms "
                f"(tail bound {bound:.3e})",
                residual=bound,
                iterations=config.max_terms,
            )
        p += 1
        phi_p = ch.average_inverse(sigma_r * phi_p)
        phi += lam**p * phi_p
        norms.append(float(np.max(np.abs(phi_p))))
        bound = lam ** (p + 1) / (1.0 - lam) * norms[-1]
    return NeumannResult(x, phi, p + 1, bound, norms, lam)


# --------------------------------------------------------------------------
# Order fits


@dataclass(frozen=True)
class OrderFit:
    h: np.ndarray
    values: np.ndarray
    slope: float
    intercept: float
    residual: float
    endpoint_slope: float


def fit_order(points):
    """Least-squares slope of ``log(value)`` against ``log(h)``, plus the endpoint slope."""
    pts = list(points)
    if len(pts) < 2:
        raise InvalidParameter("an order fit needs at least two points")
    h = np.array([p[0] for p in pts], dtype=float)
    v = np.array([p[1] for p in pts], dtype=float)
    if np.any(h <= 0) or np.any(v <= 0):
        raise InvalidParameter("order fits need positive resolutions and values")
    if np.unique(h).size < 2:
        raise InvalidParameter("order fits need at least two distinct resolutions")
    lh, lv = np.log(h), np.log(v)
    A = np.column_stack([lh, np.ones_like(lh)])
    (slope, intercept), *_ = np.linalg.lstsq(A, lv, rcond=None)
    resid = float(np.sqrt(np.mean((A @ np.array([slope, intercept]) - lv) ** 2)))
    order = np.argsort(h)
    lo, hi = order[0], order[-1]
    endpoint = float((lv[hi] - lv[lo]) / (lh[hi] - lh[lo]))
    return OrderFit(h, v, float(slope), float(intercept), resid, endpoint)


# --------------------------------------------------------------------------
# Convergence studies

QUADRATURES = {
    ("slab", "uniform"): uniform_slab,
    ("slab", "gauss"): gauss_slab,
    ("xy", "uniform"): uniform_xy,
    ("xy", "gauss"): gauss_xy,
}


def build_quadrature(geometry, kind, level):
    try:
        return QUADRATURES[geometry, kind](level)
    except KeyError:
        raise InvalidParameter(f"unknown quadrature {kind!r} for {geometry}") from None


def dom_resolution(quadrature):
    """Angular cell size of a deterministic set: ``1/M`` (slab) or ``pi/(4M)`` (X-Y)."""
    if quadrature.geometry == "slab":
        return 1.0 / quadrature.half_count
    return np.pi / (4.0 * quadrature.per_quadrant)


def solve_dom(problem, quadrature, cells, tol=1e-10, setup=None):
    """Scalar flux of a deterministic solve on ``cells`` (slab ``I`` or X-Y ``nx = ny``)."""
    if problem.geometry == "slab":
        return source_iteration_slab(problem, quadrature, cells, tol=tol, setup=setup)[1]
    return source_iteration_xy(problem, quadrature, cells, tol=tol, setup=setup)[1]


@dataclass(frozen=True)
class StudyRow:
    level: int
    resolution: float
    error: float
    bias: float | None = None
    mean_variance: float | None = None


@dataclass
class StudyResult:
    rows: list
    error_fit: OrderFit
    bias_fit: OrderFit | None
    reference: str


def convergence_study(
    problem,
    method,
    levels,
    reference,
    cells=50,
    quadrature="uniform",
    samples=1,
    seed=0,
    jobs=1,
    tol=1e-10,
):
    """Error (and bias, for ROM) against a reference at each angular level.

    ``method`` is ``"dom"`` or ``"rom"``. ``reference`` is either a scalar flux
    on the same grid or a pair ``(kind, level)`` naming a deterministic set to
    solve with.
    """
    levels = sorted(int(v) for v in levels)
    geometry = problem.geometry
    setup = SlabSetup.build(problem, cells) if geometry == "slab" else XYSetup.build(problem, cells)
    if isinstance(reference, tuple):
        kind, ref_level = reference
        ref_quad = build_quadrature(geometry, kind, ref_level)
        if method == "dom" and ref_level <= max(levels):
            raise InvalidParameter("the reference must be finer than every studied level")
        phi_ref = solve_dom(problem, ref_quad, cells, tol, setup)
        label = f"{kind}-{ref_level}"
    else:
        phi_ref = np.asarray(reference, dtype=float)
        label = "supplied"

    rows = []
    for level in levels:
        if method == "dom":
            quad = build_quadrature(geometry, quadrature, level)
            phi = solve_dom(problem, quad, cells, tol, setup)
            rows.append(StudyRow(level, dom_resolution(quad), l2_error(phi, phi_ref)))
        elif method == "rom":
            cfg = EnsembleConfig(level, samples, seed=seed, jobs=jobs, cells=cells, tol=tol)
            _, m = run_ensemble(problem, cfg, phi_ref)
            rows.append(
                StudyRow(level, resolution(geometry, level), m.error, m.bias, m.mean_variance)
            )
        else:
            raise InvalidParameter(f"unknown method {method!r}; choose 'dom' or 'rom'")
    error_fit = fit_order((r.resolution, r.error) for r in rows)
    bias_fit = None
    if method == "rom" and len(rows) >= 2 and all(r.bias > 0 for r in rows):
        bias_fit = fit_order((r.resolution, r.bias) for r in rows)
    return StudyResult(rows, error_fit, bias_fit, label)
