"""Slab-geometry discrete ordinates: transport sweeps and source iteration.

Angular fluxes live on the ``I + 1`` grid nodes and the emission density
``e = sigma_s * (scattering source) + q`` is carried at the nodes as well.
Two second-order cell relations are available:

``"characteristic"`` (default)
    exact integration along the ordinate with ``sigma_t`` constant and ``e``
    linear in the cell. Unconditionally positive transmission, so grazing
    ordinates (``|mu| << sigma_t dx``) are damped instead of oscillating.
``"diamond"``
    ``mu (psi[i+1] - psi[i]) / dx + sigma_t(x_{i+1/2}) (psi[i] + psi[i+1]) / 2 = e_{i+1/2}``
    with ``e_{i+1/2}`` the average of the two nodal emissions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConvergenceError, InvalidParameter, InvalidProblem, NumericalFailure
from .problem import SlabGrid, discrete_kernel

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITERS = 10_000
NEGATIVE_THRESHOLD = -1e-12
SCHEMES = ("characteristic", "diamond")


@dataclass
class IterationReport:
    iterations: int
    residual: float
    converged: bool
    residuals: list = field(default_factory=list)
    negative_count: int = 0


@dataclass(frozen=True, eq=False)
class AngularFlux1D:
    """``values[l, i]`` is the flux along ordinate ``l`` at node ``x_i``."""

    values: np.ndarray
    grid: SlabGrid
    quadrature: object


def scalar_flux(psi):
    """Weighted ordinate sum at every node."""
    return psi.quadrature.weights @ psi.values


def cell_optical_depth(sigma_t, grid):
    """Optical depth of every cell by Simpson's rule (exact for quadratic ``sigma_t``)."""
    x = grid.nodes
    mid = grid.midpoints
    return grid.dx / 6.0 * (sigma_t(x[:-1]) + 4.0 * sigma_t(mid) + sigma_t(x[1:]))


def characteristic_coefficients(nodes, tau, dx):
    """Per-ordinate cell coefficients ``(decay, c0, c1)`` of the characteristic relation.

    Downstream value = ``decay * upstream + c0 * e_up + c1 * (e_down - e_up)``.
    """
    a = tau[None, :] / np.abs(nodes)[:, None]
    sig = (tau / dx)[None, :]
    decay = np.exp(-a)
    one_minus = -np.expm1(-a)
    # 1 - (1 - e^-a)/a, switching to its series where cancellation would bite
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = 1.0 - one_minus / a
    small = a < 1e-3
    if np.any(small):
        s = a[small]
        frac[small] = s / 2.0 - s * s / 6.0 + s**3 / 24.0 - s**4 / 120.0
    return decay, one_minus / sig, frac / sig


@dataclass(frozen=True, eq=False)
class SlabSetup:
    """Problem data sampled on a grid; reusable across quadratures and samples."""

    problem: object
    grid: SlabGrid
    tau: np.ndarray
    sigma_t_mid: np.ndarray
    sigma_s_nodes: np.ndarray
    source_nodes: np.ndarray | None
    ratio: float

    @classmethod
    def build(cls, problem, cells):
        grid = problem.grid(cells) if isinstance(cells, (int, np.integer)) else cells
        mat = problem.material
        st_nodes, ss_nodes = mat.evaluate(grid.nodes)
        st_mid, ss_mid = mat.evaluate(grid.midpoints)
        ratio = max(float(np.max(ss_nodes / st_nodes)), float(np.max(ss_mid / st_mid)))
        if ratio >= 1.0:
            raise InvalidProblem(f"scattering ratio must be < 1, got {ratio}")
        tau = cell_optical_depth(mat.sigma_t, grid)
        q = None if problem.angular_source else np.asarray(problem.source(grid.nodes), dtype=float)
        return cls(problem, grid, tau, st_mid, ss_nodes, q, ratio)

    def source_for(self, nodes):
        if self.source_nodes is not None:
            return self.source_nodes[None, :]
        x = self.grid.nodes
        return np.asarray(self.problem.source(x[None, :], nodes[:, None]), dtype=float)

    def inflow_for(self, nodes):
        b = self.problem.boundary
        inflow = np.where(nodes > 0, b.left(np.abs(nodes)), b.right(-np.abs(nodes)))
        return np.ascontiguousarray(inflow, dtype=float)


class _Sweeper:
    """Binds a scheme to one quadrature on one grid."""

    def __init__(self, scheme, nodes, setup):
        if scheme not in SCHEMES:
            raise InvalidParameter(f"unknown slab scheme {scheme!r}; choose from {SCHEMES}")
        self.scheme = scheme
        self.nodes = np.ascontiguousarray(nodes, dtype=float)
        self.dx = setup.grid.dx
        self.cells = setup.grid.cells
        if scheme == "characteristic":
            self.coef = characteristic_coefficients(self.nodes, setup.tau, self.dx)
        else:
            self.sigma_mid = np.ascontiguousarray(setup.sigma_t_mid)

    def __call__(self, emission, inflow, psi):
        L = self.nodes.size
        emission = np.broadcast_to(emission, (L, self.cells + 1))
        if self.scheme == "characteristic":
            kernels.slab_sweep_lc(self.nodes, emission, *self.coef, inflow, psi)
        else:
            mid = np.ascontiguousarray(0.5 * (emission[:, :-1] + emission[:, 1:]))
            if mid.shape[0] != L:
                mid = np.broadcast_to(mid, (L, self.cells))
            kernels.slab_sweep_dd(self.nodes, mid, self.sigma_mid, self.dx, inflow, psi)


def sweep_slab(mu, emission, sigma_t, grid, inflow, scheme="characteristic"):
    """Sweep one ordinate across ``grid`` from its inflow boundary.

    ``emission`` holds the ``I + 1`` nodal emission values and ``sigma_t`` is
    a callable. Returns the ``I + 1`` nodal angular fluxes.
    """
    if mu == 0:
        raise InvalidParameter("direction cosine mu must be nonzero")
    tau = cell_optical_depth(sigma_t, grid)
    if np.any(tau <= 0):
        raise NumericalFailure("sweep needs a positive optical depth in every cell")
    st_mid = np.asarray(sigma_t(grid.midpoints), dtype=float)
    setup = SlabSetup(None, grid, tau, st_mid, None, None, 0.0)
    sweeper = _Sweeper(scheme, [float(mu)], setup)
    psi = np.empty((1, grid.cells + 1))
    e = np.ascontiguousarray(np.broadcast_to(emission, (grid.cells + 1,)), dtype=float)
    sweeper(e[None, :], np.array([float(inflow)]), psi)
    return psi[0]


def relative_change(new, old):
    """Max-norm change relative to the max-norm of ``new`` (absolute if ``new`` is zero)."""
    scale = np.max(np.abs(new))
    diff = np.max(np.abs(new - old))
    if scale == 0.0:
        return float(diff)
    return float(diff / scale)


def source_iteration_slab(
    problem,
    quadrature,
    cells=50,
    tol=DEFAULT_TOL,
    max_iters=DEFAULT_MAX_ITERS,
    scheme="characteristic",
    setup=None,
    kernel_matrix=None,
):
    """Solve the slab DOM system by source iteration.

    Each sweep freezes the scattering source at the previous iterate. Stops
    when the relative max-norm change of the scalar flux drops below ``tol``.

    Returns
    -------
    (AngularFlux1D, numpy.ndarray, IterationReport)

    Raises
    ------
    ConvergenceError
        ``max_iters`` sweeps did not reach ``tol``.
    """
    if tol <= 0:
        raise InvalidParameter("tolerance must be positive")
    if setup is None:
        setup = SlabSetup.build(problem, cells)
    grid = setup.grid
    nodes = quadrature.nodes
    w = quadrature.weights
    L = nodes.size
    isotropic = problem.kernel.isotropic and kernel_matrix is None
    if not isotropic:
        if kernel_matrix is None:
            kernel_matrix = discrete_kernel(quadrature, problem.kernel)
        wP = kernel_matrix * w[None, :]

    sweep = _Sweeper(scheme, nodes, setup)
    q = setup.source_for(nodes)
    inflow = setup.inflow_for(nodes)
    ss = setup.sigma_s_nodes
    scattering = bool(np.any(ss != 0.0))
    psi = np.zeros((L, grid.cells + 1))
    phi = np.zeros(grid.cells + 1)
    residuals = []
    res = np.inf
    for it in range(1, max_iters + 1):
        if isotropic:
            emission = ss * phi + q
        else:
            emission = ss * (wP @ psi) + q
        sweep(emission, inflow, psi)
        new_phi = w @ psi
        res = relative_change(new_phi, phi) if scattering else 0.0
        residuals.append(res)
        phi = new_phi
        if res < tol:
            break
    else:
        raise ConvergenceError(
            f"slab source iteration stopped after {max_iters} sweeps (residual {res:.3e})",
            residual=res,
            iterations=max_iters,
        )
    neg = int(np.count_nonzero(psi < NEGATIVE_THRESHOLD))
    if neg:
        log.debug("slab solve produced %d negative angular flux values", neg)
    report = IterationReport(it, res, True, residuals, neg)
    return AngularFlux1D(psi, grid, quadrature), phi, report
