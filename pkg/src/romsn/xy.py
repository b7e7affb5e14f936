"""X-Y geometry discrete ordinates with diamond-difference sweeps.

Cell fields are indexed ``[j, i]`` (row ``j`` runs along y from the bottom
edge, column ``i`` along x from the left edge). Each sweep solves

    psi = (ax psi_in_x + ay psi_in_y + e) / (sigma_t + ax + ay),
    ax = 2|c|/dx,  ay = 2|s|/dy,

cell by cell from the two inflow edges, and closes the outgoing edges with
``psi_out = 2 psi - psi_in``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConvergenceError, InvalidParameter, InvalidProblem
from .problem import XYGrid, discrete_kernel, kernel_vectors
from .slab import DEFAULT_MAX_ITERS, DEFAULT_TOL, NEGATIVE_THRESHOLD, IterationReport, relative_change

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class AngularFlux2D:
    """``values[l, j, i]``: cell-centre flux along ordinate ``l``."""

    values: np.ndarray
    grid: XYGrid
    quadrature: object


def scalar_flux_xy(psi):
    """Weighted ordinate sum in every cell."""
    return np.tensordot(psi.quadrature.weights, psi.values, axes=1)


@dataclass(frozen=True, eq=False)
class XYSetup:
    """Cross sections and source sampled at cell centres."""

    problem: object
    grid: XYGrid
    sigma_t: np.ndarray
    sigma_s: np.ndarray
    source: np.ndarray
    ratio: float

    @classmethod
    def build(cls, problem, nx, ny=None):
        grid = problem.grid(nx, ny)
        X, Y = grid.centers()
        st, ss = problem.material.evaluate(X, Y)
        st = np.ascontiguousarray(np.broadcast_to(st, X.shape), dtype=float)
        ss = np.ascontiguousarray(np.broadcast_to(ss, X.shape), dtype=float)
        ratio = float(np.max(ss / st))
        if ratio >= 1.0:
            raise InvalidProblem(f"scattering ratio must be < 1, got {ratio}")
        q = np.ascontiguousarray(np.broadcast_to(problem.source(X, Y), X.shape), dtype=float)
        return cls(problem, grid, st, ss, q, ratio)

    def inflow_for(self, quadrature):
        """Edge-midpoint inflow ``(inflow_x (L, ny), inflow_y (L, nx))``."""
        b = self.problem.boundary
        g = self.grid
        c = quadrature.c[:, None]
        s = quadrature.s[:, None]
        yc = g.y_centers[None, :]
        xc = g.x_centers[None, :]
        inx = np.where(c > 0, b.left(yc, c, s), b.right(yc, c, s))
        iny = np.where(s > 0, b.bottom(xc, c, s), b.top(xc, c, s))
        return (
            np.ascontiguousarray(np.broadcast_to(inx, (c.size, g.ny)), dtype=float),
            np.ascontiguousarray(np.broadcast_to(iny, (c.size, g.nx)), dtype=float),
        )


def dd_sweep_xy(c, s, emission, sigma_t, grid, inflow_x=0.0, inflow_y=0.0):
    """Sweep a single ordinate ``(c, s)``; returns the ``(ny, nx)`` cell fluxes.

    ``inflow_x`` holds the values on the x-inflow edge (one per row) and
    ``inflow_y`` those on the y-inflow edge (one per column).
    """
    if c == 0 or s == 0:
        raise InvalidParameter("X-Y sweeps need c != 0 and s != 0")
    ny, nx = grid.ny, grid.nx
    e = np.ascontiguousarray(np.broadcast_to(emission, (1, ny, nx)), dtype=float)
    sig = np.ascontiguousarray(np.broadcast_to(sigma_t, (ny, nx)), dtype=float)
    inx = np.ascontiguousarray(np.broadcast_to(inflow_x, (1, ny)), dtype=float)
    iny = np.ascontiguousarray(np.broadcast_to(inflow_y, (1, nx)), dtype=float)
    psi = np.empty((1, ny, nx))
    phi = np.zeros((ny, nx))
    kernels.dd_sweep(
        np.array([float(c)]), np.array([float(s)]), np.ones(1),
        e, sig, grid.dx, grid.dy, inx, iny, psi, phi, True,
    )
    return psi[0]


def source_iteration_xy(
    problem,
    quadrature,
    nx=100,
    ny=None,
    tol=DEFAULT_TOL,
    max_iters=DEFAULT_MAX_ITERS,
    setup=None,
    kernel_matrix=None,
    store_psi=False,
):
    """Solve the X-Y DOM system by source iteration.

    Isotropic problems never form the angular flux array unless
    ``store_psi`` is set. Anisotropic problems use the rank-revealing form of
    ``1 + g cos(xi)`` (scalar flux plus first angular moments); passing an
    explicit ``kernel_matrix`` switches to a dense ordinate coupling instead.

    Returns
    -------
    (AngularFlux2D or None, numpy.ndarray, IterationReport)
    """
    if tol <= 0:
        raise InvalidParameter("tolerance must be positive")
    if setup is None:
        setup = XYSetup.build(problem, nx, ny)
    grid = setup.grid
    L = len(quadrature)
    c = np.ascontiguousarray(quadrature.c)
    s = np.ascontiguousarray(quadrature.s)
    w = np.ascontiguousarray(quadrature.weights)
    inflow_x, inflow_y = setup.inflow_for(quadrature)
    shape = (grid.ny, grid.nx)

    mode = "isotropic"
    if kernel_matrix is not None:
        mode = "matrix"
        wP = kernel_matrix * w[None, :]
    elif not problem.kernel.isotropic:
        mode = "moments"
        U = kernel_vectors(quadrature)  # (L, k)
        g = problem.kernel.g
    need_psi = store_psi or mode != "isotropic"

    ss = setup.sigma_s
    q = setup.source
    scattering = bool(np.any(ss != 0.0))
    psi = np.zeros((L,) + shape) if need_psi else np.empty((1, 1, 1))
    phi = np.zeros(shape)
    residuals = []
    res = np.inf
    for it in range(1, max_iters + 1):
        if mode == "isotropic":
            emission = np.broadcast_to(ss * phi + q, (L,) + shape)
        elif mode == "moments":
            J = np.tensordot(U.T * w, psi, axes=1)  # (k, ny, nx)
            emission = ss * (phi + g * np.tensordot(U, J, axes=1)) + q
        else:
            emission = ss * (wP @ psi.reshape(L, -1)).reshape((L,) + shape) + q
        new_phi = np.zeros(shape)
        kernels.dd_sweep(
            c, s, w, emission, setup.sigma_t, grid.dx, grid.dy,
            inflow_x, inflow_y, psi, new_phi, need_psi,
        )
        res = relative_change(new_phi, phi) if scattering else 0.0
        residuals.append(res)
        phi = new_phi
        if res < tol:
            break
    else:
        raise ConvergenceError(
            f"X-Y source iteration stopped after {max_iters} sweeps (residual {res:.3e})",
            residual=res,
            iterations=max_iters,
        )
    neg = int(np.count_nonzero(psi < NEGATIVE_THRESHOLD)) if need_psi else 0
    if neg:
        log.debug("X-Y solve produced %d negative angular flux values", neg)
    report = IterationReport(it, res, True, residuals, neg)
    angular = AngularFlux2D(psi, grid, quadrature) if need_psi else None
    return angular, phi, report


# --------------------------------------------------------------------------
# Post-processing


def bilinear(field_, grid, x, y):
    """Bilinear interpolation of a cell-centre field; clamps to the outermost centres."""
    xc, yc = grid.x_centers, grid.y_centers
    fx = np.clip((np.asarray(x) - xc[0]) / grid.dx, 0.0, grid.nx - 1)
    fy = np.clip((np.asarray(y) - yc[0]) / grid.dy, 0.0, grid.ny - 1)
    i0 = np.minimum(np.floor(fx).astype(int), max(grid.nx - 2, 0))
    j0 = np.minimum(np.floor(fy).astype(int), max(grid.ny - 2, 0))
    i1 = np.minimum(i0 + 1, grid.nx - 1)
    j1 = np.minimum(j0 + 1, grid.ny - 1)
    tx = fx - i0
    ty = fy - j0
    return (
        (1 - tx) * (1 - ty) * field_[j0, i0]
        + tx * (1 - ty) * field_[j0, i1]
        + (1 - tx) * ty * field_[j1, i0]
        + tx * ty * field_[j1, i1]
    )


def circle_profile(field_, grid, center=(0.5, 0.5), radius=0.35, count=360):
    """Field sampled at ``count`` equally spaced angles on a circle; returns ``(angles, values)``."""
    angles = 2.0 * np.pi * np.arange(count) / count
    x = center[0] + radius * np.cos(angles)
    y = center[1] + radius * np.sin(angles)
    return angles, bilinear(field_, grid, x, y)


def relative_variation(values):
    """Peak-to-trough spread relative to the mean: ``(max - min) / mean``."""
    values = np.asarray(values, dtype=float)
    mean = values.mean()
    if mean == 0.0:
        return 0.0
    return float((values.max() - values.min()) / mean)


def write_pgm(path, field_):
    """Write a field as an 8-bit binary graymap, top image row = largest y."""
    f = np.asarray(field_, dtype=float)
    lo, hi = float(f.min()), float(f.max())
    scaled = np.zeros_like(f) if hi == lo else (f - lo) / (hi - lo)
    img = np.round(255 * scaled[::-1]).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
