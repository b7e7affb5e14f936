"""Transport problem data: cross sections, sources, inflow data, grids, kernels."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import InvalidParameter, InvalidProblem

__all__ = [
    "ScatteringKernel",
    "MaterialField",
    "SlabGrid",
    "XYGrid",
    "SlabBoundary",
    "XYBoundary",
    "SlabProblem",
    "XYProblem",
    "discrete_kernel",
    "kernel_vectors",
    "benchmark_center_source",
    "benchmark_slab_case",
    "benchmark_lattice",
    "read_mask",
    "write_mask",
    "default_lattice_mask",
    "constant",
]


def constant(value):
    """Vectorized constant field usable for any number of coordinate arguments."""
    value = float(value)

    def f(x, *rest):
        return np.full(np.shape(x), value)

    f.value = value
    return f


@dataclass(frozen=True)
class ScatteringKernel:
    """``P(u, u') = 1 + g cos(xi)``; ``g = 0`` is isotropic scattering."""

    g: float = 0.0

    def __post_init__(self):
        if not -1.0 <= self.g <= 1.0:
            raise InvalidParameter(f"anisotropy g must lie in [-1, 1], got {self.g}")

    @property
    def isotropic(self):
        return self.g == 0.0

    def __call__(self, cos_xi):
        return 1.0 + self.g * np.asarray(cos_xi)


XY_COSINE = "plane"


def kernel_vectors(quadrature, xy_cosine=None):
    """Rows ``u_l`` such that ``cos(xi) = u_l . u_l'`` for the discrete kernel.

    Slab: ``mu`` (the azimuthal average of ``u . u'``). X-Y: ``(c, s)`` for
    ``xy_cosine="plane"`` (default) or ``(c, s, zeta)`` for ``"sphere"``.

    The X-Y sets only carry the upper hemisphere ``zeta > 0``. Folding the
    mirror directions ``-zeta`` into each ordinate cancels the ``zeta zeta'``
    term, which is what ``"plane"`` keeps; it also makes every weighted row
    sum of the discrete kernel exactly one.
    """
    if quadrature.geometry == "slab":
        return quadrature.nodes[:, None]
    mode = XY_COSINE if xy_cosine is None else xy_cosine
    if mode == "sphere":
        return np.column_stack([quadrature.c, quadrature.s, quadrature.zeta])
    if mode == "plane":
        return np.column_stack([quadrature.c, quadrature.s])
    raise InvalidParameter(f"unknown X-Y cosine convention {mode!r}")


def discrete_kernel(quadrature, kernel, xy_cosine=None):
    """Matrix ``P[l, l'] = P(u_l', u_l)`` over a quadrature's ordinates."""
    n = len(quadrature)
    if kernel.isotropic:
        return np.ones((n, n))
    u = kernel_vectors(quadrature, xy_cosine)
    cos_xi = np.clip(u @ u.T, -1.0, 1.0)
    P = kernel(cos_xi)
    # exact symmetry regardless of the matmul's summation order
    return 0.5 * (P + P.T)


@dataclass(frozen=True)
class MaterialField:
    sigma_t: Callable
    sigma_s: Callable

    def evaluate(self, *coords):
        st = np.asarray(self.sigma_t(*coords), dtype=float)
        ss = np.asarray(self.sigma_s(*coords), dtype=float)
        if np.any(ss < 0):
            raise InvalidProblem("sigma_s must be nonnegative")
        if np.any(st <= ss):
            raise InvalidProblem("sigma_t must exceed sigma_s at every point")
        return st, ss

    def scattering_ratio(self, *coords):
        """``lambda = max sigma_s / sigma_t`` over the given evaluation points."""
        st, ss = self.evaluate(*coords)
        return float(np.max(ss / st))


@dataclass(frozen=True)
class SlabGrid:
    x_left: float
    x_right: float
    cells: int

    def __post_init__(self):
        if self.cells < 1 or not self.x_right > self.x_left:
            raise InvalidParameter("slab grid needs cells >= 1 and x_right > x_left")

    @property
    def dx(self):
        return (self.x_right - self.x_left) / self.cells

    @property
    def nodes(self):
        return self.x_left + self.dx * np.arange(self.cells + 1)

    @property
    def midpoints(self):
        return self.x_left + self.dx * (np.arange(self.cells) + 0.5)


@dataclass(frozen=True)
class XYGrid:
    """Uniform ``nx`` by ``ny`` cells; cell fields are indexed ``[j, i]`` (y row, x column)."""

    nx: int
    ny: int
    x_left: float = 0.0
    x_right: float = 1.0
    y_bottom: float = 0.0
    y_top: float = 1.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise InvalidParameter("X-Y grid needs at least one cell per direction")
        if not (self.x_right > self.x_left and self.y_top > self.y_bottom):
            raise InvalidParameter("X-Y grid bounds are inverted")

    @property
    def dx(self):
        return (self.x_right - self.x_left) / self.nx

    @property
    def dy(self):
        return (self.y_top - self.y_bottom) / self.ny

    @property
    def x_centers(self):
        return self.x_left + self.dx * (np.arange(self.nx) + 0.5)

    @property
    def y_centers(self):
        return self.y_bottom + self.dy * (np.arange(self.ny) + 0.5)

    def centers(self):
        """Meshgrid ``(X, Y)`` of cell centers, each shaped ``(ny, nx)``."""
        return np.meshgrid(self.x_centers, self.y_centers)


def _zero_inflow(t, *dirs):
    return np.zeros(np.broadcast(t, *dirs).shape)


@dataclass(frozen=True)
class SlabBoundary:
    """Inflow data: ``left(mu)`` for ``mu > 0`` and ``right(mu)`` for ``mu < 0``."""

    left: Callable = _zero_inflow
    right: Callable = _zero_inflow


@dataclass(frozen=True)
class XYBoundary:
    """Inflow data on each edge as ``f(t, c, s)``; ``t`` is the coordinate along the edge."""

    left: Callable = _zero_inflow
    right: Callable = _zero_inflow
    bottom: Callable = _zero_inflow
    top: Callable = _zero_inflow


@dataclass(frozen=True)
class SlabProblem:
    """Slab problem on ``[x_left, x_right]``.

    ``source`` is ``q(x)``, or ``q(x, mu)`` when ``angular_source`` is set.
    """

    material: MaterialField
    source: Callable
    boundary: SlabBoundary = field(default_factory=SlabBoundary)
    kernel: ScatteringKernel = field(default_factory=ScatteringKernel)
    x_left: float = 0.0
    x_right: float = 1.0
    name: str = "custom-slab"
    angular_source: bool = False

    geometry = "slab"

    def grid(self, cells):
        return SlabGrid(self.x_left, self.x_right, cells)


@dataclass(frozen=True)
class XYProblem:
    material: MaterialField
    source: Callable
    boundary: XYBoundary = field(default_factory=XYBoundary)
    kernel: ScatteringKernel = field(default_factory=ScatteringKernel)
    bounds: tuple = (0.0, 1.0, 0.0, 1.0)
    name: str = "custom-xy"
    mask: np.ndarray | None = None

    geometry = "xy"

    def grid(self, nx, ny=None):
        ny = nx if ny is None else ny
        self.check_grid(nx, ny)
        return XYGrid(nx, ny, *self.bounds)

    def check_grid(self, nx, ny):
        if self.mask is not None:
            rows, cols = self.mask.shape
            if ny % rows or nx % cols:
                raise InvalidParameter(
                    f"source mask {rows}x{cols} does not divide the {ny}x{nx} spatial grid"
                )


def with_kernel(problem, g):
    """Copy of ``problem`` with a different anisotropy parameter."""
    from dataclasses import replace

    return replace(problem, kernel=ScatteringKernel(g))


# --------------------------------------------------------------------------
# Benchmarks


def benchmark_center_source(g=0.0):
    """Unit square, sigma_t = 1, sigma_s = 0.5, q = 2 on the central square, vacuum inflow."""

    def q(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        inside = (x >= 0.4) & (x <= 0.6) & (y >= 0.4) & (y <= 0.6)
        return np.where(inside, 2.0, 0.0)

    return XYProblem(
        MaterialField(constant(1.0), constant(0.5)),
        q,
        kernel=ScatteringKernel(g),
        name="center-source",
    )


def _case_boundaries(case):
    third = 1.0 / 3.0
    if case == 1:

        def left(mu):
            return 3.0 * np.asarray(mu, dtype=float)

        def right(mu):
            return -5.0 * np.asarray(mu, dtype=float)

    elif case in (2, 3):
        a, b = (4.0 / 3.0, 2.0) if case == 2 else (3.0, 4.0)

        def left(mu):
            mu = np.asarray(mu, dtype=float)
            return np.where(mu <= third, 3.0 * mu, a - mu)

        def right(mu):
            mu = np.asarray(mu, dtype=float)
            return np.where(mu >= -third, -5.0 * mu, b + mu)

    else:
        raise InvalidParameter(f"slab benchmark case must be 1, 2 or 3, got {case!r}")
    return SlabBoundary(left, right)


def benchmark_slab_case(case, g=0.0):
    """Slab ``[0, 1]`` with sigma_t = 10x^2 + 1, sigma_s = 5x^2 + 0.5, q = 1 + x."""
    material = MaterialField(
        lambda x: 10.0 * np.asarray(x, dtype=float) ** 2 + 1.0,
        lambda x: 5.0 * np.asarray(x, dtype=float) ** 2 + 0.5,
    )
    return SlabProblem(
        material,
        lambda x: 1.0 + np.asarray(x, dtype=float),
        _case_boundaries(case),
        ScatteringKernel(g),
        name=f"slab-case-{case}",
    )


def read_mask(path):
    """Read an ASCII 0/1 grid with a ``rows cols`` header. Row 0 is the ``y_bottom`` side."""
    text = Path(path).read_text().split("\n")
    lines = [ln.strip() for ln in text if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        rows, cols = (int(v) for v in lines[0].split())
        data = np.array([[int(v) for v in ln.split()] for ln in lines[1:]], dtype=np.int8)
    except (ValueError, IndexError) as exc:
        raise InvalidParameter(f"malformed mask file {path}: {exc}") from None
    if data.shape != (rows, cols):
        raise InvalidParameter(f"mask {path}: header says {rows}x{cols}, body is {data.shape}")
    if not np.isin(data, (0, 1)).all():
        raise InvalidParameter(f"mask {path} must contain only 0 and 1")
    return data


def write_mask(path, mask):
    mask = np.asarray(mask, dtype=np.int8)
    lines = [f"{mask.shape[0]} {mask.shape[1]}"]
    lines += [" ".join(str(int(v)) for v in row) for row in mask]
    Path(path).write_text("\n".join(lines) + "\n")


def default_lattice_mask():
    with resources.as_file(resources.files("romsn") / "data" / "lattice_default.txt") as p:
        return read_mask(p)


def benchmark_lattice(mask=None, g=0.0):
    """Unit square, sigma_t = 1, sigma_s = 0.5, q = 1 on blocks where ``mask`` is 1."""
    if mask is None:
        mask = default_lattice_mask()
    elif isinstance(mask, (str, Path)):
        mask = read_mask(mask)
    mask = np.asarray(mask, dtype=np.int8)
    if mask.ndim != 2 or not np.isin(mask, (0, 1)).all():
        raise InvalidParameter("lattice mask must be a 2-D array of zeros and ones")
    rows, cols = mask.shape
    mask.setflags(write=False)

    def q(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        ci = np.clip(np.floor(x * cols).astype(int), 0, cols - 1)
        ri = np.clip(np.floor(y * rows).astype(int), 0, rows - 1)
        return mask[ri, ci].astype(float)

    return XYProblem(
        MaterialField(constant(1.0), constant(0.5)),
        q,
        kernel=ScatteringKernel(g),
        name="lattice",
        mask=mask,
    )
