"""Angular quadrature sets, velocity partitions and random ordinate samples.

All weights are normalized to sum to one, so the scattering term is always a
weighted *average* over directions.

Slab sets store nodes in ascending order ``-mu_M, ..., -mu_1, mu_1, ..., mu_M``.
X-Y sets store the first-quadrant ordinates followed by their images at
``pi - theta``, ``pi + theta`` and ``2 pi - theta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import InvalidParameter, NumericalFailure

__all__ = [
    "SlabQuadrature",
    "XYQuadrature",
    "VelocityPartition",
    "RomSample",
    "legendre_roots",
    "uniform_slab",
    "gauss_slab",
    "uniform_xy",
    "gauss_xy",
    "partition_velocity",
    "sample_rom",
]


def _frozen(*arrays):
    for a in arrays:
        a.setflags(write=False)


@dataclass(frozen=True, eq=False)
class SlabQuadrature:
    nodes: np.ndarray
    weights: np.ndarray
    half_count: int
    kind: str

    def __post_init__(self):
        _frozen(self.nodes, self.weights)

    def __len__(self):
        return self.nodes.size

    @property
    def geometry(self):
        return "slab"


@dataclass(frozen=True, eq=False)
class XYQuadrature:
    zeta: np.ndarray
    theta: np.ndarray
    weights: np.ndarray
    per_quadrant: int
    level: int
    kind: str
    c: np.ndarray = field(init=False)
    s: np.ndarray = field(init=False)

    def __post_init__(self):
        r = np.sqrt(1.0 - self.zeta**2)
        object.__setattr__(self, "c", r * np.cos(self.theta))
        object.__setattr__(self, "s", r * np.sin(self.theta))
        _frozen(self.zeta, self.theta, self.weights, self.c, self.s)

    def __len__(self):
        return self.zeta.size

    @property
    def geometry(self):
        return "xy"


@dataclass(frozen=True, eq=False)
class VelocityPartition:
    """Cells of velocity space that random ordinates are drawn from.

    ``lower``/``upper`` have shape ``(n, 1)`` in slab geometry (interval in mu)
    and ``(n, 2)`` in X-Y geometry (rectangle in ``(zeta, theta)``). The first
    ``symmetric_half`` cells are the independent ones; the rest are images.
    """

    geometry: str
    level: int
    delta: float
    lower: np.ndarray
    upper: np.ndarray
    measures: np.ndarray
    diameters: np.ndarray
    symmetric_half: int

    def __post_init__(self):
        _frozen(self.lower, self.upper, self.measures, self.diameters)

    @property
    def n_cells(self):
        return self.measures.size

    @property
    def total_measure(self):
        return float(self.measures.sum())

    @property
    def stream(self):
        return rng.stream_id(self.geometry, self.level, self.delta)


@dataclass(frozen=True, eq=False)
class RomSample:
    quadrature: SlabQuadrature | XYQuadrature
    partition: VelocityPartition
    sample_seed: int
    sample_index: int

    @property
    def rescaled_weights(self):
        return self.partition.n_cells * self.quadrature.weights


# --------------------------------------------------------------------------
# Legendre roots


def _legendre_pair(n, x):
    """Return ``(L_n(x), L_{n-1}(x))`` by the three-term recurrence."""
    p0 = np.ones_like(x)
    p1 = x.copy()
    if n == 0:
        return p0, np.zeros_like(x)
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    return p1, p0


def legendre_roots(n, tol=1e-14, max_iter=100):
    """Roots and derivative values of the Legendre polynomial of degree ``n``.

    Newton iteration on the three-term recurrence, started from the
    asymptotic guesses ``cos(pi (k - 1/4) / (n + 1/2))``. Returns roots in
    descending order together with ``L_n'`` at the roots.
    """
    if n < 1:
        raise InvalidParameter(f"Legendre degree must be >= 1, got {n}")
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(max_iter):
        pn, pm = _legendre_pair(n, x)
        dp = n * (x * pn - pm) / (x * x - 1.0)
        dx = pn / dp
        x = x - dx
        # residual target, or a Newton step below roundoff (high degrees)
        if np.all((np.abs(pn) < tol) | (np.abs(dx) <= 4 * np.finfo(float).eps)):
            break
    else:
        raise NumericalFailure(f"Newton iteration for Legendre roots of degree {n} did not converge")
    pn, pm = _legendre_pair(n, x)
    dp = n * (x * pn - pm) / (x * x - 1.0)
    return x, dp


# --------------------------------------------------------------------------
# Deterministic sets


def _check_positive(name, value):
    if int(value) != value or value < 1:
        raise InvalidParameter(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def _mirror_slab(pos_nodes, pos_weights):
    """Assemble a symmetric set from ascending positive nodes."""
    nodes = np.concatenate([-pos_nodes[::-1], pos_nodes])
    weights = np.concatenate([pos_weights[::-1], pos_weights])
    return nodes, weights


def uniform_slab(M):
    """Midpoint rule on ``2M`` equal cells of ``[-1, 1]``; weights ``1/(2M)``."""
    M = _check_positive("M", M)
    pos = (2 * np.arange(1, M + 1) - 1) / (2 * M)
    nodes, weights = _mirror_slab(pos, np.full(M, 1.0 / (2 * M)))
    return SlabQuadrature(nodes, weights, M, "uniform")


def gauss_slab(M):
    """Gauss-Legendre rule with ``2M`` nodes, weights halved to sum to one."""
    M = _check_positive("M", M)
    x, dp = legendre_roots(2 * M)
    w = 1.0 / ((1.0 - x * x) * dp * dp)
    # roots come out descending; keep positive half ascending, mirror exactly
    pos = x[:M][::-1]
    wpos = w[:M][::-1]
    wpos = wpos / (2.0 * wpos.sum())
    nodes, weights = _mirror_slab(pos, wpos)
    return SlabQuadrature(nodes, weights, M, "gauss")


def _quadrant_images(zeta, theta, weights):
    z = np.concatenate([zeta, zeta, zeta, zeta])
    t = np.concatenate([theta, np.pi - theta, np.pi + theta, 2 * np.pi - theta])
    w = np.concatenate([weights, weights, weights, weights])
    return z, t, w


def uniform_xy(N):
    """``N**2`` ordinates per quadrant, midpoints of a uniform ``(zeta, theta)`` grid."""
    N = _check_positive("N", N)
    i = np.repeat(np.arange(1, N + 1), N)
    j = np.tile(np.arange(1, N + 1), N)
    zeta = (2 * N - 2 * i + 1) / (2 * N)
    theta = (2 * j - 1) * np.pi / (4 * N)
    w = np.full(N * N, 1.0 / (4 * N * N))
    z, t, w = _quadrant_images(zeta, theta, w)
    return XYQuadrature(z, t, w, N * N, N, "uniform")


def gauss_xy(N):
    """Product-type Gaussian set: ``zeta`` at the positive roots of ``L_{2N}``,
    ``i`` equally spaced azimuths on the ``i``-th level."""
    N = _check_positive("N", N)
    x, dp = legendre_roots(2 * N)
    roots = x[:N]  # descending positive roots
    dps = dp[:N]
    zeta, theta, weights = [], [], []
    for i in range(1, N + 1):
        zi = roots[i - 1]
        wi = 1.0 / (2 * i * (1.0 - zi * zi) * dps[i - 1] ** 2)
        for j in range(1, i + 1):
            zeta.append(zi)
            theta.append((2 * j - 1) * np.pi / (4 * i))
            weights.append(wi)
    zeta, theta, weights = map(np.asarray, (zeta, theta, weights))
    weights = weights / (4.0 * weights.sum())
    z, t, w = _quadrant_images(zeta, theta, weights)
    return XYQuadrature(z, t, w, N * (N + 1) // 2, N, "gauss")


# --------------------------------------------------------------------------
# Partitions and random samples


def partition_velocity(geometry, level, delta=0.0):
    """Uniform partition of velocity space.

    Slab: ``level`` is the (even) number of cells ``n`` over
    ``[-1, -delta) U (delta, 1]``. X-Y: ``level`` is ``N`` and each quadrant
    holds ``N**2`` rectangles of the ``(zeta, theta)`` plane, ordered like
    :func:`uniform_xy`.
    """
    delta = float(delta)
    if not 0.0 <= delta < 1.0:
        raise InvalidParameter(f"truncation delta must lie in [0, 1), got {delta}")
    if geometry == "slab":
        n = _check_positive("n", level)
        if n % 2:
            raise InvalidParameter(f"slab partitions need an even number of cells, got n={n}")
        m = n // 2
        width = (1.0 - delta) / m
        neg_lo = -1.0 + width * np.arange(m)
        neg_hi = -1.0 + width * np.arange(1, m + 1)
        neg_hi[-1] = -delta
        lo = np.concatenate([neg_lo, -neg_hi[::-1]])
        hi = np.concatenate([neg_hi, -neg_lo[::-1]])
        meas = hi - lo
        return VelocityPartition("slab", n, delta, lo[:, None], hi[:, None], meas, meas.copy(), m)
    if geometry == "xy":
        N = _check_positive("N", level)
        if delta != 0.0:
            raise InvalidParameter("velocity truncation is only defined for slab partitions")
        i = np.repeat(np.arange(1, N + 1), N)
        j = np.tile(np.arange(1, N + 1), N)
        zlo, zhi = (N - i) / N, (N - i + 1) / N
        tlo, thi = (j - 1) * np.pi / (2 * N), j * np.pi / (2 * N)
        # the remaining quadrants are images; store the theta-ranges of each image
        lo = np.concatenate(
            [np.column_stack([zlo, t]) for t in (tlo, np.pi - thi, np.pi + tlo, 2 * np.pi - thi)]
        )
        hi = np.concatenate(
            [np.column_stack([zhi, t]) for t in (thi, np.pi - tlo, np.pi + thi, 2 * np.pi - tlo)]
        )
        # image cells have the same measure; tile it so the copies are bit-identical
        side = (hi - lo)[: N * N]
        meas = np.tile(np.prod(side, axis=1), 4)
        diam = np.tile(np.hypot(*side.T), 4)
        return VelocityPartition("xy", N, 0.0, lo, hi, meas, diam, N * N)
    raise InvalidParameter(f"unknown geometry {geometry!r}")


def sample_rom(partition, sample_seed, sample_index=0):
    """Draw one ordinate uniformly from each independent cell and fill the rest by symmetry."""
    m = partition.symmetric_half
    weights = partition.measures / partition.total_measure
    if partition.geometry == "slab":
        u = rng.uniforms(sample_seed, sample_index, partition.stream, m)
        lo = partition.lower[:m, 0]
        hi = partition.upper[:m, 0]
        neg = lo + u * (hi - lo)
        nodes = np.concatenate([neg, -neg[::-1]])
        quad = SlabQuadrature(nodes, weights, m, "rom-sample")
    else:
        u = rng.uniforms(sample_seed, sample_index, partition.stream, 2 * m).reshape(m, 2)
        lo = partition.lower[:m]
        hi = partition.upper[:m]
        pts = lo + u * (hi - lo)
        z, t, w = _quadrant_images(pts[:, 0], pts[:, 1], weights[:m])
        quad = XYQuadrature(z, t, w, m, partition.level, "rom-sample")
    return RomSample(quad, partition, int(sample_seed), int(sample_index))
