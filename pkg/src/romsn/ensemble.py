"""Random ordinate ensembles: independent samples, streaming moments, error and bias.

Every sample is a pure function of ``(problem, partition, global_seed,
sample_index)``. Samples may run on any number of worker threads; results are
folded into the running moments strictly in sample order, so the outcome is
bitwise independent of the worker count.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, InvalidParameter, NumericalFailure
from .quadrature import partition_velocity, sample_rom
from .slab import DEFAULT_MAX_ITERS, DEFAULT_TOL, SlabSetup, source_iteration_slab
from .xy import XYSetup, source_iteration_xy

log = logging.getLogger(__name__)

JOBS_ENV = "ROMSN_JOBS"


def default_jobs():
    """Worker count from ``ROMSN_JOBS`` (default 1)."""
    raw = os.environ.get(JOBS_ENV, "").strip()
    if not raw:
        return 1
    try:
        jobs = int(raw)
    except ValueError:
        raise InvalidParameter(f"{JOBS_ENV} must be a positive integer, got {raw!r}") from None
    if jobs < 1:
        raise InvalidParameter(f"{JOBS_ENV} must be a positive integer, got {raw!r}")
    return jobs


def l2_error(phi, phi_ref):
    """Root-mean-square difference over all grid points (nodes in 1-D, cells in 2-D)."""
    phi = np.asarray(phi, dtype=float)
    phi_ref = np.asarray(phi_ref, dtype=float)
    if phi.shape != phi_ref.shape:
        raise InvalidParameter(f"grid mismatch: {phi.shape} vs reference {phi_ref.shape}")
    return float(np.sqrt(np.mean((phi - phi_ref) ** 2)))


def resolution(geometry, level):
    """Angular cell size used on the abscissa of order plots.

    Slab: ``2 / n``. X-Y: ``pi / (4 N**2)``.
    """
    if geometry == "slab":
        return 2.0 / level
    return np.pi / (4.0 * level * level)


@dataclass(frozen=True)
class EnsembleConfig:
    """``level`` is the cell count ``n`` (slab) or ``N`` (X-Y, ``4 N**2`` cells)."""

    level: int
    samples: int
    seed: int = 0
    jobs: int = 1
    delta: float = 0.0
    cells: int = 50
    ny: int | None = None
    tol: float = DEFAULT_TOL
    max_iters: int = DEFAULT_MAX_ITERS
    keep_samples: bool = False

    def __post_init__(self):
        if self.samples < 1:
            raise InvalidParameter("an ensemble needs at least one sample")
        if self.jobs < 1:
            raise InvalidParameter("jobs must be >= 1")
        if self.seed < 0:
            raise InvalidParameter("seed must be nonnegative")


@dataclass
class EnsembleResult:
    mean: np.ndarray
    m2: np.ndarray
    errors: np.ndarray
    count: int
    samples: list | None = None
    iterations: list = field(default_factory=list)

    @property
    def variance(self):
        """Unbiased per-point sample variance (zeros for a single sample)."""
        if self.count < 2:
            return np.zeros_like(self.m2)
        return self.m2 / (self.count - 1)


@dataclass(frozen=True)
class MetricReport:
    error: float
    bias: float
    mean_variance: float
    samples: int
    level: int


def _solve(problem, quadrature, setup, config):
    if problem.geometry == "slab":
        return source_iteration_slab(
            problem, quadrature, tol=config.tol, max_iters=config.max_iters, setup=setup
        )
    return source_iteration_xy(
        problem, quadrature, tol=config.tol, max_iters=config.max_iters, setup=setup
    )


def _setup(problem, config):
    if problem.geometry == "slab":
        return SlabSetup.build(problem, config.cells)
    return XYSetup.build(problem, config.cells, config.ny)


def run_sample(problem, partition, sample_index, global_seed, config=None, setup=None):
    """Draw one random ordinate set and solve with it; returns ``(phi, report)``."""
    if config is None:
        config = EnsembleConfig(partition.level, 1, global_seed)
    if setup is None:
        setup = _setup(problem, config)
    sample = sample_rom(partition, global_seed, sample_index)
    try:
        _, phi, report = _solve(problem, sample.quadrature, setup, config)
    except ConvergenceError as exc:
        exc.sample_index = sample_index
        raise ConvergenceError(
            f"sample {sample_index}: {exc}", exc.residual, exc.iterations, sample_index
        ) from exc
    return phi, report


def _batches(total, size):
    for start in range(0, total, size):
        yield range(start, min(start + size, total))


def run_ensemble(problem, config, phi_ref=None):
    """Run samples ``0 .. t-1`` and reduce them in index order.

    Returns ``(EnsembleResult, MetricReport)``; the report is ``None`` when no
    reference is given. Any failed sample aborts the run.
    """
    partition = partition_velocity(problem.geometry, config.level, config.delta)
    setup = _setup(problem, config)
    if phi_ref is not None:
        phi_ref = np.asarray(phi_ref, dtype=float)

    def job(k):
        return run_sample(problem, partition, k, config.seed, config, setup)

    mean = m2 = None
    errors = []
    kept = [] if config.keep_samples else None
    iterations = []
    count = 0

    def fold(phi, report):
        nonlocal mean, m2, count
        count += 1
        if mean is None:
            mean = phi.astype(float, copy=True)
            m2 = np.zeros_like(mean)
        else:
            delta = phi - mean
            mean += delta / count
            m2 += delta * (phi - mean)
        if phi_ref is not None:
            errors.append(l2_error(phi, phi_ref))
        if kept is not None:
            kept.append(phi)
        iterations.append(report.iterations)

    if config.jobs == 1:
        for k in range(config.samples):
            fold(*job(k))
    else:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            # bounded batches keep at most a few fields per worker in memory
            for batch in _batches(config.samples, 4 * config.jobs):
                for phi, report in pool.map(job, batch):
                    fold(phi, report)

    result = EnsembleResult(mean, m2, np.array(errors), count, kept, iterations)
    if phi_ref is None:
        return result, None
    metrics = ensemble_metrics(result, phi_ref, config.level)
    return result, metrics


def ensemble_metrics(result, phi_ref, level=0):
    """Error (mean single-run distance) and bias (distance of the mean) to ``phi_ref``."""
    if result.errors.size != result.count:
        raise InvalidParameter("per-sample errors were not recorded for this ensemble")
    error = float(np.sum(result.errors) / result.count)
    bias = l2_error(result.mean, phi_ref)
    if bias > error + 1e-12:
        raise NumericalFailure(f"bias {bias!r} exceeds mean error {error!r}; moments are corrupt")
    return MetricReport(error, bias, float(np.mean(result.variance)), result.count, level)
