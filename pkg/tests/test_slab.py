import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from romsn.errors import ConvergenceError, InvalidParameter, InvalidProblem
from romsn.problem import (
    MaterialField,
    ScatteringKernel,
    SlabBoundary,
    SlabGrid,
    SlabProblem,
    benchmark_slab_case,
    constant,
    discrete_kernel,
)
from romsn.quadrature import gauss_slab, uniform_slab
from romsn.slab import (
    AngularFlux1D,
    SlabSetup,
    characteristic_coefficients,
    scalar_flux,
    source_iteration_slab,
    sweep_slab,
)

SCHEMES = ["characteristic", "diamond"]
one = constant(1.0)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_pure_absorber(scheme):
    grid = SlabGrid(0, 1, 200)
    psi = sweep_slab(1.0, np.zeros(201), one, grid, 1.0, scheme)
    assert abs(psi[-1] - np.exp(-1)) < 1e-4


@pytest.mark.parametrize("scheme", SCHEMES)
def test_uniform_emission(scheme):
    grid = SlabGrid(0, 1, 200)
    psi = sweep_slab(1.0, np.ones(201), one, grid, 0.0, scheme)
    assert np.max(np.abs(psi - (1 - np.exp(-grid.nodes)))) < 1e-5


@pytest.mark.parametrize("scheme", SCHEMES)
def test_mirror(scheme):
    grid = SlabGrid(0, 1, 64)
    sig = lambda x: 1 + 3 * np.asarray(x) ** 2
    e = np.sin(3 * grid.nodes) + 1.5
    fwd = sweep_slab(0.4, e, sig, grid, 0.7, scheme)
    # reflect the medium and the emission, sweep the other way
    sig_r = lambda x: sig(1 - np.asarray(x))
    bwd = sweep_slab(-0.4, e[::-1], sig_r, grid, 0.7, scheme)
    np.testing.assert_allclose(bwd[::-1], fwd, rtol=1e-13)


def test_zero_mu_rejected():
    with pytest.raises(InvalidParameter):
        sweep_slab(0.0, np.zeros(3), one, SlabGrid(0, 1, 2), 0.0)


def test_unknown_scheme():
    with pytest.raises(InvalidParameter):
        sweep_slab(0.5, np.zeros(3), one, SlabGrid(0, 1, 2), 0.0, "upwind")


def test_diamond_balance():
    """Re-substituting the sweep output into the diamond relation leaves only roundoff."""
    grid = SlabGrid(0, 1, 40)
    sig = lambda x: 10 * np.asarray(x) ** 2 + 1
    e = 1 + grid.nodes
    for mu in (0.03, 0.5, -0.2):
        psi = sweep_slab(mu, e, sig, grid, 2.0, "diamond")
        mid_e = 0.5 * (e[1:] + e[:-1])
        res = mu * np.diff(psi) / grid.dx + sig(grid.midpoints) * 0.5 * (psi[1:] + psi[:-1]) - mid_e
        assert np.max(np.abs(res)) < 1e-12 * np.max(np.abs(mu * psi / grid.dx))


def test_characteristic_relation():
    """Each cell transfer equals the exact solution for constant sigma and linear emission."""
    grid = SlabGrid(0, 1, 10)
    e = np.linspace(1, 3, 11)
    mu, sig = 0.3, 2.0
    psi = sweep_slab(mu, e, constant(sig), grid, 0.5)
    # closed form on one cell: psi' = (e(x) - sig psi)/mu with e linear
    h = grid.dx
    for i in range(10):
        a, b = e[i], (e[i + 1] - e[i]) / h
        k = sig / mu
        part = lambda s: a / sig + b * (s - 1 / k) / sig
        expect = part(h) + (psi[i] - part(0)) * np.exp(-k * h)
        assert psi[i + 1] == pytest.approx(expect, rel=1e-13)


def test_coefficient_series_branch():
    tau = np.array([1e-6, 1e-3 * 0.999, 1e-3 * 1.001, 0.5])
    E, c0, c1 = characteristic_coefficients(np.array([1.0]), tau, 1.0)
    a = tau
    from math import factorial

    # long Taylor series below 1e-2, where the closed form cancels
    series = sum((-1) ** (k + 1) * a**k / factorial(k + 1) for k in range(1, 25)) / a
    direct = (1 - (1 - np.exp(-a)) / a) / a
    exact_c1 = np.where(a < 1e-2, series, direct)
    np.testing.assert_allclose(c1[0], exact_c1, rtol=1e-9)
    np.testing.assert_allclose(c0[0], -np.expm1(-a) / a, rtol=1e-14)


def manufactured(sig_t, sig_s):
    """psi = exp(-x) (1 + mu)^2 with its matching angular source."""

    def q(x, mu):
        psi = np.exp(-x) * (1 + mu) ** 2
        return -mu * psi + sig_t * psi - sig_s * (4.0 / 3.0) * np.exp(-x)

    bc = SlabBoundary(lambda mu: (1 + mu) ** 2, lambda mu: np.exp(-1) * (1 + mu) ** 2)
    return SlabProblem(MaterialField(constant(sig_t), constant(sig_s)), q, bc, angular_source=True)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_manufactured_order(scheme):
    p = manufactured(2.0, 0.8)
    quad = gauss_slab(4)  # exact for the quadratic angular dependence
    errs, hs = [], []
    for I in (25, 50, 100, 200):
        psi, phi, _ = source_iteration_slab(p, quad, I, tol=1e-13, scheme=scheme)
        x = psi.grid.nodes
        exact = np.exp(-x)[None, :] * (1 + quad.nodes[:, None]) ** 2
        errs.append(np.sqrt(np.mean((psi.values - exact) ** 2)))
        hs.append(1 / I)
    order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert order == pytest.approx(2.0, abs=0.1)


def test_no_scattering_one_iteration():
    p = SlabProblem(MaterialField(one, constant(0.0)), one, SlabBoundary(one))
    _, _, rep = source_iteration_slab(p, uniform_slab(4), 20)
    assert rep.iterations == 1 and rep.converged


def center_analog():
    def q(x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= 0.4) & (x <= 0.6), 2.0, 0.0)

    return SlabProblem(MaterialField(one, constant(0.5)), q)


def test_residual_contraction():
    _, _, rep = source_iteration_slab(center_analog(), uniform_slab(16), 100, tol=1e-13)
    r = np.array(rep.residuals)
    ratios = r[3:11] / r[2:10]
    assert np.all(ratios <= 0.5 + 0.05)
    # non-increasing after the first sweep
    assert np.all(np.diff(r[1:]) <= 1e-15)


@pytest.mark.parametrize("case", [1, 2, 3])
def test_positivity(case):
    psi, phi, rep = source_iteration_slab(benchmark_slab_case(case), uniform_slab(20), 50)
    assert rep.negative_count == 0
    assert psi.values.min() >= -1e-12
    assert np.all(phi <= psi.values.max(axis=0) + 1e-14)


def test_convergence_error():
    with pytest.raises(ConvergenceError) as info:
        source_iteration_slab(benchmark_slab_case(1), uniform_slab(4), 20, max_iters=3)
    assert info.value.iterations == 3 and info.value.residual > 0


def test_bad_tolerance():
    with pytest.raises(InvalidParameter):
        source_iteration_slab(benchmark_slab_case(1), uniform_slab(4), 20, tol=0)


def test_ratio_check():
    p = SlabProblem(MaterialField(one, constant(1.0)), one)
    with pytest.raises(InvalidProblem):
        SlabSetup.build(p, 10)


def test_matrix_path_matches_isotropic():
    p = benchmark_slab_case(2)
    q = gauss_slab(6)
    _, a, _ = source_iteration_slab(p, q, 30)
    _, b, _ = source_iteration_slab(p, q, 30, kernel_matrix=discrete_kernel(q, ScatteringKernel(0)))
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)


def test_anisotropic_changes_solution():
    q = gauss_slab(6)
    _, iso, _ = source_iteration_slab(benchmark_slab_case(1), q, 30)
    _, ani, _ = source_iteration_slab(benchmark_slab_case(1, g=0.9), q, 30)
    assert np.max(np.abs(iso - ani)) > 1e-3


class TestScalarFlux:
    grid = SlabGrid(0, 1, 3)

    def test_constant(self):
        q = gauss_slab(3)
        psi = AngularFlux1D(np.full((6, 4), 2.5), self.grid, q)
        np.testing.assert_allclose(scalar_flux(psi), 2.5, atol=1e-15)

    def test_odd(self):
        q = uniform_slab(5)
        psi = AngularFlux1D(np.repeat(q.nodes[:, None], 4, axis=1), self.grid, q)
        np.testing.assert_allclose(scalar_flux(psi), 0.0, atol=1e-16)

    def test_pair(self):
        q = uniform_slab(1)
        psi = AngularFlux1D(np.array([[1.0] * 4, [3.0] * 4]), self.grid, q)
        np.testing.assert_array_equal(scalar_flux(psi), 2.0)


@given(st.floats(0.05, 1.0), st.floats(0.0, 5.0), st.floats(0.1, 5.0))
@settings(max_examples=40, deadline=None)
def test_sweep_positive(mu, inflow, emission):
    grid = SlabGrid(0, 1, 30)
    psi = sweep_slab(mu, np.full(31, emission), lambda x: 20 + 0 * np.asarray(x), grid, inflow)
    assert psi.min() >= 0
