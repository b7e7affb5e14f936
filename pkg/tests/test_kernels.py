"""Compiled and numpy kernels agree, and sweeps respect upwind causality."""

import numpy as np
import pytest

from romsn import _fallback, kernels

try:
    from romsn import _sweeps
except ImportError:  # extension not built
    _sweeps = None

needs_ext = pytest.mark.skipif(_sweeps is None, reason="compiled extension not built")


def slab_inputs(rng, L=7, I=13):
    mu = rng.uniform(0.05, 1, L) * rng.choice([-1, 1], L)
    return dict(
        mu=mu,
        emission=rng.uniform(0, 2, (L, I + 1)),
        inflow=rng.uniform(0, 1, L),
        sigma=rng.uniform(0.5, 4, I),
        L=L,
        I=I,
    )


@needs_ext
def test_slab_dd_equivalence(rng):
    d = slab_inputs(rng)
    em = np.ascontiguousarray(d["emission"][:, :-1])
    out = []
    for mod in (_sweeps, _fallback):
        psi = np.empty((d["L"], d["I"] + 1))
        mod.slab_sweep_dd(d["mu"], em, d["sigma"], 0.1, d["inflow"], psi)
        out.append(psi)
    np.testing.assert_allclose(out[0], out[1], rtol=1e-14)


@needs_ext
def test_slab_lc_equivalence(rng):
    from romsn.slab import characteristic_coefficients

    d = slab_inputs(rng)
    coef = characteristic_coefficients(d["mu"], d["sigma"] * 0.1, 0.1)
    out = []
    for mod in (_sweeps, _fallback):
        psi = np.empty((d["L"], d["I"] + 1))
        mod.slab_sweep_lc(d["mu"], d["emission"], *coef, d["inflow"], psi)
        out.append(psi)
    np.testing.assert_allclose(out[0], out[1], rtol=1e-14)


@needs_ext
@pytest.mark.parametrize("broadcast", [False, True])
def test_dd_sweep_equivalence(rng, broadcast):
    L, ny, nx = 12, 9, 11
    c = rng.uniform(0.1, 1, L) * np.tile([1, -1, -1, 1], 3)
    s = rng.uniform(0.1, 1, L) * np.tile([1, 1, -1, -1], 3)
    w = rng.uniform(0, 1, L)
    if broadcast:
        em = np.broadcast_to(rng.uniform(0, 1, (ny, nx)), (L, ny, nx))
    else:
        em = rng.uniform(0, 1, (L, ny, nx))
    sigma = rng.uniform(0.5, 2, (ny, nx))
    inx, iny = rng.uniform(0, 1, (L, ny)), rng.uniform(0, 1, (L, nx))
    res = []
    for mod in (_sweeps, _fallback):
        psi = np.empty((L, ny, nx))
        phi = np.zeros((ny, nx))
        mod.dd_sweep(c, s, w, em, sigma, 0.1, 0.2, inx, iny, psi, phi, True)
        res.append((psi, phi))
    np.testing.assert_allclose(res[0][0], res[1][0], rtol=1e-13)
    np.testing.assert_allclose(res[0][1], res[1][1], rtol=1e-13)


@needs_ext
def test_linear_recurrence_equivalence(rng):
    decay = rng.uniform(0, 1, (5, 40))
    forcing = rng.uniform(0, 1, (5, 40))
    outs = []
    for mod in (_sweeps, _fallback):
        out = np.zeros((5, 41))
        out[:, 0] = 0.3
        mod.linear_recurrence(decay, forcing, out)
        outs.append(out)
    np.testing.assert_array_equal(outs[0], outs[1])


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")
    if _sweeps is not None:
        assert kernels.BACKEND == "cython"


def test_pure_python_env(monkeypatch):
    import importlib

    monkeypatch.setenv("ROMSN_PURE_PYTHON", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python" and mod.dd_sweep is _fallback.dd_sweep
    finally:
        monkeypatch.delenv("ROMSN_PURE_PYTHON")
        importlib.reload(kernels)


@pytest.mark.parametrize("nx,ny", [(1, 1), (5, 3), (3, 7), (6, 6)])
def test_wavefront_order_is_topological(nx, ny):
    """Every cell comes after both of its upwind neighbours and exactly once."""
    visited = {}
    for step, (j, i) in enumerate(_fallback.sweep_fronts(nx, ny)):
        for jj, ii in zip(j, i):
            assert (jj, ii) not in visited
            visited[jj, ii] = step
    assert len(visited) == nx * ny
    for (j, i), step in visited.items():
        if i > 0:
            assert visited[j, i - 1] < step
        if j > 0:
            assert visited[j - 1, i] < step


def test_cells_wait_for_inflow():
    """A single nonzero inflow value only influences cells downstream of it."""
    ny, nx = 6, 6
    for c, s in ((0.5, 0.5), (-0.5, 0.5), (-0.5, -0.5), (0.5, -0.5)):
        inx = np.zeros((1, ny))
        inx[0, 2] = 1.0
        psi = np.empty((1, ny, nx))
        phi = np.zeros((ny, nx))
        kernels.dd_sweep(
            np.array([c]), np.array([s]), np.ones(1), np.zeros((1, ny, nx)), np.ones((ny, nx)),
            0.1, 0.1, inx, np.zeros((1, nx)), psi, phi, True,
        )
        touched = np.argwhere(psi[0] != 0)
        rows = touched[:, 0]
        assert np.all(rows >= 2) if s > 0 else np.all(rows <= 2)
