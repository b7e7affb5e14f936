import numpy as np
import pytest

from romsn.errors import InvalidParameter, InvalidProblem
from romsn.problem import (
    MaterialField,
    ScatteringKernel,
    SlabGrid,
    XYGrid,
    benchmark_center_source,
    benchmark_lattice,
    benchmark_slab_case,
    constant,
    default_lattice_mask,
    discrete_kernel,
    read_mask,
    write_mask,
)
from romsn.quadrature import gauss_slab, gauss_xy, sample_rom, partition_velocity, uniform_slab, uniform_xy


@pytest.mark.parametrize(
    "quad", [uniform_slab(4), gauss_slab(3), uniform_xy(3), gauss_xy(4)], ids=["us", "gs", "ux", "gx"]
)
def test_isotropic_kernel_is_ones(quad):
    P = discrete_kernel(quad, ScatteringKernel(0.0))
    assert np.all(P == 1.0)
    np.testing.assert_allclose(P @ quad.weights, 1.0, atol=1e-15)


def test_kernel_diagonal_full_cosine():
    q = uniform_xy(2)
    P = discrete_kernel(q, ScatteringKernel(0.9), xy_cosine="sphere")
    np.testing.assert_allclose(np.diag(P), 1.9, atol=1e-15)
    assert ScatteringKernel(0.9)(1.0) == pytest.approx(1.9)


def test_kernel_diagonal_slab():
    q = gauss_slab(2)
    P = discrete_kernel(q, ScatteringKernel(0.9))
    np.testing.assert_allclose(np.diag(P), 1 + 0.9 * q.nodes**2)


@pytest.mark.parametrize("mode", ["plane", "sphere"])
def test_kernel_symmetric_and_bounded(mode):
    q = sample_rom(partition_velocity("xy", 3), 4).quadrature
    P = discrete_kernel(q, ScatteringKernel(-0.7), xy_cosine=mode)
    np.testing.assert_array_equal(P, P.T)
    assert P.min() >= 1 - 0.7 - 1e-15 and P.max() <= 1 + 0.7 + 1e-15


def test_row_sums_plane():
    devs = []
    for N in (2, 4, 8):
        q = uniform_xy(N)
        P = discrete_kernel(q, ScatteringKernel(0.9))
        devs.append(np.max(np.abs(P @ q.weights - 1)))
    assert max(devs) < 1e-14
    # non-increasing up to roundoff
    assert devs[2] <= devs[0] + 1e-15


def test_row_sums_sphere_do_not_vanish():
    # with (c, s, zeta) the zeta zeta' term survives the average over the upper hemisphere
    devs = []
    for N in (2, 4, 8):
        q = uniform_xy(N)
        P = discrete_kernel(q, ScatteringKernel(0.9), xy_cosine="sphere")
        devs.append(np.max(np.abs(P @ q.weights - 1)))
    assert min(devs) > 0.3


def test_unknown_cosine_mode():
    with pytest.raises(InvalidParameter):
        discrete_kernel(uniform_xy(1), ScatteringKernel(0.5), xy_cosine="disk")


def test_kernel_range():
    with pytest.raises(InvalidParameter):
        ScatteringKernel(1.5)


def test_material_constraint():
    m = MaterialField(constant(1.0), constant(1.0))
    with pytest.raises(InvalidProblem):
        m.evaluate(np.linspace(0, 1, 3))
    with pytest.raises(InvalidProblem):
        MaterialField(constant(1.0), constant(-0.1)).evaluate(np.zeros(2))


class TestBenchmarks:
    def test_center_source(self):
        p = benchmark_center_source()
        assert p.source(0.5, 0.5) == 2.0
        assert p.source(0.1, 0.1) == 0.0
        X, Y = p.grid(20).centers()
        assert p.material.scattering_ratio(X, Y) == 0.5

    def test_slab_case_boundaries(self):
        b1 = benchmark_slab_case(1).boundary
        assert b1.left(0.5) == pytest.approx(1.5)
        b2 = benchmark_slab_case(2).boundary
        assert b2.left(1 / 3) == pytest.approx(1.0)
        b3 = benchmark_slab_case(3).boundary
        just_above = np.nextafter(1 / 3, 1)
        assert b3.left(just_above) == pytest.approx(8 / 3)
        assert b3.left(just_above) - b3.left(1 / 3) == pytest.approx(5 / 3)

    def test_slab_case_ratio(self):
        x = np.linspace(0, 1, 1001)
        assert benchmark_slab_case(1).material.scattering_ratio(x) == pytest.approx(0.5, abs=1e-15)

    def test_bad_case(self):
        with pytest.raises(InvalidParameter):
            benchmark_slab_case(4)

    def test_lattice_default(self):
        p = benchmark_lattice()
        X, Y = p.grid(10).centers()
        st, ss = p.material.evaluate(X, Y)
        assert np.all(st == 1.0) and np.all(ss == 0.5)
        assert p.source(0.5, 0.5) == 1.0 and p.source(0.1, 0.1) == 0.0

    def test_lattice_zero_mask(self):
        p = benchmark_lattice(np.zeros((5, 5), dtype=int))
        X, Y = p.grid(10).centers()
        assert np.all(p.source(X, Y) == 0)

    def test_lattice_single_cell(self):
        mask = np.zeros((2, 2), dtype=int)
        mask[1, 0] = 1  # top-left block: y in [0.5, 1], x in [0, 0.5]
        p = benchmark_lattice(mask)
        assert p.source(0.25, 0.75) == 1.0 and p.source(0.75, 0.25) == 0.0

    def test_lattice_grid_mismatch(self):
        with pytest.raises(InvalidParameter):
            benchmark_lattice().grid(12)


def test_mask_roundtrip(tmp_path, rng):
    mask = rng.integers(0, 2, size=(3, 4))
    path = tmp_path / "m.txt"
    write_mask(path, mask)
    np.testing.assert_array_equal(read_mask(path), mask)


def test_mask_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 2\n0 1\n")
    with pytest.raises(InvalidParameter):
        read_mask(bad)
    bad.write_text("1 2\n0 2\n")
    with pytest.raises(InvalidParameter):
        read_mask(bad)


def test_default_mask_shape():
    m = default_lattice_mask()
    assert m.shape == (5, 5) and m.sum() == 5


def test_grids():
    g = SlabGrid(0.0, 2.0, 4)
    np.testing.assert_allclose(g.nodes, [0, 0.5, 1, 1.5, 2])
    np.testing.assert_allclose(g.midpoints, [0.25, 0.75, 1.25, 1.75])
    xy = XYGrid(4, 2)
    assert xy.dx == 0.25 and xy.dy == 0.5
    X, Y = xy.centers()
    assert X.shape == (2, 4) and Y[1, 0] == 0.75
    with pytest.raises(InvalidParameter):
        SlabGrid(0, 1, 0)
