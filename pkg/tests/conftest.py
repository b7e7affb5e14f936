import numpy as np
import pytest

from romsn.problem import benchmark_slab_case
from romsn.quadrature import uniform_slab
from romsn.slab import source_iteration_slab


@pytest.fixture(scope="session")
def case1():
    return benchmark_slab_case(1)


@pytest.fixture(scope="session")
def case1_reference(case1):
    """Case 1 scalar flux on 50 cells with 1280 uniform ordinates."""
    return source_iteration_slab(case1, uniform_slab(640), 50, tol=1e-12)[1]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
