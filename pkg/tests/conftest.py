import numpy as np
import pytest

from lips import all_curves, polynomial, reference, scan_grid, select_domain_D, sine, trace_Lambda0

# two cusps at p = 1, four flips
CUSP_FIXTURE = (0.1, 5.0)
# one cusp, a genuine crossing of L0 with the off-diagonal contour, two flips
CROSSING_FIXTURE = (0.0, 1.0, 0.2, 0.3, 0.0, -0.1)


@pytest.fixture(scope="session")
def ref():
    return reference()


@pytest.fixture(scope="session")
def ref_domain(ref):
    return select_domain_D(ref)


@pytest.fixture(scope="session")
def ref_curves(ref, ref_domain):
    return all_curves(ref, (ref_domain.p0, ref_domain.p1))


@pytest.fixture(scope="session")
def ref_grid(ref, ref_domain):
    return scan_grid(ref, ref_domain, 400, 400)


@pytest.fixture(scope="session")
def cusp_f():
    return sine(*CUSP_FIXTURE)


@pytest.fixture(scope="session")
def cusp_lambda0(cusp_f):
    return trace_Lambda0(cusp_f)


@pytest.fixture(scope="session")
def crossing_f():
    return polynomial(CROSSING_FIXTURE)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
