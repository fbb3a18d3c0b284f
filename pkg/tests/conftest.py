import math

import numpy as np
import pytest

from oestrip.contours import ProblemParams, build_gamma
from oestrip.oe_solver import march
from oestrip.ode1 import OECoefficient


@pytest.fixture(scope="session")
def params():
    return ProblemParams.from_k0a(8.0, 1 - 0.25j, math.pi / 6)


@pytest.fixture(scope="session")
def mesh(params):
    return build_gamma(params, N=200)


@pytest.fixture(scope="session")
def table_a(mesh):
    return march(mesh, "antisym", -1)


@pytest.fixture(scope="session")
def table_s(mesh):
    return march(mesh, "sym", 1)


@pytest.fixture(scope="session")
def coeff_a(table_a):
    return OECoefficient(table_a)


@pytest.fixture(scope="session")
def coeff_s(table_s):
    return OECoefficient(table_s)


def random_mat(rng, n=None, scale=1.0):
    shape = (2, 2) if n is None else (n, 2, 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def norm_inf(m):
    return float(np.max(np.abs(np.asarray(m)).sum(axis=-1)))
