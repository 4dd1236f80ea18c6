import math

import numpy as np
import pytest

from heatctl.domain import (
    SubdomainWindow,
    build_circle_domain,
    build_interval_domain,
    build_sturm_liouville_domain,
)


@pytest.fixture(scope="session")
def interval():
    """(0, pi), N=64, M=512."""
    return build_interval_domain(math.pi, 64, 512)


@pytest.fixture(scope="session")
def interval32():
    return build_interval_domain(math.pi, 32, 512)


@pytest.fixture(scope="session")
def small_interval():
    return build_interval_domain(math.pi, 16, 64)


@pytest.fixture(scope="session")
def circle():
    return build_circle_domain(2 * math.pi, 33, 256)


@pytest.fixture(scope="session")
def sturm():
    return build_sturm_liouville_domain(lambda x: 1.0 + x / math.pi, math.pi, 256, 32)


@pytest.fixture(scope="session")
def omega():
    return SubdomainWindow(0.5, 1.5)


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))
