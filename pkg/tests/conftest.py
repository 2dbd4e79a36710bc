"""Shared fixtures and small-instance helpers."""

import numpy as np
import pytest

from obstacle_mg.fem import assemble_operator
from obstacle_mg.grid import build_hierarchy


@pytest.fixture(scope="session")
def hierarchy3():
    return build_hierarchy(3)


@pytest.fixture(scope="session")
def hierarchy2():
    return build_hierarchy(2)


@pytest.fixture(scope="session")
def level1(hierarchy3):
    return hierarchy3[0]


@pytest.fixture(scope="session")
def level2(hierarchy3):
    return hierarchy3[1]


def unit_operator(level):
    """Constant-coefficient operator on the given level."""
    return assemble_operator(np.ones(level.node_count), level)


def random_instance(level, rng, f_scale=5.0, phi_loc=-0.02, phi_scale=0.05):
    """Random (A, f, phi) with kappa == 1 and obstacle likely to bite."""
    a = unit_operator(level)
    f = rng.normal(0.0, f_scale, a.dimension)
    phi = rng.normal(phi_loc, phi_scale, a.dimension)
    return a, f, phi
