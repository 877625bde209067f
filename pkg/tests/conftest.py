"""Common test fixtures for the cutpatch tests."""
import os
import sys

import numpy as np
import pytest

# Add the src directory to Python path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(project_root, "src"))

from cutpatch.assembly import Discretization, FormParams  # noqa: E402
from cutpatch.geometry import flat, flat2, sphere, torus  # noqa: E402
from cutpatch.harness.problems import get_problem  # noqa: E402


@pytest.fixture
def rng():
    """Seeded random generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def flat_surface():
    """Single flat patch placed without rotation."""
    return flat(angles=[0.0])


@pytest.fixture
def flat2_surface():
    """Two flat patches meeting at x = 1/2."""
    return flat2()


@pytest.fixture
def sphere_surface():
    return sphere()


@pytest.fixture
def torus_surface():
    return torus()


@pytest.fixture
def sphere_disc(sphere_surface):
    """Small p=1 discretization of the sphere."""
    return Discretization(sphere_surface, 4, 1, FormParams())


@pytest.fixture
def flat2_problem():
    return get_problem("flat2", 1)


@pytest.fixture
def out_dir(tmp_path):
    """Temporary directory for CSV and dump files."""
    path = tmp_path / "out"
    path.mkdir()
    return path
