import logging
import warnings

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hybrid_attitude.control import ControllerSpec, PlantParams
from hybrid_attitude.errfun import DeltaBoundaryWarning, ShapeParams
from hybrid_attitude.trajectory import DesiredTrajectory, reference_command

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

logging.getLogger("hybrid_attitude").setLevel(logging.ERROR)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
vec3 = arrays(np.float64, 3, elements=finite)
quat = arrays(np.float64, 4, elements=st.floats(-1, 1)).filter(lambda q: np.linalg.norm(q) > 0.1)
times = st.floats(0, 30, allow_nan=False)


def quat_to_rotation(q):
    w, x, y, z = q / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


rotations = quat.map(quat_to_rotation)


def reference_shape(**changes):
    kw = dict(k1=10.0, k2=11.0, alpha=1.9, beta=0.8, delta=1.0, b1=[1.0, 0, 0], b2=[0, 1.0, 0])
    kw.update(changes)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeltaBoundaryWarning)
        return ShapeParams(**kw)


@pytest.fixture
def shape():
    return reference_shape()


@pytest.fixture
def plant():
    return PlantParams(np.diag([3.0, 2.0, 1.0]))


@pytest.fixture
def traj(shape):
    return DesiredTrajectory(reference_command(), shape.b1, shape.b2)


def make_spec(kind="smooth", shape=None, k_Omega=4.42, k_I=0.5, c=0.04):
    return ControllerSpec(kind, shape or reference_shape(), k_Omega, k_I, c)


# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
