import hypothesis
import numpy as np
import pytest
from hypothesis import strategies as st

from hopf_sr import geometry

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []

fibration_index = st.integers(min_value=1, max_value=4)
seeds = st.integers(min_value=0, max_value=2**32 - 1)
charges = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def basis(n, k, scale=1.0):
    e = np.zeros(n + 1, complex)
    e[k] = scale
    return e


def random_frame(seed, n):
    """Sphere point and two random horizontal vectors (not unit) at it."""
    r = np.random.default_rng(seed)
    z = geometry.random_sphere(r, n)
    base = geometry.SpherePoint(z)
    X = geometry.HorizontalVector(base, geometry.random_horizontal(r, base.z, unit=False))
    Y = geometry.HorizontalVector(base, geometry.random_horizontal(r, base.z, unit=False))
    return base, X, Y, r
