import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def rel_close(a, b, tol):
    """Relative closeness with an absolute floor for near-zero pairs."""
    return abs(a - b) <= tol * max(abs(a), abs(b), 1e-300) or abs(a - b) <= 1e-12
