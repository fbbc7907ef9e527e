import numpy as np
import pytest

from morphbox.data import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def toy_separated():
    """Two classes separated by a wide axis gap; one box each suffices."""
    rng = np.random.default_rng(5)
    a = rng.uniform(0.0, 1.0, size=(20, 2))
    b = rng.uniform(4.0, 5.0, size=(20, 2))
    X = np.vstack([a, b])
    y = np.array([1] * 20 + [2] * 20)
    return Dataset(X=X, y=y)
