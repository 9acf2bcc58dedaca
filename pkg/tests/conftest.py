import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240901))


def random_instance(rng, n=None, q=None, kernel=None):
    """A random dataset / targets / bandwidth triple for oracle comparisons."""
    import alcsmooth as a

    n = n or int(rng.integers(5, 200))
    q = q or int(rng.integers(1, 3))
    kernel = kernel or rng.choice(["uniform", "gaussian", "epanechnikov"])
    x = rng.uniform(-2.0, 2.0, size=(n, q))
    y = rng.normal(0.0, 3.0, size=n)
    m = int(rng.integers(1, 40))
    targets = rng.uniform(-2.2, 2.2, size=(m, q))
    h = rng.uniform(0.05, 1.5, size=q)
    return a.Dataset(x=x, y=y), targets, a.KernelFamily.from_name(str(kernel)), h
