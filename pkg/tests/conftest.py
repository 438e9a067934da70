import numpy as np
import pytest

from dicke_battery.oracle import random_density_matrix
from dicke_battery.steady import FullState


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def trace_distance(a, b) -> float:
    a = a.matrix if hasattr(a, "matrix") else a
    b = b.matrix if hasattr(b, "matrix") else b
    return 0.5 * float(np.abs(np.linalg.eigvalsh(a - b)).sum())


def random_state(n, rng, rank=None) -> FullState:
    return FullState(random_density_matrix(1 << n, rng, rank))
