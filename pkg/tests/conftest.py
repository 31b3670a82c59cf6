import numpy as np
import pytest

from gfconv import Field


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def zero_ring(arr: np.ndarray) -> np.ndarray:
    """Zero the outer one-cell ring of every spatial axis (in place copy)."""
    arr = arr.copy()
    for axis in range(2, arr.ndim):
        lo = [slice(None)] * arr.ndim
        hi = [slice(None)] * arr.ndim
        lo[axis] = 0
        hi[axis] = -1
        arr[tuple(lo)] = 0.0
        arr[tuple(hi)] = 0.0
    return arr


def random_field(rng, spatial, batch=1, channels=1, ring_zero=False) -> Field:
    arr = rng.standard_normal((batch, channels) + tuple(spatial))
    if ring_zero:
        arr = zero_ring(arr)
    return Field(arr)


def rel_close(a: float, b: float, tol: float) -> bool:
    denom = max(abs(a), abs(b), 1e-300)
    return abs(a - b) <= tol * denom
