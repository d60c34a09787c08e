import numpy as np
import pytest

from polareuler.grid import RadialGrid
from polareuler.field import PolarField
from polareuler.construction import BumpProfile


@pytest.fixture(scope="session")
def small_grid():
    return RadialGrid.log_uniform(1e-3, 8.0, 400)


@pytest.fixture(scope="session")
def fine_grid():
    return RadialGrid.log_uniform(1e-3, 8.0, 1500)


@pytest.fixture(scope="session")
def unit_bump():
    return BumpProfile(1.0, 2.0)


def seeded_field(grid, k_max, seed, symmetry_N=None):
    """Compactly supported random multi-mode field (smooth bump envelopes)."""
    rng = np.random.default_rng(seed)
    r = grid.nodes
    coeffs = np.zeros((k_max + 1, grid.n), dtype=complex)
    ks = range(0, k_max + 1, symmetry_N) if symmetry_N else range(k_max + 1)
    for k in ks:
        a, width = rng.uniform(0.3, 2.0), rng.uniform(0.5, 2.0)
        env = BumpProfile(a, a + width)(r)
        amp = rng.normal() + (1j * rng.normal() if k > 0 else 0.0)
        coeffs[k] = amp * env
    return PolarField(grid, coeffs, symmetry_N=symmetry_N)
