import numpy as np
import pytest

from weakpointer.algebra import Observable, SelectionPair
from weakpointer.pointer import PointerSpec


def unit(v):
    v = np.asarray(v, dtype=complex)
    return v / np.linalg.norm(v)


@pytest.fixture
def qutrit():
    """Non-degenerate commuting qutrit pair with a generic complex selection."""
    a = Observable(np.diag([0.0, 1.0, 2.0]))
    b = Observable(np.diag([0.0, 2.0, 1.0]))
    sel = SelectionPair(unit([1, 1j, 1 + 0.5j]), unit([1, np.exp(1j * np.pi / 4), 0.3 - 1j]))
    return a, b, sel


@pytest.fixture
def spec2d():
    return PointerSpec(l=0, sigma=1.0, grid_points=128, grid_extent=12.0, dims=2)


@pytest.fixture
def spec1d():
    return PointerSpec(l=0, sigma=1.0, grid_points=128, grid_extent=12.0, dims=1)


@pytest.fixture
def small1d():
    return PointerSpec(l=0, sigma=1.0, grid_points=64, grid_extent=13.0, dims=1)
