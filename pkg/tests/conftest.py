from __future__ import annotations

import functools

import pytest

from fracslp.fivp import Mesh
from fracslp.potentials import Potential
from fracslp.spectrum import enumerate_spectrum

FORWARD = Mesh(1000)


@functools.lru_cache(maxsize=None)
def free_spectrum(alpha: float, N: int, K: int = 1000):
    """q = 0 spectrum, shared across test modules."""
    return enumerate_spectrum(Potential.zero(), alpha, N, Mesh(K))


@pytest.fixture
def forward_mesh():
    return FORWARD
