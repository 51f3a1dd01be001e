"""Shared helpers: random networks and architectures for property tests."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from reluapprox.network import Layer, StructuredNetwork

# Wall-clock deadlines are unreliable on a single shared core.
settings.register_profile("default", deadline=None)
settings.load_profile("default")


def random_network(rng: np.random.Generator, dims, scale: float = 2.0) -> StructuredNetwork:
    """Network with the given layer sizes and entries uniform on ``[-scale, scale]``."""
    return StructuredNetwork(
        tuple(
            Layer(
                rng.uniform(-scale, scale, size=(dims[i], dims[i - 1])),
                rng.uniform(-scale, scale, size=dims[i]),
            )
            for i in range(1, len(dims))
        )
    )


def random_dims(rng: np.random.Generator, max_width: int = 8, max_depth: int = 4, first=None, last=None):
    depth = int(rng.integers(1, max_depth + 1))
    dims = list(rng.integers(1, max_width + 1, size=depth + 1))
    if first is not None:
        dims[0] = first
    if last is not None:
        dims[-1] = last
    return tuple(int(v) for v in dims)


architectures = st.lists(st.integers(1, 6), min_size=2, max_size=5).map(tuple)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)
