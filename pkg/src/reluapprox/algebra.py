"""Operations that build new networks out of existing ones.

``compose(f, g)`` computes ``f`` after ``g``.  When both sides have more
than one layer, the output map of ``g`` and the input map of ``f`` are merged
into one affine layer, so the result has ``depth(f) + depth(g) - 1`` layers.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.linalg import block_diag

from .errors import DimensionMismatch, InvalidParameter
from .network import Layer, StructuredNetwork

__all__ = [
    "compose",
    "parallelize",
    "affine_net",
    "sum_net",
    "concat_net",
    "identity_net",
]


def compose(f: StructuredNetwork, g: StructuredNetwork) -> StructuredNetwork:
    """Return the network computing ``f`` after ``g``.

    Raises
    ------
    DimensionMismatch
        If the input size of ``f`` differs from the output size of ``g``.
    """
    if f.input_dim != g.output_dim:
        raise DimensionMismatch(
            f"cannot compose: outer net takes {f.input_dim} inputs, inner net gives "
            f"{g.output_dim} outputs"
        )
    first_f, last_g = f.layers[0], g.layers[-1]
    merged = Layer(
        first_f.weights @ last_g.weights,
        first_f.weights @ last_g.bias + first_f.bias,
    )
    return StructuredNetwork(g.layers[:-1] + (merged,) + f.layers[1:])


def parallelize(nets: Sequence[StructuredNetwork]) -> StructuredNetwork:
    """Stack equally deep networks side by side.

    The result maps the concatenated inputs to the concatenated outputs, using
    block-diagonal weights and stacked biases in every layer.
    """
    nets = list(nets)
    if not nets:
        raise DimensionMismatch("parallelize needs at least one network")
    depth = nets[0].depth
    if any(net.depth != depth for net in nets):
        raise DimensionMismatch(
            f"parallelize needs equal depths, got {[net.depth for net in nets]}"
        )
    layers = []
    for k in range(depth):
        layers.append(
            Layer(
                block_diag(*(net.layers[k].weights for net in nets)),
                np.concatenate([net.layers[k].bias for net in nets]),
            )
        )
    return StructuredNetwork(tuple(layers))


def affine_net(weights, bias) -> StructuredNetwork:
    """Single-layer network computing ``x -> weights @ x + bias``."""
    return StructuredNetwork((Layer(np.atleast_2d(weights), np.atleast_1d(bias)),))


def sum_net(m: int, n: int) -> StructuredNetwork:
    """Single layer adding ``n`` blocks of size ``m``: ``(y_1, ..., y_n) -> y_1 + ... + y_n``."""
    _check_positive(m=m, n=n)
    return affine_net(np.tile(np.eye(m), (1, n)), np.zeros(m))


def concat_net(m: int, n: int) -> StructuredNetwork:
    """Single layer copying an ``n``-vector ``m`` times: ``x -> (x, ..., x)``."""
    _check_positive(m=m, n=n)
    return affine_net(np.tile(np.eye(n), (m, 1)), np.zeros(m * n))


def identity_net() -> StructuredNetwork:
    """Two-layer rectifier network for the real identity, ``x = relu(x) - relu(-x)``."""
    return StructuredNetwork(
        (
            Layer(np.array([[1.0], [-1.0]]), np.zeros(2)),
            Layer(np.array([[1.0, -1.0]]), np.zeros(1)),
        )
    )


def _check_positive(**values: int) -> None:
    for name, value in values.items():
        if int(value) != value or value < 1:
            raise InvalidParameter(f"{name} must be a positive integer, got {value}")
