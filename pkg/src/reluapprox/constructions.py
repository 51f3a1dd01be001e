"""Explicit rectifier networks with known shapes and weights.

* :func:`l1_norm_net` computes ``||x||_1`` with one hidden layer.
* :func:`max_net` computes ``max(x_1, ..., x_d)`` by a pairwise tournament of
  depth ``ceil(log2 d)``.
* :func:`max_convolution_net` computes ``max_k (y_k - L ||x - x_k||_1)``.
* :func:`interp1d_net` computes the piecewise-linear interpolant of values
  on a uniform grid of an interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .algebra import affine_net, compose, concat_net, identity_net, parallelize, sum_net
from .errors import DimensionMismatch, InvalidParameter
from .network import Layer, StructuredNetwork

__all__ = [
    "MaxConvSpec",
    "Interp1dSpec",
    "l1_norm_net",
    "max_net",
    "max_convolution_net",
    "max_convolution",
    "interp1d_net",
]


@dataclass(frozen=True, eq=False)
class MaxConvSpec:
    """Inputs of the maximum convolution ``F(x) = max_k (values[k] - lipschitz * ||x - centers[k]||_1)``.

    Attributes
    ----------
    lipschitz : float
        Nonnegative slope ``L``.
    centers : ndarray of shape (K, d)
        Anchor points, ``K >= 2``.
    values : ndarray of shape (K,)
        Values attached to the anchors.
    """

    lipschitz: float
    centers: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        centers = np.array(self.centers, dtype=np.float64)
        if centers.ndim == 1:
            centers = centers[:, None]
        values = np.array(self.values, dtype=np.float64).ravel()
        if centers.ndim != 2:
            raise DimensionMismatch("centers must form a (K, d) array")
        if centers.shape[0] < 2:
            raise InvalidParameter("the maximum convolution needs at least two centers")
        if values.shape[0] != centers.shape[0]:
            raise DimensionMismatch(
                f"{centers.shape[0]} centers but {values.shape[0]} values"
            )
        lipschitz = float(self.lipschitz)
        if not lipschitz >= 0.0:
            raise InvalidParameter("the Lipschitz slope must be nonnegative")
        centers.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lipschitz", lipschitz)

    @property
    def n_centers(self) -> int:
        return int(self.centers.shape[0])

    @property
    def dim(self) -> int:
        return int(self.centers.shape[1])

    def weight_bound(self) -> float:
        """Upper bound on the largest absolute parameter of the built network."""
        return max(
            1.0,
            self.lipschitz,
            float(np.abs(self.centers).max()),
            2.0 * float(np.abs(self.values).max()),
        )


@dataclass(frozen=True, eq=False)
class Interp1dSpec:
    """Node values ``f_0, ..., f_K`` on the uniform grid ``r_k = a + k (b - a) / K``.

    ``K`` is ``ceil(resolution)``.  Build it from a function with
    :meth:`from_function`.
    """

    a: float
    b: float
    resolution: float
    node_values: np.ndarray

    def __post_init__(self) -> None:
        a, b, resolution = float(self.a), float(self.b), float(self.resolution)
        if not b > a:
            raise InvalidParameter(f"need a < b, got [{a}, {b}]")
        if not resolution > 0:
            raise InvalidParameter("resolution must be positive")
        values = np.array(self.node_values, dtype=np.float64).ravel()
        n_cells = math.ceil(resolution)
        if values.shape[0] != n_cells + 1:
            raise DimensionMismatch(
                f"resolution {resolution} needs {n_cells + 1} node values, got {values.shape[0]}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "resolution", resolution)
        object.__setattr__(self, "node_values", values)

    @property
    def n_cells(self) -> int:
        return math.ceil(self.resolution)

    @property
    def nodes(self) -> np.ndarray:
        k = np.arange(self.n_cells + 1)
        return self.a + k * (self.b - self.a) / self.n_cells

    @classmethod
    def from_function(
        cls, f: Callable[[np.ndarray], np.ndarray], a: float, b: float, resolution: float
    ) -> "Interp1dSpec":
        """Sample a vectorized scalar function at the grid nodes."""
        n_cells = math.ceil(resolution)
        nodes = a + np.arange(n_cells + 1) * (b - a) / n_cells
        return cls(a, b, resolution, np.asarray(f(nodes), dtype=np.float64).ravel())


def l1_norm_net(d: int) -> StructuredNetwork:
    """Network of shape ``(d, 2d, 1)`` computing the 1-norm on R^d."""
    if int(d) != d or d < 1:
        raise InvalidParameter(f"dimension must be a positive integer, got {d}")
    absolute = StructuredNetwork(
        (
            Layer(np.array([[1.0], [-1.0]]), np.zeros(2)),
            Layer(np.array([[1.0, 1.0]]), np.zeros(1)),
        )
    )
    if d == 1:
        return absolute
    return compose(sum_net(1, d), parallelize([absolute] * d))


_MAX_OF_TWO = StructuredNetwork(
    (
        Layer(np.array([[1.0, -1.0], [0.0, 1.0], [0.0, -1.0]]), np.zeros(3)),
        Layer(np.array([[1.0, 1.0, -1.0]]), np.zeros(1)),
    )
)


@lru_cache(maxsize=None)
def max_net(d: int) -> StructuredNetwork:
    """Network computing the maximum of ``d >= 2`` numbers.

    Inputs are reduced in adjacent pairs with ``max(x, y) = relu(x - y) + y``;
    for odd ``d`` the last entry is passed through an identity block.  The
    result has ``ceil(log2 d)`` hidden layers, weights in ``{-1, 0, 1}`` and
    zero biases.  Sub-networks are cached by ``d``.
    """
    if int(d) != d or d < 2:
        raise InvalidParameter(f"max_net needs d >= 2, got {d}")
    d = int(d)
    if d == 2:
        return _MAX_OF_TWO
    half = (d + 1) // 2
    blocks = [_MAX_OF_TWO] * (d // 2)
    if d % 2:
        blocks.append(identity_net())
    return compose(max_net(half), parallelize(blocks))


def max_convolution(spec: MaxConvSpec, x) -> np.ndarray:
    """Evaluate ``max_k (y_k - L ||x - x_k||_1)`` directly, for a batch of rows."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    dist = np.abs(x[:, None, :] - spec.centers[None, :, :]).sum(axis=2)
    return np.max(spec.values[None, :] - spec.lipschitz * dist, axis=1)


def max_convolution_net(spec: MaxConvSpec) -> StructuredNetwork:
    """Network realizing the maximum convolution described by ``spec``.

    The input is copied once per center, shifted by the center, sent through
    a 1-norm network, scaled by ``-L`` and offset by the center value, and the
    ``K`` results are reduced by :func:`max_net`.
    """
    k, d = spec.n_centers, spec.dim
    distances = parallelize(
        [compose(l1_norm_net(d), affine_net(np.eye(d), -spec.centers[j])) for j in range(k)]
    )
    scores = affine_net(-spec.lipschitz * np.eye(k), spec.values)
    return compose(max_net(k), compose(scores, compose(distances, concat_net(k, d))))


def interp1d_net(spec: Interp1dSpec) -> StructuredNetwork:
    """Network of shape ``(1, K + 1, 1)`` realizing the piecewise-linear interpolant.

    The realization is ``f_0 + sum_k c_k relu(x - r_k)`` where ``c_k`` is the
    change of slope at node ``r_k``; index guards at both ends make the
    boundary terms use the neighbouring cell.
    """
    n = spec.n_cells
    r = spec.nodes
    f = spec.node_values
    coeffs = np.empty(n + 1)
    for k in range(n + 1):
        right = (f[min(k + 1, n)] - f[k]) / (r[min(k + 1, n)] - r[min(k, n - 1)])
        left = (f[k] - f[max(k - 1, 0)]) / (r[max(k, 1)] - r[max(k - 1, 0)])
        coeffs[k] = right - left
    return StructuredNetwork(
        (
            Layer(np.ones((n + 1, 1)), -r),
            Layer(coeffs[None, :], np.array([f[0]])),
        )
    )
