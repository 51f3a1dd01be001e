"""Feed-forward ReLU networks in structured and flat-parameter form.

A network is either a sequence of ``(weights, bias)`` layers
(:class:`StructuredNetwork`) or a flat coefficient vector together with an
:class:`Architecture` (:class:`ParamVector`).  The flat layout stores, layer
by layer, the weight matrix in row-major order followed by the bias.  Both
forms compute the same function; :func:`flatten` and :func:`unflatten`
convert between them.

Inputs to the evaluation functions may be a single point (1-D array) or a
batch of points stacked as rows (2-D array).  No other broadcasting is done.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, IncompatibleArchitecture, InvalidParameter

__all__ = [
    "ClipBounds",
    "Activation",
    "RECTIFIER",
    "IDENTITY",
    "Layer",
    "Architecture",
    "StructuredNetwork",
    "ParamVector",
    "norm",
    "activation_apply",
    "arch",
    "realize",
    "affine_eval",
    "realize_clipped",
    "flatten",
    "unflatten",
    "embed",
]


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ClipBounds:
    """Closed interval ``[lower, upper]`` used to clip the network output.

    Infinite endpoints are allowed; ``ClipBounds()`` is the whole real line
    and clipping with it is the identity.
    """

    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self) -> None:
        lower, upper = float(self.lower), float(self.upper)
        if math.isnan(lower) or math.isnan(upper):
            raise InvalidParameter("clip bounds must not be NaN")
        if not lower < upper:
            raise InvalidParameter(f"clip bounds need lower < upper, got ({lower}, {upper})")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def apply(self, x):
        return np.clip(x, self.lower, self.upper)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all((x >= self.lower) & (x <= self.upper)))


@dataclass(frozen=True)
class Activation:
    """Componentwise activation: ``"rectifier"``, ``"identity"`` or ``"clip"``."""

    kind: str
    bounds: ClipBounds | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("rectifier", "identity", "clip"):
            raise InvalidParameter(f"unknown activation kind {self.kind!r}")
        if self.kind == "clip" and not isinstance(self.bounds, ClipBounds):
            raise InvalidParameter("a clip activation needs ClipBounds")
        if self.kind != "clip" and self.bounds is not None:
            raise InvalidParameter(f"{self.kind} activation takes no bounds")

    @classmethod
    def clip(cls, lower: float = -math.inf, upper: float = math.inf) -> "Activation":
        return cls("clip", ClipBounds(lower, upper))

    def __call__(self, x):
        return activation_apply(self, x)


RECTIFIER = Activation("rectifier")
IDENTITY = Activation("identity")


def norm(x, p: float = 2.0) -> float:
    """Return the p-norm of a nonempty vector, with ``p = inf`` the max norm."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        raise InvalidParameter("norm of an empty vector is undefined")
    p = float(p)
    if not p >= 1.0:
        raise InvalidParameter(f"p-norm needs p >= 1, got {p}")
    absx = np.abs(x)
    if math.isinf(p):
        return float(absx.max())
    if p == 1.0:
        return float(absx.sum())
    return float(np.sum(absx**p) ** (1.0 / p))


def activation_apply(activation: Activation, x) -> np.ndarray:
    """Apply ``activation`` to every entry of ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if activation.kind == "rectifier":
        return np.maximum(x, 0.0)
    if activation.kind == "clip":
        return activation.bounds.apply(x)
    return x.copy()


@dataclass(frozen=True, eq=False)
class Layer:
    """One affine map ``x -> weights @ x + bias``.

    The arrays are copied and made read-only, so a layer never changes after
    construction.
    """

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise DimensionMismatch(f"weights must be a nonempty matrix, got shape {w.shape}")
        if b.ndim != 1 or b.shape[0] != w.shape[0]:
            raise DimensionMismatch(
                f"bias of shape {b.shape} does not match weights of shape {w.shape}"
            )
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "bias", _frozen(b))

    @property
    def in_dim(self) -> int:
        return int(self.weights.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.weights.shape[0])

    def apply(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weights.T + self.bias

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Layer):
            return NotImplemented
        return np.array_equal(self.weights, other.weights) and np.array_equal(
            self.bias, other.bias
        )

    def __hash__(self) -> int:
        return hash((self.weights.tobytes(), self.bias.tobytes(), self.weights.shape))


@dataclass(frozen=True)
class Architecture:
    """Layer dimensions ``(l_0, l_1, ..., l_L)`` of a network with ``L`` affine maps."""

    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(self.dims)
        if len(dims) < 2:
            raise InvalidParameter("an architecture needs at least input and output sizes")
        clean = []
        for value in dims:
            if isinstance(value, (bool, np.bool_)) or int(value) != value or int(value) < 1:
                raise InvalidParameter(f"layer sizes must be positive integers, got {dims}")
            clean.append(int(value))
        object.__setattr__(self, "dims", tuple(clean))

    @classmethod
    def of(cls, *dims: int) -> "Architecture":
        if len(dims) == 1 and not isinstance(dims[0], (int, np.integer)):
            return cls(tuple(dims[0]))
        return cls(tuple(dims))

    @property
    def depth(self) -> int:
        """Number of affine maps."""
        return len(self.dims) - 1

    @property
    def hidden_depth(self) -> int:
        return self.depth - 1

    @property
    def input_dim(self) -> int:
        return self.dims[0]

    @property
    def output_dim(self) -> int:
        return self.dims[-1]

    @property
    def n_params(self) -> int:
        return sum(self.dims[i] * (self.dims[i - 1] + 1) for i in range(1, len(self.dims)))

    @property
    def max_width(self) -> int:
        return max(self.dims)

    def width(self, i: int) -> int:
        """Size of layer ``i``; zero for indices beyond the output layer."""
        if i < 0:
            raise InvalidParameter("layer index must be nonnegative")
        return self.dims[i] if i < len(self.dims) else 0

    def layer_offsets(self) -> list[int]:
        """Start offset of each affine map inside a flat parameter vector."""
        offsets, s = [], 0
        for i in range(1, len(self.dims)):
            offsets.append(s)
            s += self.dims[i] * (self.dims[i - 1] + 1)
        return offsets

    def __iter__(self):
        return iter(self.dims)

    def __len__(self) -> int:
        return len(self.dims)

    def __getitem__(self, i):
        return self.dims[i]


def _as_architecture(value) -> Architecture:
    return value if isinstance(value, Architecture) else Architecture(tuple(value))


@dataclass(frozen=True, eq=False)
class StructuredNetwork:
    """A network given by its list of layers."""

    layers: tuple[Layer, ...]

    def __post_init__(self) -> None:
        layers = tuple(
            layer if isinstance(layer, Layer) else Layer(*layer) for layer in self.layers
        )
        if not layers:
            raise DimensionMismatch("a network needs at least one layer")
        for k in range(1, len(layers)):
            if layers[k].in_dim != layers[k - 1].out_dim:
                raise DimensionMismatch(
                    f"layer {k + 1} expects {layers[k].in_dim} inputs but layer {k} "
                    f"produces {layers[k - 1].out_dim}"
                )
        object.__setattr__(self, "layers", layers)

    @classmethod
    def from_arrays(cls, pairs: Iterable[tuple[Sequence, Sequence]]) -> "StructuredNetwork":
        return cls(tuple(Layer(np.asarray(w), np.asarray(b)) for w, b in pairs))

    @property
    def architecture(self) -> Architecture:
        return Architecture((self.layers[0].in_dim,) + tuple(l.out_dim for l in self.layers))

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    def weights(self, i: int) -> np.ndarray | None:
        """Weight matrix of layer ``i`` (1-based), or ``None`` past the last layer."""
        if i < 1:
            raise InvalidParameter("layer indices start at 1")
        return self.layers[i - 1].weights if i <= len(self.layers) else None

    def bias(self, i: int) -> np.ndarray | None:
        """Bias of layer ``i`` (1-based), or ``None`` past the last layer."""
        if i < 1:
            raise InvalidParameter("layer indices start at 1")
        return self.layers[i - 1].bias if i <= len(self.layers) else None

    def max_abs_param(self) -> float:
        return max(
            max(float(np.abs(l.weights).max()), float(np.abs(l.bias).max())) for l in self.layers
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StructuredNetwork):
            return NotImplemented
        return len(self.layers) == len(other.layers) and all(
            a == b for a, b in zip(self.layers, other.layers)
        )

    def __hash__(self) -> int:
        return hash(self.layers)


@dataclass(frozen=True, eq=False)
class ParamVector:
    """Flat parameter vector bound to an architecture.

    ``values`` may be longer than ``architecture.n_params``; the surplus tail
    is carried along but never read by the realization.
    """

    values: np.ndarray
    architecture: Architecture

    def __post_init__(self) -> None:
        arch_ = _as_architecture(self.architecture)
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise DimensionMismatch("parameter vector must be one-dimensional")
        if values.size < arch_.n_params:
            raise DimensionMismatch(
                f"architecture {arch_.dims} needs {arch_.n_params} parameters, got {values.size}"
            )
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "architecture", arch_)

    def __len__(self) -> int:
        return int(self.values.size)

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParamVector):
            return NotImplemented
        return self.architecture == other.architecture and np.array_equal(
            self.values, other.values
        )

    def __hash__(self) -> int:
        return hash((self.values.tobytes(), self.architecture))


def arch(net: StructuredNetwork) -> Architecture:
    """Return the layer dimensions of ``net``."""
    return net.architecture


def _as_points(x, dim: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        if x.shape[0] != dim:
            raise DimensionMismatch(f"expected an input of length {dim}, got {x.shape[0]}")
        return x[None, :], True
    if x.ndim == 2:
        if x.shape[1] != dim:
            raise DimensionMismatch(f"expected inputs with {dim} columns, got {x.shape[1]}")
        return x, False
    raise DimensionMismatch(f"inputs must be 1-D or 2-D, got {x.ndim}-D")


def realize(net: StructuredNetwork, activation: Activation, x) -> np.ndarray:
    """Evaluate the function computed by ``net``.

    ``activation`` is applied after every layer except the last one, which
    stays affine.  A 1-D input gives a 1-D output; a 2-D batch gives one row
    per input row.
    """
    h, single = _as_points(x, net.input_dim)
    last = len(net.layers) - 1
    for k, layer in enumerate(net.layers):
        h = layer.apply(h)
        if k < last:
            h = activation_apply(activation, h)
    return h[0] if single else h


def _raw_theta(theta) -> np.ndarray:
    if isinstance(theta, ParamVector):
        return theta.values
    out = np.asarray(theta, dtype=np.float64)
    if out.ndim != 1:
        raise DimensionMismatch("parameter vector must be one-dimensional")
    return out


def affine_eval(theta, offset: int, out_dim: int, in_dim: int, x) -> np.ndarray:
    """Apply the affine map stored in ``theta`` starting at ``offset``.

    The ``out_dim * in_dim`` entries from ``offset`` on form the weight matrix
    in row-major order and the following ``out_dim`` entries form the bias.
    """
    theta = _raw_theta(theta)
    if offset < 0 or out_dim < 1 or in_dim < 1:
        raise InvalidParameter("offset must be nonnegative and dimensions positive")
    end = offset + out_dim * in_dim + out_dim
    if theta.size < end:
        raise DimensionMismatch(f"parameter vector of length {theta.size} is shorter than {end}")
    h, single = _as_points(x, in_dim)
    w = theta[offset : offset + out_dim * in_dim].reshape(out_dim, in_dim)
    b = theta[offset + out_dim * in_dim : end]
    out = h @ w.T + b
    return out[0] if single else out


def _layer_views(theta: np.ndarray, architecture: Architecture):
    dims = architecture.dims
    s = 0
    for i in range(1, len(dims)):
        m, n = dims[i], dims[i - 1]
        yield theta[s : s + m * n].reshape(m, n), theta[s + m * n : s + m * n + m]
        s += m * n + m


def realize_clipped(theta, architecture, bounds: ClipBounds, x):
    """Evaluate the clipped rectifier network described by ``theta``.

    Hidden layers use the rectifier and the output is clipped to ``bounds``.
    For a single input point with one output the result is a float; for a
    batch it is an array with one row per point (squeezed when the output is
    scalar).
    """
    architecture = _as_architecture(architecture)
    theta = _raw_theta(theta)
    if theta.size < architecture.n_params:
        raise DimensionMismatch(
            f"architecture {architecture.dims} needs {architecture.n_params} parameters, "
            f"got {theta.size}"
        )
    h, single = _as_points(x, architecture.input_dim)
    views = list(_layer_views(theta, architecture))
    for k, (w, b) in enumerate(views):
        h = h @ w.T + b
        if k < len(views) - 1:
            h = np.maximum(h, 0.0)
    h = bounds.apply(h)
    if architecture.output_dim == 1:
        h = h[:, 0]
        return float(h[0]) if single else h
    return h[0] if single else h


def flatten(net: StructuredNetwork) -> ParamVector:
    """Concatenate each layer's row-major weights followed by its bias."""
    parts = []
    for layer in net.layers:
        parts.append(layer.weights.ravel())
        parts.append(layer.bias)
    return ParamVector(np.concatenate(parts), net.architecture)


def unflatten(theta, architecture) -> StructuredNetwork:
    """Rebuild the layers stored in the first ``n_params`` entries of ``theta``."""
    architecture = _as_architecture(architecture)
    theta = _raw_theta(theta)
    if theta.size < architecture.n_params:
        raise DimensionMismatch(
            f"architecture {architecture.dims} needs {architecture.n_params} parameters, "
            f"got {theta.size}"
        )
    return StructuredNetwork(tuple(Layer(w, b) for w, b in _layer_views(theta, architecture)))


def _padded(matrix: np.ndarray, rows: int, cols: int) -> np.ndarray:
    out = np.zeros((rows, cols))
    out[: matrix.shape[0], : matrix.shape[1]] = matrix
    return out


def embed(net: StructuredNetwork, target) -> StructuredNetwork:
    """Place ``net`` inside the larger architecture ``target`` without changing its function.

    Extra neurons get zero weights and zero biases.  When ``target`` is
    deeper than ``net`` (scalar outputs only) the output ``y`` is carried
    through the added layers as the pair ``(relu(y), relu(-y))`` and
    recombined as ``relu(y) - relu(-y)`` at the end.
    """
    target = _as_architecture(target)
    source = net.architecture
    depth, new_depth = source.depth, target.depth
    if target.input_dim != source.input_dim or target.output_dim != source.output_dim:
        raise IncompatibleArchitecture(
            f"cannot embed {source.dims} into {target.dims}: input/output sizes differ"
        )
    if new_depth < depth:
        raise IncompatibleArchitecture(
            f"cannot embed {source.dims} into the shallower {target.dims}"
        )
    for i in range(1, depth):
        if target.dims[i] < source.dims[i]:
            raise IncompatibleArchitecture(
                f"layer {i} of {target.dims} is narrower than in {source.dims}"
            )
    if new_depth == depth:
        return StructuredNetwork(
            tuple(
                Layer(
                    _padded(layer.weights, target.dims[i + 1], target.dims[i]),
                    np.pad(layer.bias, (0, target.dims[i + 1] - layer.out_dim)),
                )
                for i, layer in enumerate(net.layers)
            )
        )
    if source.output_dim != 1:
        raise IncompatibleArchitecture("depth extension is only supported for scalar outputs")
    for i in range(depth, new_depth):
        if target.dims[i] < 2:
            raise IncompatibleArchitecture(
                f"layer {i} of {target.dims} needs width >= 2 to carry the identity block"
            )
    layers = []
    for i, layer in enumerate(net.layers[:-1]):
        layers.append(
            Layer(
                _padded(layer.weights, target.dims[i + 1], target.dims[i]),
                np.pad(layer.bias, (0, target.dims[i + 1] - layer.out_dim)),
            )
        )
    last = net.layers[-1]
    split_w = np.vstack([last.weights, -last.weights])
    split_b = np.concatenate([last.bias, -last.bias])
    layers.append(
        Layer(
            _padded(split_w, target.dims[depth], target.dims[depth - 1]),
            np.pad(split_b, (0, target.dims[depth] - 2)),
        )
    )
    carry = np.array([[1.0, -1.0], [-1.0, 1.0]])
    for i in range(depth + 1, new_depth):
        layers.append(
            Layer(_padded(carry, target.dims[i], target.dims[i - 1]), np.zeros(target.dims[i]))
        )
    layers.append(
        Layer(_padded(np.array([[1.0, -1.0]]), 1, target.dims[new_depth - 1]), np.zeros(1))
    )
    return StructuredNetwork(tuple(layers))
