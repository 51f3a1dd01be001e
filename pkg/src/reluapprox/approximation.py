"""Training-free approximation of Lipschitz functions by clipped ReLU networks.

The multidimensional approximator samples the target on a midpoint grid and
realizes the maximum convolution of those samples.  In one dimension the
piecewise-linear interpolant gives a sharper rate.  Both results are
embedded into a caller-chosen architecture and returned as flat parameter
vectors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .constructions import Interp1dSpec, MaxConvSpec, interp1d_net, max_convolution_net
from .errors import BudgetExceeded, DimensionMismatch, HypothesisViolation, InvalidParameter
from .network import Architecture, ClipBounds, ParamVector, embed, flatten, realize_clipped

__all__ = [
    "HypercubeDomain",
    "TargetOracle",
    "ApproxReport",
    "EpsArchitecture",
    "ceil_log2",
    "covering_grid",
    "approx_bound",
    "interp1d_bound",
    "build_approximator",
    "build_interp1d_approximator",
    "eps_architecture",
    "sup_error_estimate",
    "check_lipschitz",
    "approximate",
    "minimal_grid_architecture",
]

DEFAULT_GRID_BUDGET = 20_000_000


@dataclass(frozen=True)
class HypercubeDomain:
    """The cube ``[a, b]^d``."""

    a: float
    b: float
    d: int

    def __post_init__(self) -> None:
        if not float(self.b) > float(self.a):
            raise InvalidParameter(f"need a < b, got [{self.a}, {self.b}]")
        if int(self.d) != self.d or self.d < 1:
            raise InvalidParameter(f"dimension must be a positive integer, got {self.d}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "d", int(self.d))

    @property
    def side(self) -> float:
        return self.b - self.a

    @property
    def midpoint(self) -> np.ndarray:
        return np.full(self.d, 0.5 * (self.a + self.b))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all((x >= self.a) & (x <= self.b)))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.a, self.b, size=(n, self.d))


@dataclass(frozen=True)
class TargetOracle:
    """A function on a cube with a declared Lipschitz constant and range.

    Attributes
    ----------
    func : callable
        Maps an ``(n, d)`` array of points to an ``(n,)`` array of values.
        With ``vectorized=False`` it is called on one ``(1, d)`` row at a time.
    lipschitz : float
        Claimed constant ``L`` with ``|f(x) - f(y)| <= L ||x - y||_1``.
    lower, upper : float
        Claimed range of ``f``.
    name : str
        Label used in reports.
    vectorized : bool
        Whether ``func`` accepts batches.
    """

    func: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    lower: float = -math.inf
    upper: float = math.inf
    name: str = "custom"
    vectorized: bool = True

    def __post_init__(self) -> None:
        if not float(self.lipschitz) >= 0:
            raise InvalidParameter("Lipschitz constant must be nonnegative")
        if not float(self.lower) <= float(self.upper):
            raise InvalidParameter("declared range needs lower <= upper")

    @property
    def sup_abs(self) -> float:
        return max(abs(self.lower), abs(self.upper))

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if self.vectorized:
            out = np.asarray(self.func(x), dtype=np.float64).reshape(-1)
        else:
            out = np.array([float(np.ravel(self.func(row[None, :]))[0]) for row in x])
        if out.shape[0] != x.shape[0]:
            raise DimensionMismatch("target returned the wrong number of values")
        return out


@dataclass(frozen=True)
class ApproxReport:
    """Outcome of building and measuring one approximating network."""

    method: str
    architecture: tuple[int, ...]
    resolution: float
    param_sup_norm: float
    param_bound: float
    theoretical_bound: float
    measured_sup_error: float
    points_per_axis: int
    n_grid_centers: int = 0
    fallback: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "architecture": list(self.architecture),
            "resolution": self.resolution,
            "param_sup_norm": self.param_sup_norm,
            "param_bound": self.param_bound,
            "theoretical_bound": self.theoretical_bound,
            "measured_sup_error": self.measured_sup_error,
            "points_per_axis": self.points_per_axis,
            "n_grid_centers": self.n_grid_centers,
            "fallback": self.fallback,
            "within_bound": self.measured_sup_error <= self.theoretical_bound,
            **self.extra,
        }


def ceil_log2(x) -> int:
    """Smallest integer ``t`` with ``2**t >= x`` for positive rational ``x``, computed exactly."""
    x = Fraction(x)
    if x <= 0:
        raise InvalidParameter("ceil_log2 needs a positive argument")
    t = math.ceil(math.log2(x.numerator) - math.log2(x.denominator))
    while Fraction(2) ** t < x:
        t += 1
    while Fraction(2) ** (t - 1) >= x:
        t -= 1
    return t


def _grid_axis(domain: HypercubeDomain, m: int) -> np.ndarray:
    return domain.a + (np.arange(m) + 0.5) * domain.side / m


def _midpoint_grid(domain: HypercubeDomain, m: int) -> np.ndarray:
    axis = _grid_axis(domain, m)
    mesh = np.meshgrid(*([axis] * domain.d), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def covering_grid(domain: HypercubeDomain, r: float) -> np.ndarray:
    """Midpoint grid whose 1-norm balls of radius ``r`` cover the cube.

    Each axis is cut into ``m = ceil(d (b - a) / (2 r))`` equal cells and the
    cell centers are returned as an ``(m**d, d)`` array.
    """
    if not r > 0:
        raise InvalidParameter("covering radius must be positive")
    q = domain.d * domain.side / (2.0 * r)
    m = math.ceil(q)
    if m > 1 and abs(q - (m - 1)) <= 1e-12 * q:
        m -= 1
    return _midpoint_grid(domain, max(m, 1))


def approx_bound(d: int, lipschitz: float, a: float, b: float, resolution: float) -> float:
    """Guaranteed sup error ``3 d L (b - a) / A**(1/d)`` of :func:`build_approximator`."""
    if not resolution > 0:
        raise InvalidParameter("resolution must be positive")
    return 3.0 * d * lipschitz * (b - a) * resolution ** (-1.0 / d)


def interp1d_bound(lipschitz: float, a: float, b: float, resolution: float) -> float:
    """Guaranteed sup error ``L (b - a) / A`` of :func:`build_interp1d_approximator`."""
    if not resolution > 0:
        raise InvalidParameter("resolution must be positive")
    return lipschitz * (b - a) / resolution


def _check_range(target: TargetOracle, bounds: ClipBounds, values: np.ndarray | None = None):
    if target.lower < bounds.lower or target.upper > bounds.upper:
        raise HypothesisViolation(
            "range of f inside [u, v]",
            f"declared range [{target.lower}, {target.upper}] vs clip [{bounds.lower}, {bounds.upper}]",
        )
    if values is not None and not bounds.contains(values):
        raise HypothesisViolation("range of f inside [u, v]", "sampled value outside the clip bounds")


def check_lipschitz(
    target: TargetOracle, domain: HypercubeDomain, n_pairs: int = 1000, seed: int = 0
) -> float:
    """Spot-check the declared Lipschitz constant on random pairs.

    Returns the largest observed ratio ``|f(x) - f(y)| / ||x - y||_1`` and
    emits a :class:`UserWarning` when it exceeds the declared constant.
    """
    rng = np.random.default_rng(seed)
    x = domain.sample(rng, n_pairs)
    y = domain.sample(rng, n_pairs)
    dist = np.abs(x - y).sum(axis=1)
    keep = dist > 0
    ratio = np.abs(target(x) - target(y))[keep] / dist[keep]
    observed = float(ratio.max()) if ratio.size else 0.0
    if observed > target.lipschitz * (1 + 1e-9) + 1e-12:
        warnings.warn(
            f"target {target.name!r} looks steeper ({observed:.6g}) than its declared "
            f"Lipschitz constant {target.lipschitz:.6g}",
            UserWarning,
            stacklevel=2,
        )
    return observed


def _constant_params(value: float, architecture: Architecture) -> ParamVector:
    theta = np.zeros(architecture.n_params)
    theta[-1] = value
    return ParamVector(theta, architecture)


def _grid_count_per_axis(resolution: Fraction, d: int) -> int:
    """Largest integer ``z`` with ``2 d z**d <= A``."""
    z = max(int(math.floor((float(resolution) / (2 * d)) ** (1.0 / d))), 0)
    while 2 * d * (z + 1) ** d <= resolution:
        z += 1
    while z > 0 and 2 * d * z**d > resolution:
        z -= 1
    return z


def _check_multidim_architecture(architecture: Architecture, d: int, resolution: Fraction):
    if architecture.input_dim != d:
        raise HypothesisViolation("l_0 = d", f"got l_0 = {architecture.input_dim}, d = {d}")
    if architecture.output_dim != 1:
        raise HypothesisViolation("l_L = 1", f"got l_L = {architecture.output_dim}")
    if resolution <= 6**d:
        return
    depth = architecture.depth
    need_depth = ceil_log2(resolution / (2 * d)) + 2
    if depth < need_depth:
        raise HypothesisViolation("L >= ceil(log2(A/2d)) + 2", f"L = {depth} < {need_depth}")
    if architecture.dims[1] < resolution:
        raise HypothesisViolation("l_1 >= A", f"l_1 = {architecture.dims[1]} < {float(resolution)}")
    for i in range(2, depth):
        need = 3 * math.ceil(resolution / (2**i * d))
        if architecture.dims[i] < need:
            raise HypothesisViolation(
                "l_i >= 3 ceil(A / (2^i d))", f"l_{i} = {architecture.dims[i]} < {need}"
            )


def build_approximator(
    target: TargetOracle,
    domain: HypercubeDomain,
    resolution: float,
    architecture,
    bounds: ClipBounds,
) -> ParamVector:
    """Parameters of a clipped ReLU network within ``3 d L (b - a) / A**(1/d)`` of ``target``.

    For ``A > 6**d`` the target is sampled on a midpoint grid with
    ``z = floor((A / 2d)**(1/d))`` points per axis and the maximum convolution
    of those samples is embedded into ``architecture``.  For smaller ``A``
    the constant network at the value of the cube's midpoint is returned.

    Raises
    ------
    HypothesisViolation
        If ``architecture`` is too small for ``A`` or the target's range is not
        inside ``bounds``.
    """
    architecture = Architecture(tuple(architecture))
    res = Fraction(resolution)
    if res <= 0:
        raise InvalidParameter("resolution must be positive")
    d = domain.d
    _check_multidim_architecture(architecture, d, res)
    _check_range(target, bounds)
    check_lipschitz(target, domain)
    if res <= 6**d:
        value = target(domain.midpoint[None, :])
        _check_range(target, bounds, value)
        return _constant_params(float(value[0]), architecture)
    per_axis = _grid_count_per_axis(res, d)
    centers = _midpoint_grid(domain, per_axis)
    values = target(centers)
    _check_range(target, bounds, values)
    net = max_convolution_net(MaxConvSpec(target.lipschitz, centers, values))
    return ParamVector(flatten(embed(net, architecture)).values, architecture)


def build_interp1d_approximator(
    target: TargetOracle,
    domain: HypercubeDomain,
    resolution: float,
    architecture,
    bounds: ClipBounds,
) -> ParamVector:
    """Parameters of a clipped ReLU network within ``L (b - a) / A`` of a 1-D ``target``.

    The piecewise-linear interpolant on ``ceil(A) + 1`` uniform nodes is
    embedded into ``architecture``, which needs depth at least 2, first
    hidden width at least ``A + 2`` and every other hidden width at least 2.
    """
    architecture = Architecture(tuple(architecture))
    if domain.d != 1:
        raise HypothesisViolation("d = 1", f"got d = {domain.d}")
    if not resolution > 0:
        raise InvalidParameter("resolution must be positive")
    if architecture.depth < 2:
        raise HypothesisViolation("L >= 2", f"L = {architecture.depth}")
    if architecture.input_dim != 1 or architecture.output_dim != 1:
        raise HypothesisViolation("l_0 = l_L = 1", f"got {architecture.dims}")
    if architecture.dims[1] < resolution + 2:
        raise HypothesisViolation("l_1 >= A + 2", f"l_1 = {architecture.dims[1]}, A = {resolution}")
    for i in range(2, architecture.depth):
        if architecture.dims[i] < 2:
            raise HypothesisViolation("l_i >= 2", f"l_{i} = {architecture.dims[i]}")
    _check_range(target, bounds)
    check_lipschitz(target, domain)
    spec = Interp1dSpec.from_function(
        lambda r: target(r[:, None]), domain.a, domain.b, resolution
    )
    _check_range(target, bounds, spec.node_values)
    net = interp1d_net(spec)
    return ParamVector(flatten(embed(net, architecture)).values, architecture)


@dataclass(frozen=True)
class EpsArchitecture:
    """Architecture sized for a target accuracy, with its depth and size guarantees.

    ``param_bound`` and ``size_constant`` are exact rationals; ``depth_bound``
    and ``rect_constant`` involve logarithms and are floats.
    """

    architecture: Architecture
    resolution: Fraction
    depth_bound: float
    param_bound: Fraction
    size_constant: Fraction
    rect_constant: float

    @property
    def n_params(self) -> int:
        return self.architecture.n_params

    @property
    def hidden_depth(self) -> int:
        return self.architecture.hidden_depth

    def params_within_bound(self) -> bool:
        return self.n_params <= self.param_bound

    def depth_within_bound(self) -> bool:
        return self.hidden_depth <= self.depth_bound

    def to_dict(self) -> dict:
        return {
            "architecture": list(self.architecture.dims),
            "resolution": float(self.resolution),
            "n_params": self.n_params,
            "param_bound": float(self.param_bound),
            "hidden_depth": self.hidden_depth,
            "depth_bound": self.depth_bound,
            "size_constant": float(self.size_constant),
            "rect_constant": self.rect_constant,
            "params_within_bound": self.params_within_bound(),
            "depth_within_bound": self.depth_within_bound(),
        }


def eps_architecture(d: int, lipschitz: float, a: float, b: float, eps: float) -> EpsArchitecture:
    """Architecture on which :func:`build_approximator` reaches sup error ``eps``.

    The resolution is ``A = (3 d L (b - a) / eps)**d``; depth and widths are
    the smallest ones accepted by :func:`build_approximator` for this ``A``.
    All size arithmetic is done exactly on the given floating-point inputs.
    """
    if not 0 < eps <= 1:
        raise InvalidParameter(f"eps must lie in (0, 1], got {eps}")
    if int(d) != d or d < 1:
        raise InvalidParameter("d must be a positive integer")
    if not lipschitz >= 0 or not b > a:
        raise InvalidParameter("need L >= 0 and a < b")
    scale = 3 * d * Fraction(lipschitz) * (Fraction(b) - Fraction(a))
    eps_q = Fraction(eps)
    resolution = (scale / eps_q) ** d
    if resolution == 0 or resolution <= d:
        depth = 1
    else:
        depth = max(2 + ceil_log2(resolution / (2 * d)), 1)
    if depth == 1:
        dims = (d, 1)
    else:
        dims = [d, math.ceil(resolution)]
        dims += [3 * math.ceil(resolution / (2**i * d)) for i in range(2, depth)]
        dims.append(1)
        dims = tuple(dims)
    size_constant = (
        Fraction(9, 8) * scale ** (2 * d) + (d + 19) * scale**d + d + 11
    )
    param_bound = size_constant * eps_q ** (-2 * d)
    if scale > 0:
        rect_constant = max(math.log2(float(scale) / d) + 1.0, 0.0)
    else:
        rect_constant = 0.0
    depth_bound = d * (math.log2(1.0 / eps) + math.log2(d) + rect_constant)
    return EpsArchitecture(
        architecture=Architecture(dims),
        resolution=resolution,
        depth_bound=depth_bound,
        param_bound=param_bound,
        size_constant=size_constant,
        rect_constant=rect_constant,
    )


def _grid_points(domain: HypercubeDomain, points_per_axis: int, start: int, stop: int):
    axis = np.linspace(domain.a, domain.b, points_per_axis)
    idx = np.unravel_index(np.arange(start, stop), (points_per_axis,) * domain.d)
    return np.stack([axis[i] for i in idx], axis=1)


def sup_error_estimate(
    theta,
    architecture,
    bounds: ClipBounds,
    target: TargetOracle,
    domain: HypercubeDomain,
    points_per_axis: int,
    budget: int = DEFAULT_GRID_BUDGET,
    chunk_size: int = 4096,
) -> float:
    """Largest ``|net(x) - f(x)|`` over the uniform grid with endpoints.

    The grid has ``points_per_axis**d`` points, so the result is a lower bound
    on the true sup error.  Raises :class:`BudgetExceeded` when
    ``d * points_per_axis**d`` exceeds ``budget``.
    """
    if points_per_axis < 2:
        raise InvalidParameter("points_per_axis must be at least 2")
    n_points = points_per_axis**domain.d
    if domain.d * n_points > budget:
        raise BudgetExceeded(
            f"grid of {n_points} points in dimension {domain.d} exceeds the budget {budget}"
        )
    worst = 0.0
    for start in range(0, n_points, chunk_size):
        pts = _grid_points(domain, points_per_axis, start, min(start + chunk_size, n_points))
        err = np.abs(realize_clipped(theta, architecture, bounds, pts) - target(pts))
        worst = max(worst, float(err.max()))
    return worst


def approximate(
    target: TargetOracle,
    domain: HypercubeDomain,
    resolution: float,
    architecture=None,
    bounds: ClipBounds | None = None,
    method: str = "grid",
    points_per_axis: int | None = None,
) -> tuple[ParamVector, ApproxReport]:
    """Build an approximator, measure its error and report against the guarantee.

    ``method`` is ``"grid"`` (any dimension) or ``"interp1d"`` (``d = 1``).
    Without an explicit ``architecture`` the smallest admissible one is used.
    """
    if bounds is None:
        bounds = ClipBounds(target.lower, target.upper) if target.lower < target.upper else ClipBounds()
    d = domain.d
    if method == "grid":
        if architecture is None:
            architecture = minimal_grid_architecture(d, resolution)
        theta = build_approximator(target, domain, resolution, architecture, bounds)
        bound = approx_bound(d, target.lipschitz, domain.a, domain.b, resolution)
        param_bound = max(1.0, target.lipschitz, abs(domain.a), abs(domain.b), 2 * target.sup_abs)
        fallback = Fraction(resolution) <= 6**d
        n_centers = 1 if fallback else _grid_count_per_axis(Fraction(resolution), d) ** d
    elif method == "interp1d":
        if architecture is None:
            architecture = (1, math.ceil(resolution) + 2, 1)
        theta = build_interp1d_approximator(target, domain, resolution, architecture, bounds)
        bound = interp1d_bound(target.lipschitz, domain.a, domain.b, resolution)
        param_bound = max(1.0, 2 * target.lipschitz, target.sup_abs, abs(domain.a), abs(domain.b))
        fallback = False
        n_centers = math.ceil(resolution) + 1
    else:
        raise InvalidParameter(f"unknown approximation method {method!r}")
    if points_per_axis is None:
        points_per_axis = {1: 10_001, 2: 201, 3: 41}.get(d, 11)
    measured = sup_error_estimate(theta, theta.architecture, bounds, target, domain, points_per_axis)
    report = ApproxReport(
        method=method,
        architecture=theta.architecture.dims,
        resolution=float(resolution),
        param_sup_norm=theta.sup_norm(),
        param_bound=param_bound,
        theoretical_bound=bound,
        measured_sup_error=measured,
        points_per_axis=points_per_axis,
        n_grid_centers=n_centers,
        fallback=fallback,
        extra={"target": target.name, "d": d, "a": domain.a, "b": domain.b,
               "lipschitz": target.lipschitz},
    )
    return theta, report


def minimal_grid_architecture(d: int, resolution: float) -> Architecture:
    """Smallest architecture accepted by :func:`build_approximator` for resolution ``A``."""
    res = Fraction(resolution)
    if res <= 6**d:
        return Architecture((d, 1))
    depth = ceil_log2(res / (2 * d)) + 2
    dims = [d, math.ceil(res)] + [3 * math.ceil(res / (2**i * d)) for i in range(2, depth)] + [1]
    return Architecture(tuple(dims))
