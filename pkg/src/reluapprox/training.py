"""Empirical risk, its gradient, SGD with random restarts and candidate selection.

Randomness is derived from a single master seed.  Restart ``k`` (1-based)
draws its initialization and all of its batches from the stream
``SeedSequence(seed, spawn_key=(k,))``; the selection samples use
``spawn_key=(0,)``.  Identical configurations and seeds therefore give
bitwise identical results regardless of evaluation order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from .approximation import HypercubeDomain, TargetOracle
from .errors import (
    BudgetExceeded,
    DataSourceExhausted,
    DimensionMismatch,
    InvalidParameter,
)
from .network import Architecture, ClipBounds, ParamVector, realize_clipped

__all__ = [
    "SampleSet",
    "DataSource",
    "SyntheticSource",
    "FiniteSource",
    "TrainConfig",
    "RestartTable",
    "SelectionResult",
    "MonteCarloEstimate",
    "empirical_risk",
    "risk_gradient",
    "restart_rng",
    "sgd_restarts",
    "selection_samples",
    "select_best",
    "l2_error_estimate",
    "mc_identity_check",
]


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Input/label pairs ``(X_j, Y_j)`` with ``X`` of shape ``(M, d)`` and ``Y`` of shape ``(M,)``."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self) -> None:
        X = np.array(self.X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        Y = np.array(self.Y, dtype=np.float64).ravel()
        if X.ndim != 2 or X.shape[0] == 0:
            raise InvalidParameter("a sample set needs at least one input row")
        if Y.shape[0] != X.shape[0]:
            raise DimensionMismatch(f"{X.shape[0]} inputs but {Y.shape[0]} labels")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    def __len__(self) -> int:
        return int(self.X.shape[0])

    @property
    def dim(self) -> int:
        return int(self.X.shape[1])

    def validate(self, domain: HypercubeDomain, bounds: ClipBounds) -> None:
        """Raise when inputs leave the cube or labels leave the clip interval."""
        if self.dim != domain.d:
            raise DimensionMismatch(f"samples have dimension {self.dim}, domain {domain.d}")
        if not domain.contains(self.X):
            raise InvalidParameter("sample inputs lie outside the domain")
        if not bounds.contains(self.Y):
            raise InvalidParameter("sample labels lie outside the clip bounds")


class DataSource(Protocol):
    """Anything that hands out batches of samples from a random generator."""

    def draw(self, rng: np.random.Generator, size: int) -> SampleSet: ...


@dataclass(frozen=True)
class SyntheticSource:
    """Uniform inputs on a cube labelled by a target, with optional bounded noise.

    With ``noise = h > 0`` the label is ``target(x) + h * U`` where ``U`` is
    uniform on ``[-1, 1]``, so the conditional mean of the label is still
    ``target(x)``.
    """

    target: TargetOracle
    domain: HypercubeDomain
    noise: float = 0.0

    def __post_init__(self) -> None:
        if not self.noise >= 0:
            raise InvalidParameter("noise level must be nonnegative")

    @property
    def label_range(self) -> tuple[float, float]:
        return self.target.lower - self.noise, self.target.upper + self.noise

    def draw(self, rng: np.random.Generator, size: int) -> SampleSet:
        X = self.domain.sample(rng, size)
        Y = self.target(X)
        if self.noise > 0:
            Y = Y + self.noise * rng.uniform(-1.0, 1.0, size=size)
        return SampleSet(X, Y)


class FiniteSource:
    """Batches drawn from a fixed sample set.

    With ``replace=True`` (default) every batch is drawn uniformly with
    replacement.  With ``replace=False`` rows are consumed in order and
    :class:`DataSourceExhausted` is raised when too few remain.  With
    ``full_batch=True`` every request returns the whole set unchanged,
    whatever the requested size.
    """

    def __init__(self, samples: SampleSet, replace: bool = True, full_batch: bool = False):
        self.samples = samples
        self.replace = replace
        self.full_batch = full_batch
        self._cursor = 0

    def draw(self, rng: np.random.Generator, size: int) -> SampleSet:
        if self.full_batch:
            return self.samples
        n = len(self.samples)
        if self.replace:
            idx = rng.integers(0, n, size=size)
        else:
            if self._cursor + size > n:
                raise DataSourceExhausted(
                    f"requested {size} samples but only {n - self._cursor} remain"
                )
            idx = np.arange(self._cursor, self._cursor + size)
            self._cursor += size
        return SampleSet(self.samples.X[idx], self.samples.Y[idx])


def _schedule(value, n_steps: int, name: str) -> Callable[[int], float]:
    if callable(value):
        return value
    if np.ndim(value) == 0:
        return lambda n, v=value: v
    values = list(value)
    if len(values) < n_steps:
        raise InvalidParameter(f"{name} schedule has {len(values)} entries, need {n_steps}")
    return lambda n: values[n - 1]


@dataclass(frozen=True)
class TrainConfig:
    """Settings of SGD with random restarts.

    Attributes
    ----------
    architecture : Architecture
        Network shape; the output must be scalar.
    n_restarts : int
        Number ``K`` of independent initializations.
    n_steps : int
        Number ``N`` of SGD steps per restart.
    eligible_steps : tuple of int
        Step indices whose iterates are kept and may be selected; must contain 0.
    learning_rate : float, sequence or callable
        Step size ``gamma_n`` for ``n = 1..N``.
    batch_size : int, sequence or callable
        Batch size ``J_n`` for ``n = 1..N``.
    init_radius : float
        Initial parameters are uniform on ``[-c, c]``; ``c >= 1``.
    selection_radius : float or None
        Only iterates with sup norm at most ``beta`` can be selected; defaults
        to ``init_radius`` and must not be smaller.
    bounds : ClipBounds
        Output clipping interval ``[u, v]``.
    seed : int
        Master seed.
    n_params : int or None
        Length of the parameter vector; defaults to the architecture's count.
    """

    architecture: Architecture
    n_restarts: int = 1
    n_steps: int = 0
    eligible_steps: tuple[int, ...] = (0,)
    learning_rate: object = 0.0
    batch_size: object = 1
    init_radius: float = 1.0
    selection_radius: float | None = None
    bounds: ClipBounds = field(default_factory=ClipBounds)
    seed: int = 0
    n_params: int | None = None

    def __post_init__(self) -> None:
        arch_ = self.architecture
        if not isinstance(arch_, Architecture):
            arch_ = Architecture(tuple(arch_))
            object.__setattr__(self, "architecture", arch_)
        if arch_.output_dim != 1:
            raise InvalidParameter("training needs a scalar-output architecture")
        if self.n_restarts < 1:
            raise InvalidParameter("need at least one restart")
        if self.n_steps < 0:
            raise InvalidParameter("number of steps must be nonnegative")
        steps = tuple(sorted(set(int(n) for n in self.eligible_steps)))
        if 0 not in steps:
            raise InvalidParameter("eligible steps must contain 0")
        if steps[-1] > self.n_steps or steps[0] < 0:
            raise InvalidParameter("eligible steps must lie in 0..N")
        object.__setattr__(self, "eligible_steps", steps)
        if not self.init_radius >= 1:
            raise InvalidParameter("initialization radius c must be at least 1")
        beta = self.init_radius if self.selection_radius is None else self.selection_radius
        if not beta >= self.init_radius:
            raise InvalidParameter("selection radius beta must be at least c")
        object.__setattr__(self, "selection_radius", float(beta))
        n_params = arch_.n_params if self.n_params is None else int(self.n_params)
        if n_params < arch_.n_params:
            raise InvalidParameter("parameter vector shorter than the architecture needs")
        object.__setattr__(self, "n_params", n_params)
        if self.seed < 0:
            raise InvalidParameter("seed must be nonnegative")

    def step_size(self, n: int) -> float:
        return float(_schedule(self.learning_rate, self.n_steps, "learning rate")(n))

    def batch(self, n: int) -> int:
        size = int(_schedule(self.batch_size, self.n_steps, "batch size")(n))
        if size < 1:
            raise InvalidParameter("batch sizes must be positive")
        return size


def _forward(theta: np.ndarray, architecture: Architecture, X: np.ndarray):
    """Forward pass keeping the pre-activation of every layer."""
    dims = architecture.dims
    pre, post = [], [X]
    s, h = 0, X
    for i in range(1, len(dims)):
        m, n = dims[i], dims[i - 1]
        w = theta[s : s + m * n].reshape(m, n)
        b = theta[s + m * n : s + m * n + m]
        s += m * n + m
        z = h @ w.T + b
        pre.append(z)
        h = np.maximum(z, 0.0) if i < len(dims) - 1 else z
        post.append(h)
    return pre, post


def _check_samples(architecture: Architecture, samples: SampleSet) -> None:
    if samples.dim != architecture.input_dim:
        raise DimensionMismatch(
            f"samples have {samples.dim} features, architecture expects {architecture.input_dim}"
        )


def empirical_risk(theta, architecture, bounds: ClipBounds, samples: SampleSet) -> float:
    """Mean squared error ``(1/M) sum_j (net(X_j) - Y_j)**2`` of the clipped network."""
    architecture = Architecture(tuple(architecture))
    _check_samples(architecture, samples)
    out = realize_clipped(theta, architecture, bounds, samples.X)
    return float(np.mean((out - samples.Y) ** 2))


def risk_gradient(theta, architecture, bounds: ClipBounds, samples: SampleSet) -> np.ndarray:
    """Gradient of :func:`empirical_risk` with respect to the flat parameters.

    At kinks the rectifier derivative is taken as 0 at 0, and the clip
    derivative as 1 strictly inside ``(u, v)`` and 0 elsewhere.  Entries of
    ``theta`` beyond the architecture's parameter count get gradient 0.
    """
    architecture = Architecture(tuple(architecture))
    _check_samples(architecture, samples)
    values = theta.values if isinstance(theta, ParamVector) else np.asarray(theta, dtype=np.float64)
    if values.size < architecture.n_params:
        raise DimensionMismatch("parameter vector shorter than the architecture needs")
    pre, post = _forward(values, architecture, samples.X)
    z_out = pre[-1][:, 0]
    residual = bounds.apply(z_out) - samples.Y
    inside = (z_out > bounds.lower) & (z_out < bounds.upper)
    delta = ((2.0 / len(samples)) * residual * inside)[:, None]
    grad = np.zeros_like(values)
    offsets = architecture.layer_offsets()
    dims = architecture.dims
    for i in range(architecture.depth, 0, -1):
        m, n = dims[i], dims[i - 1]
        s = offsets[i - 1]
        grad[s : s + m * n] = (delta.T @ post[i - 1]).ravel()
        grad[s + m * n : s + m * n + m] = delta.sum(axis=0)
        if i > 1:
            w = values[s : s + m * n].reshape(m, n)
            delta = (delta @ w) * (pre[i - 2] > 0)
    return grad


def restart_rng(seed: int, k: int) -> np.random.Generator:
    """Private generator of restart ``k``; ``k = 0`` is reserved for the selection samples."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))


@dataclass(frozen=True, eq=False)
class RestartTable:
    """Kept iterates ``Theta[k, n]`` for every restart ``k`` and eligible step ``n``.

    ``params[k - 1, j]`` is the iterate of restart ``k`` after
    ``eligible_steps[j]`` steps.
    """

    params: np.ndarray
    eligible_steps: tuple[int, ...]
    architecture: Architecture
    seed: int
    spawn_keys: tuple[tuple[int, ...], ...]

    @property
    def n_restarts(self) -> int:
        return int(self.params.shape[0])

    def get(self, k: int, n: int) -> ParamVector:
        j = self.eligible_steps.index(n)
        return ParamVector(self.params[k - 1, j], self.architecture)

    def indices(self):
        """All ``(k, n)`` pairs in lexicographic order."""
        for k in range(1, self.n_restarts + 1):
            for n in self.eligible_steps:
                yield k, n


def sgd_restarts(config: TrainConfig, source: DataSource, seed: int | None = None) -> RestartTable:
    """Run ``K`` independent SGD trajectories and keep the eligible iterates.

    Restart ``k`` starts from a uniform draw on ``[-c, c]^d`` and performs
    ``Theta <- Theta - gamma_n * gradient`` on a fresh batch of size ``J_n``
    at every step ``n = 1..N``.
    """
    seed = config.seed if seed is None else seed
    steps = config.eligible_steps
    table = np.empty((config.n_restarts, len(steps), config.n_params))
    for k in range(1, config.n_restarts + 1):
        rng = restart_rng(seed, k)
        theta = rng.uniform(-config.init_radius, config.init_radius, size=config.n_params)
        if steps[0] == 0:
            table[k - 1, 0] = theta
        slot = 1
        for n in range(1, config.n_steps + 1):
            batch = source.draw(rng, config.batch(n))
            theta = theta - config.step_size(n) * risk_gradient(
                theta, config.architecture, config.bounds, batch
            )
            if slot < len(steps) and steps[slot] == n:
                table[k - 1, slot] = theta
                slot += 1
    table.setflags(write=False)
    return RestartTable(
        params=table,
        eligible_steps=steps,
        architecture=config.architecture,
        seed=seed,
        spawn_keys=tuple((k,) for k in range(1, config.n_restarts + 1)),
    )


def selection_samples(source: DataSource, size: int, seed: int) -> SampleSet:
    """Samples used to compare candidates, drawn from the stream reserved for selection."""
    return source.draw(restart_rng(seed, 0), size)


@dataclass(frozen=True, eq=False)
class SelectionResult:
    """The chosen candidate ``(k, n)``, its risk and the full risk table."""

    k: int
    n: int
    risk: float
    n_eligible: int
    params: ParamVector
    risks: np.ndarray
    eligible_mask: np.ndarray

    @property
    def index(self) -> tuple[int, int]:
        return self.k, self.n

    def to_dict(self) -> dict:
        return {"k": self.k, "n": self.n, "risk": self.risk, "n_eligible": self.n_eligible}


def select_best(table: RestartTable, config: TrainConfig, validation: SampleSet) -> SelectionResult:
    """Pick the eligible iterate with the smallest risk on ``validation``.

    An iterate is eligible when its sup norm is at most the selection radius.
    Ties go to the lexicographically smallest ``(k, n)``.
    """
    steps = table.eligible_steps
    risks = np.empty((table.n_restarts, len(steps)))
    norms = np.abs(table.params).max(axis=2)
    mask = norms <= config.selection_radius
    best = None
    for k, n in table.indices():
        j = steps.index(n)
        risks[k - 1, j] = empirical_risk(
            table.params[k - 1, j], table.architecture, config.bounds, validation
        )
        if mask[k - 1, j] and (best is None or risks[k - 1, j] < risks[best[0] - 1, steps.index(best[1])]):
            best = (k, n)
    if best is None:
        raise InvalidParameter("no iterate lies within the selection radius")
    k, n = best
    return SelectionResult(
        k=k,
        n=n,
        risk=float(risks[k - 1, steps.index(n)]),
        n_eligible=int(mask.sum()),
        params=table.get(k, n),
        risks=risks,
        eligible_mask=mask,
    )


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Sample mean with its standard error."""

    mean: float
    stderr: float
    n_samples: int


def l2_error_estimate(
    theta,
    architecture,
    bounds: ClipBounds,
    target: TargetOracle,
    sampler: HypercubeDomain | Callable[[np.random.Generator, int], np.ndarray],
    n_samples: int,
    q: int = 2,
    rng: np.random.Generator | None = None,
) -> MonteCarloEstimate:
    """Monte Carlo estimate of ``E |net(X) - target(X)|**q`` for ``q`` in ``{1, 2}``.

    ``sampler`` is either a cube (uniform inputs) or a callable
    ``(rng, n) -> (n, d) array``.
    """
    if n_samples < 1:
        raise InvalidParameter("need at least one Monte Carlo sample")
    if q not in (1, 2):
        raise InvalidParameter("q must be 1 or 2")
    rng = np.random.default_rng(0) if rng is None else rng
    X = sampler.sample(rng, n_samples) if isinstance(sampler, HypercubeDomain) else sampler(rng, n_samples)
    err = np.abs(realize_clipped(theta, architecture, bounds, X) - target(X)) ** q
    err = np.atleast_1d(err)
    stderr = float(err.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else math.inf
    return MonteCarloEstimate(float(err.mean()), stderr, n_samples)


def mc_identity_check(
    values: Sequence[float], probs: Sequence[float], M: int, p: float = 2.0, budget: int = 1_000_000
) -> dict[str, tuple[float, float] | None]:
    """Evaluate both sides of three Monte Carlo moment facts by exact enumeration.

    For ``M`` i.i.d. copies of a finitely supported ``X``:

    ``"sum_variance"``
        ``E[(sum X_i - M E X)**2]`` against ``M Var X`` (equal).
    ``"mean_moment"``
        ``(E|mean - E X|**p)**(1/p)`` against
        ``sqrt((p - 1) / M) (E|X - E X|**p)**(1/p)`` (left <= right, ``p >= 2``).
    ``"bounded_moment"``
        ``E|X - E X|**p`` against ``1/4`` (left <= right); ``None`` unless the
        support lies in ``[0, 1]``.
    """
    values = np.asarray(values, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    if values.ndim != 1 or values.shape != probs.shape or values.size == 0:
        raise DimensionMismatch("values and probabilities must be matching 1-D sequences")
    if np.any(probs < 0) or not math.isclose(probs.sum(), 1.0, abs_tol=1e-12):
        raise InvalidParameter("probabilities must be nonnegative and sum to 1")
    if M < 1:
        raise InvalidParameter("M must be positive")
    if p < 2:
        raise InvalidParameter("the moment inequality needs p >= 2")
    if values.size**M > budget:
        raise BudgetExceeded(f"{values.size}**{M} outcomes exceed the budget {budget}")
    mean = float(probs @ values)
    central_p = float(probs @ np.abs(values - mean) ** p)
    variance = float(probs @ (values - mean) ** 2)
    sum_sq = 0.0
    mean_dev_p = 0.0
    for outcome in itertools.product(range(values.size), repeat=M):
        idx = np.asarray(outcome)
        weight = float(np.prod(probs[idx]))
        total = float(values[idx].sum())
        sum_sq += weight * (total - M * mean) ** 2
        mean_dev_p += weight * abs(total / M - mean) ** p
    in_unit = bool(np.all((values >= 0) & (values <= 1)))
    return {
        "sum_variance": (sum_sq, M * variance),
        "mean_moment": (mean_dev_p ** (1 / p), math.sqrt((p - 1) / M) * central_p ** (1 / p)),
        "bounded_moment": (central_p, 0.25) if in_unit else None,
    }
