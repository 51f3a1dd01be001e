"""End-to-end runs: sample data, train with restarts, measure the error, compare with a bound.

Repetition ``r`` (1-based) derives its own master seed from
``SeedSequence(seed, spawn_key=(r,))``.  Inside a repetition the training
samples come from the selection stream of :mod:`reluapprox.training` and the
Monte Carlo error evaluation uses a separate stream, so changing ``K``
leaves the data and the first restarts untouched.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .approximation import HypercubeDomain
from .bounds import BoundInputs, check_hypotheses, measured_quantity, overall_bound
from .errors import HypothesisViolation, InvalidParameter, ReluApproxError
from .network import ClipBounds
from .targets import make_target
from .training import (
    FiniteSource,
    SyntheticSource,
    TrainConfig,
    l2_error_estimate,
    select_best,
    selection_samples,
    sgd_restarts,
)

__all__ = ["ExperimentConfig", "RepetitionError", "run_experiment", "repetition_rows", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1
CSV_HEADER = ("repetition", "seed", "k", "n", "selection_risk", "error", "error_stderr")


class RepetitionError(ReluApproxError, RuntimeError):
    """A failure inside one repetition, tagged with its index."""

    def __init__(self, repetition: int, cause: Exception) -> None:
        self.repetition = repetition
        self.cause = cause
        super().__init__(f"repetition {repetition}: {cause}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one experiment; every field has a JSON counterpart.

    ``data_mode`` is ``"fixed"`` (one set of ``M`` samples used for every
    gradient step and for selection) or ``"fresh"`` (new batches at every step,
    selection on a separate set of ``M`` samples).
    """

    target: str = "abs-dist"
    target_params: dict = field(default_factory=dict)
    d: int = 1
    a: float = 0.0
    b: float = 1.0
    u: float = 0.0
    v: float = 1.0
    architecture: tuple[int, ...] = (1, 8, 1)
    K: int = 100
    N: int = 0
    eligible_steps: tuple[int, ...] | None = None
    learning_rate: float = 0.0
    batch_size: int | None = None
    c: float = 2.0
    beta: float | None = None
    M: int = 1000
    R: int = 20
    p: float = 1.0
    noise: float = 0.0
    data_mode: str = "fixed"
    variant: str = "intro"
    resolution: float | None = None
    n_error_samples: int = 4000
    n_bootstrap: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "architecture", tuple(int(v) for v in self.architecture))
        steps = tuple(range(self.N + 1)) if self.eligible_steps is None else tuple(self.eligible_steps)
        object.__setattr__(self, "eligible_steps", steps)
        if self.beta is None:
            object.__setattr__(self, "beta", float(self.c))
        if self.data_mode not in ("fixed", "fresh"):
            raise InvalidParameter("data_mode must be 'fixed' or 'fresh'")
        if self.R < 1 or self.M < 1 or self.n_error_samples < 2:
            raise InvalidParameter("R and M must be positive and n_error_samples at least 2")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidParameter(f"unknown experiment fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["architecture"] = list(self.architecture)
        out["eligible_steps"] = list(self.eligible_steps)
        return out

    def domain(self) -> HypercubeDomain:
        return HypercubeDomain(self.a, self.b, self.d)

    def bounds(self) -> ClipBounds:
        return ClipBounds(self.u, self.v)

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            architecture=self.architecture,
            n_restarts=self.K,
            n_steps=self.N,
            eligible_steps=self.eligible_steps,
            learning_rate=self.learning_rate,
            batch_size=self.M if self.batch_size is None else self.batch_size,
            init_radius=self.c,
            selection_radius=self.beta,
            bounds=self.bounds(),
            seed=seed,
        )

    def bound_inputs(self, lipschitz: float) -> BoundInputs:
        return BoundInputs(
            architecture=self.architecture,
            M=self.M,
            K=self.K,
            c=self.c,
            d=self.d,
            N=self.N,
            p=self.p,
            beta=self.beta,
            u=self.u,
            v=self.v,
            lipschitz=lipschitz,
            a=self.a,
            b=self.b,
            resolution=self.resolution,
        )


def _repetition_seed(seed: int, r: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(r,)).generate_state(1)[0])


def _error_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, 1)))


def _bootstrap_se(values: np.ndarray, statistic, n_boot: int, seed: int) -> float:
    if values.size < 2 or n_boot < 2:
        return math.nan
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, 2)))
    idx = rng.integers(0, values.size, size=(n_boot, values.size))
    stats = np.array([statistic(values[row]) for row in idx])
    return float(stats.std(ddof=1))


def run_experiment(config: ExperimentConfig) -> dict:
    """Run all repetitions and return the report as a JSON-ready dictionary.

    Raises
    ------
    HypothesisViolation
        If the configuration does not meet the chosen bound's preconditions,
        including a target range outside ``[u, v]``.
    RepetitionError
        If any repetition fails; the index of the repetition is attached.
    """
    domain, bounds = config.domain(), config.bounds()
    target = make_target(config.target, domain, **dict(config.target_params))
    source = SyntheticSource(target, domain, config.noise)
    low, high = source.label_range
    if low < config.u or high > config.v:
        raise HypothesisViolation(
            "labels inside [u, v]", f"labels span [{low}, {high}], clip [{config.u}, {config.v}]"
        )
    inputs = config.bound_inputs(target.lipschitz)
    check_hypotheses(inputs, config.variant)
    kind, uses_p = measured_quantity(config.variant)
    q = 1 if kind == "l1" else 2
    rows = []
    for r in range(1, config.R + 1):
        rep_seed = _repetition_seed(config.seed, r)
        try:
            train = config.train_config(rep_seed)
            samples = selection_samples(source, config.M, rep_seed)
            if config.data_mode == "fixed":
                data = FiniteSource(samples, full_batch=config.batch_size is None)
            else:
                data = source
            table = sgd_restarts(train, data)
            chosen = select_best(table, train, samples)
            estimate = l2_error_estimate(
                chosen.params, train.architecture, bounds, target, domain,
                config.n_error_samples, q=q, rng=_error_rng(rep_seed),
            )
        except ReluApproxError as exc:
            raise RepetitionError(r, exc) from exc
        error = math.sqrt(estimate.mean) if kind == "l2" else estimate.mean
        rows.append(
            {
                "repetition": r,
                "seed": rep_seed,
                "k": chosen.k,
                "n": chosen.n,
                "selection_risk": chosen.risk,
                "error": error,
                "error_stderr": estimate.stderr,
            }
        )
    errors = np.array([row["error"] for row in rows])
    mean = float(errors.mean())
    stderr = float(errors.std(ddof=1) / math.sqrt(errors.size)) if errors.size > 1 else math.nan
    if uses_p:
        p = config.p
        moment = lambda e: float(np.mean(e**p) ** (1.0 / p))  # noqa: E731
    else:
        moment = lambda e: float(np.mean(e))  # noqa: E731
    measured = moment(errors)
    report = overall_bound(inputs, config.variant).with_measured(measured)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "experiment",
        "config": config.to_dict(),
        "error_kind": kind,
        "aggregate": {
            "mean_error": mean,
            "stderr": stderr,
            "sd": float(errors.std(ddof=1)) if errors.size > 1 else math.nan,
            "measured": measured,
            "measured_bootstrap_se": _bootstrap_se(errors, moment, config.n_bootstrap, config.seed),
            "measured_is_estimate": True,
            "p": config.p if uses_p else 1.0,
        },
        "bound": report.to_dict(),
        "repetitions": rows,
    }


def repetition_rows(report: dict) -> tuple[tuple[str, ...], list[list]]:
    """Header and rows of the per-repetition CSV table."""
    return CSV_HEADER, [[row[h] for h in CSV_HEADER] for row in report["repetitions"]]
