"""Closed-form upper bounds on the error of networks trained with random restarts.

Every overall bound has three summands: an approximation term (how well the
architecture can fit the target), an optimization term (what ``K`` random
restarts leave behind) and a generalization term (the gap between ``M``
samples and the data distribution).  The available variants are:

``intro``
    Expected L1 error on ``[0, 1]^d`` with ``c >= 2``; selection radius ``c``.
``cor-simple``
    Same setting, sharper constants.
``theo-1d``
    ``p``-th moment of the squared L2 error in one dimension, using the
    interpolation resolution ``A``.
``cor-1d``
    ``p``-th moment of the L2 error for the architecture ``(1, ell, 1)``.
``theo-main``
    ``p``-th moment of the squared L2 error in ``d`` dimensions, using the grid
    resolution ``A``.
``cor-main``
    ``p``-th moment of the L2 error for any architecture.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .approximation import ceil_log2
from .errors import HypothesisViolation, InvalidParameter
from .network import Architecture

__all__ = [
    "VARIANTS",
    "BoundInputs",
    "BoundReport",
    "generalization_bound",
    "optimization_bound",
    "overall_bound",
    "check_hypotheses",
    "log_lemma_check",
    "measured_quantity",
]

VARIANTS = ("intro", "cor-simple", "theo-1d", "cor-1d", "theo-main", "cor-main")


@dataclass(frozen=True)
class BoundInputs:
    """Everything a bound may depend on.

    ``architecture`` fixes the depth and the largest width.  ``resolution``
    (``A``) is only read by ``theo-1d`` and ``theo-main``.
    """

    architecture: tuple[int, ...]
    M: int
    K: int
    c: float
    d: int | None = None
    N: int = 0
    p: float = 1.0
    beta: float | None = None
    u: float = 0.0
    v: float = 1.0
    lipschitz: float = 0.0
    a: float = 0.0
    b: float = 1.0
    resolution: float | None = None

    def __post_init__(self) -> None:
        dims = Architecture(tuple(self.architecture)).dims
        object.__setattr__(self, "architecture", dims)
        if self.d is None:
            object.__setattr__(self, "d", dims[0])
        if self.beta is None:
            object.__setattr__(self, "beta", float(self.c))
        if self.M < 1 or self.K < 1:
            raise InvalidParameter("M and K must be positive")
        if not self.p > 0:
            raise InvalidParameter("p must be positive")
        if not self.v > self.u:
            raise InvalidParameter("need u < v")
        if not self.b > self.a:
            raise InvalidParameter("need a < b")

    @property
    def depth(self) -> int:
        return len(self.architecture) - 1

    @property
    def max_width(self) -> int:
        return max(self.architecture)

    @property
    def hidden_widths(self) -> tuple[int, ...]:
        return self.architecture[1:-1]


@dataclass(frozen=True)
class BoundReport:
    """The three summands of an overall bound, their sum and the inputs used."""

    variant: str
    approximation: float
    optimization: float
    generalization: float
    total: float
    inputs: BoundInputs
    measured: float | None = None
    notes: tuple[str, ...] = field(default_factory=tuple)

    def with_measured(self, value: float) -> "BoundReport":
        return BoundReport(
            self.variant,
            self.approximation,
            self.optimization,
            self.generalization,
            self.total,
            self.inputs,
            float(value),
            self.notes,
        )

    def to_dict(self) -> dict:
        out = {
            "variant": self.variant,
            "approximation_term": self.approximation,
            "optimization_term": self.optimization,
            "generalization_term": self.generalization,
            "total": self.total,
            "inputs": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self.inputs).items()},
            "notes": list(self.notes),
        }
        if self.measured is not None:
            out["measured"] = self.measured
            out["within_bound"] = self.measured <= self.total
            out["bound_to_measured_ratio"] = (
                self.total / self.measured if self.measured > 0 else math.inf
            )
        return out


def generalization_bound(inputs: BoundInputs) -> float:
    """``5 (v - u)**2 L (w + 1)**1.5 max(p, ln(4 M beta c)) / sqrt(M)``.

    ``L`` is the depth and ``w`` the largest layer width.  Requires
    ``M, c, beta >= 1`` and ``v >= u + 1``.
    """
    if inputs.c < 1:
        raise HypothesisViolation("c >= 1", f"c = {inputs.c}")
    if inputs.beta < 1:
        raise HypothesisViolation("beta >= 1", f"beta = {inputs.beta}")
    if inputs.v - inputs.u < 1:
        raise HypothesisViolation("v - u >= 1", f"v - u = {inputs.v - inputs.u}")
    depth, w1 = inputs.depth, inputs.max_width + 1
    log_term = math.log(4 * inputs.M * inputs.beta * inputs.c)
    return (
        5 * (inputs.v - inputs.u) ** 2 * depth * w1**1.5 * max(inputs.p, log_term)
        / math.sqrt(inputs.M)
    )


def optimization_bound(inputs: BoundInputs) -> float:
    """``4 (v - u) L (w + 1)**L c**(L + 1) max(p, 1) / K**(1 / (L (w + 1)**2))``."""
    depth, w1 = inputs.depth, inputs.max_width + 1
    numerator = 4 * (inputs.v - inputs.u) * depth * w1**depth * inputs.c ** (depth + 1) * max(inputs.p, 1.0)
    return numerator / inputs.K ** (1.0 / (depth * w1**2))


def _min_shape(inputs: BoundInputs, power: int) -> int:
    return min((2**power,) + inputs.hidden_widths)


def _require(condition: bool, clause: str, detail: str = "") -> None:
    if not condition:
        raise HypothesisViolation(clause, detail)


def check_hypotheses(inputs: BoundInputs, variant: str) -> None:
    """Raise :class:`HypothesisViolation` naming the first failed precondition of ``variant``."""
    if variant not in VARIANTS:
        raise InvalidParameter(f"unknown bound variant {variant!r}; choose from {VARIANTS}")
    arch_ = inputs.architecture
    c, beta, L = inputs.c, inputs.beta, inputs.lipschitz
    u, v, a, b = inputs.u, inputs.v, inputs.a, inputs.b
    _require(arch_[0] == inputs.d, "l_0 = d", f"l_0 = {arch_[0]}, d = {inputs.d}")
    _require(arch_[-1] == 1, "l_L = 1", f"l_L = {arch_[-1]}")
    _require(beta >= c, "beta >= c", f"beta = {beta}, c = {c}")
    if variant in ("intro", "cor-simple"):
        _require(c >= 2, "c >= 2", f"c = {c}")
        _require((a, b) == (0.0, 1.0), "domain = [0, 1]^d", f"[{a}, {b}]")
        _require((u, v) == (0.0, 1.0), "clip bounds = [0, 1]", f"[{u}, {v}]")
        _require(L <= c, "Lipschitz constant <= c", f"L = {L}, c = {c}")
        _require(beta == c, "beta = c", f"beta = {beta}, c = {c}")
        return
    if variant == "theo-1d":
        _require(inputs.d == 1, "d = 1", f"d = {inputs.d}")
        floor = max(1.0, abs(u), abs(v), abs(a), abs(b), 2 * L)
        _require(c >= floor, "c >= max{1, |u|, |v|, |a|, |b|, 2L}", f"c = {c} < {floor}")
        _require(inputs.depth >= 2, "L >= 2", f"depth = {inputs.depth}")
        A = inputs.resolution
        _require(A is not None and A > 0, "A > 0", f"A = {A}")
        _require(arch_[1] >= A + 2, "l_1 >= A + 2", f"l_1 = {arch_[1]}, A = {A}")
        for i, width in enumerate(arch_[2:-1], start=2):
            _require(width >= 2, "l_i >= 2", f"l_{i} = {width}")
        return
    if variant == "cor-1d":
        _require(inputs.d == 1, "d = 1", f"d = {inputs.d}")
        floor = max(1.0, 2 * abs(u), 2 * abs(v), abs(a), abs(b), 2 * L)
        _require(c >= floor, "c >= max{1, 2|u|, 2|v|, |a|, |b|, 2L}", f"c = {c} < {floor}")
        _require(len(arch_) == 3, "architecture = (1, ell, 1)", f"{arch_}")
        _require(arch_[1] >= 3, "ell >= 3", f"ell = {arch_[1]}")
        return
    floor = max(1.0, 2 * abs(u), 2 * abs(v), abs(a), abs(b), L)
    _require(c >= floor, "c >= max{1, 2|u|, 2|v|, |a|, |b|, L}", f"c = {c} < {floor}")
    if variant == "theo-main":
        A = inputs.resolution
        _require(A is not None and A > 0, "A > 0", f"A = {A}")
        d = inputs.d
        res = Fraction(A)
        if res > 6**d:
            need = ceil_log2(res / (2 * d)) + 2
            _require(inputs.depth >= need, "L >= ceil(log2(A/2d)) + 2", f"depth = {inputs.depth} < {need}")
            _require(arch_[1] >= res, "l_1 >= A", f"l_1 = {arch_[1]}, A = {A}")
            for i in range(2, inputs.depth):
                need_i = 3 * math.ceil(res / (2**i * d))
                _require(arch_[i] >= need_i, "l_i >= 3 ceil(A / (2^i d))", f"l_{i} = {arch_[i]} < {need_i}")


def _terms(inputs: BoundInputs, variant: str) -> tuple[float, float, float]:
    d, depth, w1 = inputs.d, inputs.depth, inputs.max_width + 1
    c, beta, p, M, K = inputs.c, inputs.beta, inputs.p, inputs.M, inputs.K
    spread = inputs.v - inputs.u
    side, L = inputs.b - inputs.a, inputs.lipschitz
    restart_rate = 1.0 / (2 * depth * w1**2)
    if variant == "intro":
        return (
            6 * d * c / _min_shape(inputs, depth) ** (1.0 / d),
            depth * w1**depth * c ** (depth + 1) / K**restart_rate,
            4 * c * depth * w1 * math.log(math.e * M) / M**0.25,
        )
    if variant == "cor-simple":
        return (
            3 * d * c / _min_shape(inputs, depth - 1) ** (1.0 / d),
            depth * w1**depth * c ** (depth + 1) / K**restart_rate,
            4 * math.sqrt(c) * depth * w1 * math.log(math.e * M) / (2 * M) ** 0.25,
        )
    full_optimization = (
        4 * spread * depth * w1**depth * c ** (depth + 1) * max(p, 1.0) / K ** (1.0 / (depth * w1**2))
    )
    full_generalization = (
        10 * max(spread, 1.0) ** 2 * depth * w1**1.5 * max(p, math.log(4 * M * beta * c)) / math.sqrt(M)
    )
    if variant == "theo-1d":
        A = inputs.resolution
        return (L**2 * side**2 / A**2, full_optimization, full_generalization)
    if variant == "theo-main":
        A = inputs.resolution
        return (9 * d**2 * L**2 * side**2 / A ** (2.0 / d), full_optimization, full_generalization)
    if variant == "cor-1d":
        ell = inputs.architecture[1]
        return (
            3 * c**2 / ell,
            4 * c**2 * ell * max(p, 1.0) / K ** (1.0 / (4 * (ell + 1) ** 2)),
            6 * beta * c * ell * max(p, math.log(math.e * M)) / M**0.25,
        )
    if variant == "cor-main":
        return (
            6 * d * c**2 / _min_shape(inputs, depth - 1) ** (1.0 / d),
            2 * math.sqrt(depth * w1**depth * c ** (depth + 2) * max(p, 1.0)) / K**restart_rate,
            4 * c * math.sqrt(beta) * math.sqrt(depth) * w1**0.75 * max(p, math.log(math.e * M)) / M**0.25,
        )
    raise InvalidParameter(f"unknown bound variant {variant!r}")


_NOTES = {
    "theo-1d": ("left side is the p-th moment root of the squared L2 error; not a norm when p < 1",),
    "theo-main": ("left side is the p-th moment root of the squared L2 error; not a norm when p < 1",),
    "cor-1d": ("left side is the p-th moment root of the L2 error; not a norm when p < 1",),
    "cor-main": ("left side is the p-th moment root of the L2 error; not a norm when p < 1",),
    "intro": ("left side is the expected L1 error",),
    "cor-simple": ("left side is the expected L1 error",),
}


def overall_bound(inputs: BoundInputs, variant: str = "intro") -> BoundReport:
    """Evaluate the three-term bound of ``variant`` after checking its hypotheses."""
    check_hypotheses(inputs, variant)
    t1, t2, t3 = _terms(inputs, variant)
    return BoundReport(variant, t1, t2, t3, t1 + t2 + t3, inputs, notes=_NOTES[variant])


def measured_quantity(variant: str) -> tuple[str, bool]:
    """Which error the left side of ``variant`` measures.

    Returns ``(kind, uses_p)`` with ``kind`` one of ``"l1"``, ``"l2"`` and
    ``"squared_l2"``; ``uses_p`` tells whether the per-repetition errors
    enter through their ``p``-th moment.
    """
    if variant in ("intro", "cor-simple"):
        return "l1", False
    if variant in ("theo-1d", "theo-main"):
        return "squared_l2", True
    if variant in ("cor-1d", "cor-main"):
        return "l2", True
    raise InvalidParameter(f"unknown bound variant {variant!r}")


def log_lemma_check(c: float, M: float, beta: float) -> tuple[float, float]:
    """Both sides of ``ln(4 M beta c) <= (3 beta / 2) ln(e M)`` for ``c, M >= 1``, ``beta >= c``."""
    if c < 1 or M < 1:
        raise HypothesisViolation("c, M >= 1", f"c = {c}, M = {M}")
    if beta < c:
        raise HypothesisViolation("beta >= c", f"beta = {beta}, c = {c}")
    return math.log(4 * M * beta * c), 1.5 * beta * math.log(math.e * M)
