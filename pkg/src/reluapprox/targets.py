"""Built-in target functions with exactly known Lipschitz constants and ranges.

Lipschitz constants are with respect to the 1-norm on the input.
"""

from __future__ import annotations

import numpy as np

from .approximation import HypercubeDomain, TargetOracle
from .errors import InvalidParameter

__all__ = ["TARGET_FAMILIES", "make_target"]

TARGET_FAMILIES = ("abs-dist", "l1-norm", "sin-ridge", "constant")
_ALIASES = {"ridge-sin": "sin-ridge"}


def _abs_interval(a: float, b: float) -> tuple[float, float]:
    """Range of ``|t|`` for ``t`` in ``[a, b]``."""
    low = 0.0 if a <= 0.0 <= b else min(abs(a), abs(b))
    return low, max(abs(a), abs(b))


def make_target(name: str, domain: HypercubeDomain, **params) -> TargetOracle:
    """Build a target on ``domain`` from a family name.

    Families and their parameters:

    ``abs-dist``
        ``scale * ||x - center||_1``; ``center`` defaults to the midpoint of
        the cube (scalar or vector), ``scale`` to 1.
    ``l1-norm``
        ``||x||_1``.
    ``sin-ridge`` (alias ``ridge-sin``)
        ``sin(frequency * sum(x)) / frequency`` with ``frequency`` default 3.
    ``constant``
        ``value`` everywhere, default 0.5.
    """
    name = _ALIASES.get(name, name)
    d = domain.d
    if name == "abs-dist":
        scale = float(params.pop("scale", 1.0))
        center = np.broadcast_to(
            np.asarray(params.pop("center", 0.5 * (domain.a + domain.b)), dtype=np.float64), (d,)
        ).copy()
        _no_extra(name, params)
        if scale < 0:
            raise InvalidParameter("scale must be nonnegative")
        upper = scale * float(sum(max(abs(domain.a - m), abs(domain.b - m)) for m in center))
        lower = scale * float(sum(_abs_interval(domain.a - m, domain.b - m)[0] for m in center))
        return TargetOracle(
            lambda x: scale * np.abs(x - center).sum(axis=1), scale, lower, upper, name
        )
    if name == "l1-norm":
        _no_extra(name, params)
        low, high = _abs_interval(domain.a, domain.b)
        return TargetOracle(lambda x: np.abs(x).sum(axis=1), 1.0, d * low, d * high, name)
    if name == "sin-ridge":
        freq = float(params.pop("frequency", 3.0))
        _no_extra(name, params)
        if not freq > 0:
            raise InvalidParameter("frequency must be positive")
        return TargetOracle(
            lambda x: np.sin(freq * x.sum(axis=1)) / freq, 1.0, -1.0 / freq, 1.0 / freq, name
        )
    if name == "constant":
        value = float(params.pop("value", 0.5))
        _no_extra(name, params)
        return TargetOracle(lambda x: np.full(x.shape[0], value), 0.0, value, value, name)
    raise InvalidParameter(f"unknown target family {name!r}; choose from {TARGET_FAMILIES}")


def _no_extra(name: str, params: dict) -> None:
    if params:
        raise InvalidParameter(f"unexpected parameters for {name}: {sorted(params)}")
