"""Independent numerical audits of the backpropagated risk gradient."""

from __future__ import annotations

import numpy as np

from .network import Architecture, ClipBounds
from .training import SampleSet, risk_gradient

__all__ = ["draw_safe_point", "finite_difference_gradient", "gradient_check_report"]

SCHEMA_VERSION = 1


def _forward_margins(theta, architecture: Architecture, X):
    dims = architecture.dims
    s, h, smallest = 0, X, np.inf
    for i in range(1, len(dims)):
        m, n = dims[i], dims[i - 1]
        z = h @ theta[s : s + m * n].reshape(m, n).T + theta[s + m * n : s + m * n + m]
        s += m * n + m
        if i < len(dims) - 1:
            smallest = min(smallest, float(np.abs(z).min()))
            h = np.maximum(z, 0.0)
        else:
            out = z[:, 0]
    return smallest, out


def draw_safe_point(
    rng: np.random.Generator,
    architecture: Architecture,
    bounds: ClipBounds,
    n_samples: int,
    margin: float = 1e-3,
    max_tries: int = 10_000,
):
    """Draw parameters and samples away from every kink of the risk.

    Every hidden pre-activation has magnitude at least ``margin`` and every
    output lies at least ``margin`` inside the clip interval.
    """
    for _ in range(max_tries):
        theta = rng.uniform(-1.0, 1.0, size=architecture.n_params)
        X = rng.uniform(-1.0, 1.0, size=(n_samples, architecture.input_dim))
        smallest, out = _forward_margins(theta, architecture, X)
        if smallest < margin:
            continue
        if np.any(out <= bounds.lower + margin) or np.any(out >= bounds.upper - margin):
            continue
        Y = rng.uniform(bounds.lower, bounds.upper, size=n_samples)
        return theta, SampleSet(X, Y)
    raise RuntimeError("could not find a kink-free point; widen the clip bounds")


def _risk_extended(theta, architecture: Architecture, bounds: ClipBounds, samples) -> np.longdouble:
    """Empirical risk evaluated in extended precision where the platform has it."""
    dims = architecture.dims
    ext = np.longdouble
    h = samples.X.astype(ext)
    s = 0
    for i in range(1, len(dims)):
        m, n = dims[i], dims[i - 1]
        w = theta[s : s + m * n].reshape(m, n)
        b = theta[s + m * n : s + m * n + m]
        s += m * n + m
        h = h @ w.T + b
        if i < len(dims) - 1:
            h = np.maximum(h, ext(0))
    out = np.clip(h[:, 0], ext(bounds.lower), ext(bounds.upper))
    return np.mean((out - samples.Y.astype(ext)) ** 2)


def finite_difference_gradient(theta, architecture, bounds, samples, h: float = 1e-6) -> np.ndarray:
    """Central differences of the empirical risk, one coordinate at a time.

    The risk is evaluated in ``numpy.longdouble`` so that cancellation in the
    difference quotient stays well below the tolerances it is compared with.
    """
    architecture = Architecture(tuple(architecture))
    theta = np.asarray(theta, dtype=np.longdouble)
    grad = np.empty(theta.size)
    step = np.longdouble(h)
    for i in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[i] += step
        down[i] -= step
        grad[i] = float(
            (_risk_extended(up, architecture, bounds, samples)
             - _risk_extended(down, architecture, bounds, samples)) / (2 * step)
        )
    return grad


def gradient_check_report(
    architectures=((1, 4, 1), (2, 5, 1), (2, 8, 1), (1, 3, 3, 1), (2, 8, 8, 1)),
    n_points: int = 100,
    seed: int = 0,
    h: float = 1e-6,
    n_samples: int = 4,
    bounds: ClipBounds = ClipBounds(-3.0, 3.0),
    floor: float = 1e-8,
) -> dict:
    """Compare backpropagation with central differences at random safe points.

    Points are spread round-robin over ``architectures``.  The relative error
    of a component is ``|g - fd| / max(|g|, |fd|)``, taken over components
    whose larger magnitude exceeds ``floor``.
    """
    rng = np.random.default_rng(seed)
    archs = [Architecture(tuple(a)) for a in architectures]
    per_arch = {a.dims: 0.0 for a in archs}
    worst = 0.0
    n_components = 0
    for point in range(n_points):
        architecture = archs[point % len(archs)]
        theta, samples = draw_safe_point(rng, architecture, bounds, n_samples)
        g = risk_gradient(theta, architecture, bounds, samples)
        fd = finite_difference_gradient(theta, architecture, bounds, samples, h)
        scale = np.maximum(np.abs(g), np.abs(fd))
        keep = scale > floor
        rel = np.abs(g - fd)[keep] / scale[keep]
        n_components += int(keep.sum())
        if rel.size:
            worst = max(worst, float(rel.max()))
            per_arch[architecture.dims] = max(per_arch[architecture.dims], float(rel.max()))
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "gradient_check",
        "seed": seed,
        "n_points": n_points,
        "step": h,
        "n_components": n_components,
        "max_relative_error": worst,
        "per_architecture": [
            {"architecture": list(dims), "max_relative_error": err} for dims, err in per_arch.items()
        ],
    }
