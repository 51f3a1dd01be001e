"""scikit-learn compatible regressors built on the training and construction modules."""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .constructions import MaxConvSpec, max_convolution_net
from .network import Architecture, ClipBounds, flatten, realize_clipped
from .training import FiniteSource, SampleSet, TrainConfig, select_best, sgd_restarts

__all__ = ["RandomRestartRegressor", "MaxConvolutionRegressor"]


class RandomRestartRegressor(RegressorMixin, BaseEstimator):
    """Clipped ReLU network fitted by SGD from several uniform random starts.

    Every restart draws its parameters uniformly from
    ``[-init_radius, init_radius]`` and takes ``n_steps`` gradient steps on the
    squared loss.  Among the kept iterates whose largest absolute parameter
    is at most ``selection_radius``, the one with the smallest training risk
    is kept.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int, default=(8,)
        Widths of the hidden layers.
    n_restarts : int, default=10
        Number of independent initializations.
    n_steps : int, default=0
        Gradient steps per restart.
    learning_rate : float, default=0.01
        Constant step size.
    batch_size : int or None, default=None
        Samples drawn with replacement per step; ``None`` uses the full
        training set at every step.
    eligible_steps : sequence of int or None, default=None
        Steps whose iterates may be selected; ``None`` means all of them.
    init_radius : float, default=1.0
        Half-width ``c >= 1`` of the initialization cube.
    selection_radius : float or None, default=None
        Largest admissible sup norm ``beta >= c``; ``None`` means ``c``.
    clip_lower, clip_upper : float, default=-inf, +inf
        Output clipping interval.
    random_state : int, default=0
        Master seed.

    Attributes
    ----------
    params_ : ParamVector
        Selected parameters.
    architecture_ : Architecture
    selection_ : SelectionResult
    n_features_in_ : int
    """

    def __init__(
        self,
        hidden_layer_sizes=(8,),
        n_restarts=10,
        n_steps=0,
        learning_rate=0.01,
        batch_size=None,
        eligible_steps=None,
        init_radius=1.0,
        selection_radius=None,
        clip_lower=-math.inf,
        clip_upper=math.inf,
        random_state=0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.n_restarts = n_restarts
        self.n_steps = n_steps
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.eligible_steps = eligible_steps
        self.init_radius = init_radius
        self.selection_radius = selection_radius
        self.clip_lower = clip_lower
        self.clip_upper = clip_upper
        self.random_state = random_state

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64, y_numeric=True)
        self.architecture_ = Architecture((X.shape[1], *self.hidden_layer_sizes, 1))
        bounds = ClipBounds(self.clip_lower, self.clip_upper)
        steps = range(self.n_steps + 1) if self.eligible_steps is None else self.eligible_steps
        config = TrainConfig(
            architecture=self.architecture_,
            n_restarts=self.n_restarts,
            n_steps=self.n_steps,
            eligible_steps=tuple(steps),
            learning_rate=self.learning_rate,
            batch_size=len(y) if self.batch_size is None else self.batch_size,
            init_radius=self.init_radius,
            selection_radius=self.selection_radius,
            bounds=bounds,
            seed=self.random_state,
        )
        samples = SampleSet(X, y)
        source = FiniteSource(samples, replace=True, full_batch=self.batch_size is None)
        self.table_ = sgd_restarts(config, source)
        self.selection_ = select_best(self.table_, config, samples)
        self.params_ = self.selection_.params
        self.bounds_ = bounds
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return np.atleast_1d(realize_clipped(self.params_, self.architecture_, self.bounds_, X))


class MaxConvolutionRegressor(RegressorMixin, BaseEstimator):
    """Lipschitz interpolation of the training data as an explicit ReLU network.

    The prediction is ``max_j (y_j - lipschitz * ||x - X_j||_1)``, clipped to
    ``[clip_lower, clip_upper]``.  When the data come from an
    ``L``-Lipschitz function and ``lipschitz >= L``, it reproduces the training
    labels exactly.

    Parameters
    ----------
    lipschitz : float, default=1.0
        Slope of the cones, measured in the 1-norm.
    clip_lower, clip_upper : float, default=-inf, +inf
        Output clipping interval.

    Attributes
    ----------
    network_ : StructuredNetwork
    params_ : ParamVector
    architecture_ : Architecture
    n_features_in_ : int
    """

    def __init__(self, lipschitz=1.0, clip_lower=-math.inf, clip_upper=math.inf):
        self.lipschitz = lipschitz
        self.clip_lower = clip_lower
        self.clip_upper = clip_upper

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64, y_numeric=True)
        if X.shape[0] < 2:
            raise ValueError(f"MaxConvolutionRegressor needs at least two samples, got n_samples = {X.shape[0]}")
        self.network_ = max_convolution_net(MaxConvSpec(self.lipschitz, X, y))
        self.params_ = flatten(self.network_)
        self.architecture_ = self.params_.architecture
        self.bounds_ = ClipBounds(self.clip_lower, self.clip_upper)
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return np.atleast_1d(realize_clipped(self.params_, self.architecture_, self.bounds_, X))
