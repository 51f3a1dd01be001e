"""ReLU network calculus, explicit approximating networks and SGD training with restarts.

The package is organised bottom-up:

* :mod:`reluapprox.network` holds structured and flat networks and their evaluation,
* :mod:`reluapprox.algebra` composes and stacks networks,
* :mod:`reluapprox.constructions` builds the 1-norm, maximum, maximum-convolution
  and interpolation networks,
* :mod:`reluapprox.approximation` turns Lipschitz targets into approximating networks,
* :mod:`reluapprox.training` covers empirical risk, gradients, restarts and selection,
* :mod:`reluapprox.bounds` and :mod:`reluapprox.experiment` evaluate error bounds
  and compare them with measured errors.
"""

from .algebra import affine_net, compose, concat_net, identity_net, parallelize, sum_net
from .approximation import (
    ApproxReport,
    HypercubeDomain,
    TargetOracle,
    approx_bound,
    approximate,
    build_approximator,
    build_interp1d_approximator,
    covering_grid,
    eps_architecture,
    sup_error_estimate,
)
from .bounds import BoundInputs, BoundReport, generalization_bound, optimization_bound, overall_bound
from .constructions import (
    Interp1dSpec,
    MaxConvSpec,
    interp1d_net,
    l1_norm_net,
    max_convolution_net,
    max_net,
)
from .errors import HypothesisViolation, ReluApproxError
from .estimators import MaxConvolutionRegressor, RandomRestartRegressor
from .experiment import ExperimentConfig, run_experiment
from .network import (
    IDENTITY,
    RECTIFIER,
    Activation,
    Architecture,
    ClipBounds,
    Layer,
    ParamVector,
    StructuredNetwork,
    activation_apply,
    affine_eval,
    arch,
    embed,
    flatten,
    norm,
    realize,
    realize_clipped,
    unflatten,
)
from .targets import make_target
from .training import (
    SampleSet,
    TrainConfig,
    empirical_risk,
    l2_error_estimate,
    mc_identity_check,
    risk_gradient,
    select_best,
    sgd_restarts,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
