"""ReLU demodulation and parallel-dither regularization experiments."""

__version__ = "0.1.0"

from .estimator import DitherMLPClassifier
from .network import Activation, NetworkParams, RELU
from .regularize import DitherSpec, DropoutSpec, Regime, standard_regimes
from .training import ErrorCurve, TrainConfig, evaluate, run_comparison, run_regime

__all__ = [
    "Activation",
    "DitherMLPClassifier",
    "DitherSpec",
    "DropoutSpec",
    "ErrorCurve",
    "NetworkParams",
    "RELU",
    "Regime",
    "TrainConfig",
    "evaluate",
    "run_comparison",
    "run_regime",
    "standard_regimes",
    "__version__",
]
