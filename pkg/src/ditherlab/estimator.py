"""Scikit-learn style classifier wrapping the training loop.

DitherMLPClassifier is a one-hidden-layer softmax network trained by
non-batch SGD, with the regularization regime (dropout, parallel dither,
or both) selected by a constructor parameter.  It follows the estimator
protocol -- fit/predict/predict_proba/score, get_params/set_params -- so it
composes with pipelines and model selection utilities.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_is_fitted, validate_data

from .network import Activation, apply_activation, init_params, softmax
from .regularize import Regime, REGIME_KINDS
from .rngstreams import stream
from .training import TrainConfig, train_epoch
from .mnist import DataSet


class DitherMLPClassifier(ClassifierMixin, BaseEstimator):
    """One-hidden-layer softmax classifier trained with per-example SGD.

    Parameters
    ----------
    regime : str
        One of "baseline", "dropout", "parallel_dither",
        "parallel_dither_dropout".
    replicas : int
        Parallel replica count used by the dither regimes.
    dither_half_width : float
        Input dither is uniform on [-half_width, +half_width].
    dropout_rate : float
        Probability of dropping a hidden unit (dropout regimes).
    activation : str
        "relu" or "biased_sigmoid".
    beta : float
        Pre-activation bias for the biased sigmoid.
    """

    def __init__(self, hidden_units=100, regime="baseline", replicas=100,
                 dither_half_width=0.5, dropout_rate=0.5, activation="relu",
                 beta=0.0, learning_rate=0.01, epochs=100, shuffle=True,
                 init_std=0.01, random_state=0, n_workers=1):
        self.hidden_units = hidden_units
        self.regime = regime
        self.replicas = replicas
        self.dither_half_width = dither_half_width
        self.dropout_rate = dropout_rate
        self.activation = activation
        self.beta = beta
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.shuffle = shuffle
        self.init_std = init_std
        self.random_state = random_state
        self.n_workers = n_workers

    def _build_regime(self) -> Regime:
        if self.regime not in REGIME_KINDS:
            raise ValueError(f"regime must be one of {REGIME_KINDS}, got {self.regime!r}")
        if self.regime == "baseline":
            return Regime.baseline()
        if self.regime == "dropout":
            return Regime.with_dropout(self.dropout_rate)
        if self.regime == "parallel_dither":
            return Regime.parallel_dither(self.replicas, self.dither_half_width)
        return Regime.parallel_dither_dropout(self.replicas, self.dither_half_width,
                                              self.dropout_rate)

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64)
        self.classes_ = unique_labels(y)
        class_index = {c: i for i, c in enumerate(self.classes_)}
        labels = np.array([class_index[v] for v in y], dtype=np.int64)

        config = TrainConfig(
            regime=self._build_regime(),
            activation=Activation(self.activation, self.beta),
            lr=self.learning_rate,
            epochs=self.epochs,
            train_subset=X.shape[0],
            hidden_units=self.hidden_units,
            init_std=self.init_std,
            init_seed=self.random_state,
            run_seed=self.random_state,
            shuffle=self.shuffle,
            n_workers=self.n_workers,
        )
        sizes = (X.shape[1], self.hidden_units, len(self.classes_))
        params = init_params(stream(self.random_state, "init"), sizes, self.init_std)
        train = DataSet(inputs=X, labels=labels, mean_offset=0.0)
        for epoch in range(self.epochs):
            params = train_epoch(params, config, train, epoch)
        self.params_ = params
        return self

    def _logits(self, X):
        check_is_fitted(self, "params_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        act = Activation(self.activation, self.beta)
        hidden = apply_activation(act, X @ self.params_.w1.T + self.params_.b1)
        return hidden @ self.params_.w2.T + self.params_.b2

    def predict(self, X):
        logits = self._logits(X)
        return self.classes_[logits.argmax(axis=1)]

    def predict_proba(self, X):
        return softmax(self._logits(X))
