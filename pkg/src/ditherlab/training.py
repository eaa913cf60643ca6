"""Non-batch SGD training loop and the four-regime comparison.

One "epoch" is a full sweep over the training subset with an immediate
parameter update after every example (batch size 1).  Replica averaging
happens inside a single example's gradient, never across examples.
Test-time evaluation always runs the plain network: no dither, no dropout.
"""

from dataclasses import dataclass, replace

import numpy as np

from .mnist import DataSet
from .network import (RELU, Activation, NetworkParams, apply_activation,
                      init_params, sgd_step)
from .regularize import Regime, StreamFamily, parallel_gradient, standard_regimes
from .rngstreams import stream


class EmptyTestSetError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    regime: Regime
    activation: Activation = RELU
    lr: float = 0.01
    epochs: int = 100
    train_subset: int = 256
    hidden_units: int = 100
    init_std: float = 0.01
    init_seed: int = 0
    run_seed: int = 0
    shuffle: bool = True
    n_workers: int = 1

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.train_subset < 1:
            raise ValueError("train_subset must be >= 1")


@dataclass(frozen=True)
class ErrorCurve:
    """Test error before training (index 0) and after each sweep (index k)."""

    label: str
    errors: np.ndarray  # shape (epochs + 1,), values in [0, 1]

    @property
    def final(self) -> float:
        return float(self.errors[-1])


def visit_order(config: TrainConfig, n: int, epoch_index: int) -> np.ndarray:
    """Example visit order for one epoch: a seeded permutation, or file order.

    The permutation depends only on (run_seed, epoch), so regimes sharing a
    run_seed see identical per-epoch example orders.
    """
    if not config.shuffle:
        return np.arange(n)
    return stream(config.run_seed, "shuffle", epoch_index).permutation(n)


def train_epoch(params: NetworkParams, config: TrainConfig, train: DataSet,
                epoch_index: int) -> NetworkParams:
    """One full sweep of non-batch SGD; returns the updated parameters."""
    n = len(train)
    for i in visit_order(config, n, epoch_index):
        streams = StreamFamily(config.run_seed, epoch=epoch_index, example=int(i))
        sample = (train.inputs[i], int(train.labels[i]))
        grads = parallel_gradient(params, config.activation, sample, config.regime,
                                  streams, n_workers=config.n_workers)
        params = sgd_step(params, grads, config.lr)
    return params


def evaluate(params: NetworkParams, act: Activation, test: DataSet) -> float:
    """Fraction of test examples misclassified by the plain network.

    Pure and deterministic: no dropout, no dither, argmax ties broken toward
    the lowest class index.
    """
    if len(test) == 0:
        raise EmptyTestSetError("cannot evaluate on an empty test set")
    hidden = apply_activation(act, test.inputs @ params.w1.T + params.b1)
    logits = hidden @ params.w2.T + params.b2
    predicted = logits.argmax(axis=1)
    return float(np.mean(predicted != test.labels))


def run_regime(config: TrainConfig, train: DataSet, test: DataSet,
               initial: NetworkParams | None = None) -> ErrorCurve:
    """Train one regime end-to-end, recording test error at epoch 0..epochs."""
    if len(train) != config.train_subset:
        raise ValueError(f"train set has {len(train)} examples, config says {config.train_subset}")
    if initial is None:
        sizes = (train.inputs.shape[1], config.hidden_units, int(test.labels.max()) + 1)
        params = init_params(stream(config.init_seed, "init"), sizes, config.init_std)
    else:
        params = initial.copy()
    errors = np.empty(config.epochs + 1)
    errors[0] = evaluate(params, config.activation, test)
    for epoch in range(config.epochs):
        params = train_epoch(params, config, train, epoch)
        errors[epoch + 1] = evaluate(params, config.activation, test)
    return ErrorCurve(label=config.regime.kind, errors=errors)


def run_comparison(base_config: TrainConfig, train: DataSet, test: DataSet,
                   regimes=None) -> list[ErrorCurve]:
    """Run the four standard regimes from shared starting weights.

    All runs use the same init_seed (identical initial parameters) and the
    same run_seed (identical per-epoch example orders), so curves differ only
    through the regimes themselves.
    """
    if regimes is None:
        heavy = base_config.regime.dither
        regimes = standard_regimes(
            replicas=heavy.replicas if heavy.replicas > 1 else 100,
            half_width=heavy.half_width if heavy.half_width > 0 else 0.5,
            rate=base_config.regime.dropout.rate or 0.5)
    return [run_regime(replace(base_config, regime=r), train, test) for r in regimes]
