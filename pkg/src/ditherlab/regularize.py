"""Dither vectors, dropout masks and the replica-averaged per-example gradient.

A regime bundles the two knobs: how many replicas of each training example
are made, how wide the input dither is, and whether dropout is applied.
Each replica draws from its own named random stream, so the averaged
gradient is bit-reproducible no matter how many workers evaluate replicas.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .network import Activation, Gradients, NetworkParams, backward, forward
from .rngstreams import stream

REGIME_KINDS = ("baseline", "dropout", "parallel_dither", "parallel_dither_dropout")

# "unit scale" uniform dither read as peak-to-peak width 1: [-0.5, +0.5]
DEFAULT_HALF_WIDTH = 0.5
DEFAULT_REPLICAS = 100
DEFAULT_DROPOUT = 0.5


class RateOutOfRangeError(ValueError):
    pass


@dataclass(frozen=True)
class DitherSpec:
    half_width: float = 0.0  # uniform on [-half_width, +half_width]
    replicas: int = 1

    def __post_init__(self):
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if not (np.isfinite(self.half_width) and self.half_width >= 0):
            raise ValueError("half_width must be finite and >= 0")


@dataclass(frozen=True)
class DropoutSpec:
    rate: float = 0.0  # probability a hidden unit is dropped

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise RateOutOfRangeError(f"dropout rate {self.rate} not in [0, 1)")


@dataclass(frozen=True)
class Regime:
    kind: str
    dither: DitherSpec = field(default_factory=DitherSpec)
    dropout: DropoutSpec = field(default_factory=DropoutSpec)

    def __post_init__(self):
        if self.kind not in REGIME_KINDS:
            raise ValueError(f"unknown regime kind {self.kind!r}")
        if self.kind == "baseline":
            if self.dither.replicas != 1 or self.dither.half_width != 0 or self.dropout.rate != 0:
                raise ValueError("baseline regime must have 1 replica, no dither, no dropout")
        elif self.kind == "dropout":
            if self.dither.replicas != 1 or self.dropout.rate <= 0:
                raise ValueError("dropout regime must have 1 replica and rate > 0")
        elif self.dither.replicas <= 1:
            raise ValueError(f"{self.kind} regime needs more than one replica")

    @property
    def uses_dropout(self) -> bool:
        return self.kind in ("dropout", "parallel_dither_dropout")

    @staticmethod
    def baseline() -> "Regime":
        return Regime("baseline")

    @staticmethod
    def with_dropout(rate: float = DEFAULT_DROPOUT) -> "Regime":
        return Regime("dropout", dropout=DropoutSpec(rate))

    @staticmethod
    def parallel_dither(replicas: int = DEFAULT_REPLICAS,
                        half_width: float = DEFAULT_HALF_WIDTH) -> "Regime":
        return Regime("parallel_dither", dither=DitherSpec(half_width, replicas))

    @staticmethod
    def parallel_dither_dropout(replicas: int = DEFAULT_REPLICAS,
                                half_width: float = DEFAULT_HALF_WIDTH,
                                rate: float = DEFAULT_DROPOUT) -> "Regime":
        return Regime("parallel_dither_dropout",
                      dither=DitherSpec(half_width, replicas), dropout=DropoutSpec(rate))


def standard_regimes(replicas: int = DEFAULT_REPLICAS,
                     half_width: float = DEFAULT_HALF_WIDTH,
                     rate: float = DEFAULT_DROPOUT):
    """The four regimes compared in the training experiment."""
    return [
        Regime.baseline(),
        Regime.with_dropout(rate),
        Regime.parallel_dither(replicas, half_width),
        Regime.parallel_dither_dropout(replicas, half_width, rate),
    ]


def draw_dither(rng: np.random.Generator, half_width: float, n: int) -> np.ndarray:
    if half_width < 0:
        raise ValueError("half_width must be >= 0")
    if half_width == 0:
        return np.zeros(n)
    return rng.uniform(-half_width, half_width, n)


def draw_dropout_mask(rng: np.random.Generator, rate: float, n: int) -> np.ndarray:
    """Inverted-scaling mask: 0 with probability rate, else 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise RateOutOfRangeError(f"dropout rate {rate} not in [0, 1)")
    keep = rng.random(n) >= rate
    return keep.astype(np.float64) / (1.0 - rate)


@dataclass(frozen=True)
class StreamFamily:
    """Addresses the per-replica random streams of one training example."""

    seed: int
    epoch: int = 0
    example: int = 0

    def dither_rng(self, replica: int) -> np.random.Generator:
        return stream(self.seed, "dither", self.epoch, self.example, replica)

    def dropout_rng(self, replica: int) -> np.random.Generator:
        return stream(self.seed, "dropout", self.epoch, self.example, replica)


def _replica_gradient(params, act, x, label, regime, streams, replica):
    hw = regime.dither.half_width
    xr = x if hw == 0 else x + draw_dither(streams.dither_rng(replica), hw, x.shape[0])
    mask = None
    if regime.uses_dropout:
        mask = draw_dropout_mask(streams.dropout_rng(replica), regime.dropout.rate,
                                 params.sizes[1])
    trace = forward(params, act, xr, mask)
    return backward(params, act, trace, label, mask)


def parallel_gradient(params: NetworkParams, act: Activation, sample, regime: Regime,
                      streams: StreamFamily, n_workers: int = 1) -> Gradients:
    """Replica-averaged gradient for one training example.

    Each replica adds its own input dither and (if the regime says so) draws
    its own dropout mask, then computes an exact per-replica gradient.  The
    replica gradients are summed in ascending replica order -- a fixed
    reduction order, so the result is identical whether replicas were
    evaluated serially or by a worker pool -- and divided by the replica
    count.  Dither touches only the input vector, never parameters or labels.
    """
    x, label = sample
    r_count = regime.dither.replicas
    if regime.dither.half_width == 0 and not regime.uses_dropout:
        # all replicas are identical; return one of them (bit-identical to a
        # plain backward pass, which averaging-then-dividing would not be)
        return _replica_gradient(params, act, x, label, regime, streams, 0)

    if n_workers > 1 and r_count > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            grads = pool.map(
                lambda r: _replica_gradient(params, act, x, label, regime, streams, r),
                range(r_count))
            acc = _reduce_in_order(grads)
    else:
        acc = _reduce_in_order(
            _replica_gradient(params, act, x, label, regime, streams, r)
            for r in range(r_count))

    if r_count == 1:
        return acc
    inv = 1.0 / r_count
    return Gradients(acc.w1 * inv, acc.b1 * inv, acc.w2 * inv, acc.b2 * inv)


def _reduce_in_order(grads) -> Gradients:
    it = iter(grads)
    first = next(it)
    acc = first.copy()
    for g in it:
        acc.w1 += g.w1
        acc.b1 += g.b1
        acc.w2 += g.w2
        acc.b2 += g.b2
    return acc
