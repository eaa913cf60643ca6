"""Two-layer dense network with softmax output and exact backpropagation.

The default experiment shape is 784x100x10, but everything here works for
arbitrary (d_in, d_hidden, d_out).  All arithmetic is float64 so that the
finite-difference gradient checker has meaningful tolerances.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PROB_FLOOR = 1e-300  # clamp for log() in the cross-entropy


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class Activation:
    """Hidden-layer nonlinearity.

    kind "relu" is max(0, x).  kind "biased_sigmoid" is a logistic function
    with a fixed bias beta added to the pre-activation, 1/(1+exp(-(x+beta))),
    so it can be operated asymmetrically; beta has no endorsed default.
    """

    kind: str = "relu"
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("relu", "biased_sigmoid"):
            raise ValueError(f"unknown activation kind {self.kind!r}")
        if not np.isfinite(self.beta):
            raise ValueError("beta must be finite")


RELU = Activation("relu")


@dataclass
class NetworkParams:
    w1: np.ndarray  # (d_hidden, d_in)
    b1: np.ndarray  # (d_hidden,)
    w2: np.ndarray  # (d_out, d_hidden)
    b2: np.ndarray  # (d_out,)

    @property
    def sizes(self):
        return self.w1.shape[1], self.w1.shape[0], self.w2.shape[0]

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())

    def arrays(self):
        return self.w1, self.b1, self.w2, self.b2


# Gradients carry one entry per parameter, so they share the container.
Gradients = NetworkParams


@dataclass(frozen=True)
class ForwardTrace:
    input: np.ndarray
    hidden_pre: np.ndarray
    hidden_post: np.ndarray  # after activation and any dropout mask
    probs: np.ndarray


def init_params(rng: np.random.Generator, sizes=(784, 100, 10), std: float = 0.01) -> NetworkParams:
    """Gaussian(0, std) weights, zero biases, drawn from the given stream."""
    d_in, d_hidden, d_out = sizes
    w1 = rng.normal(0.0, std, (d_hidden, d_in))
    w2 = rng.normal(0.0, std, (d_out, d_hidden))
    return NetworkParams(w1, np.zeros(d_hidden), w2, np.zeros(d_out))


def apply_activation(act: Activation, pre: np.ndarray) -> np.ndarray:
    if act.kind == "relu":
        return np.maximum(0.0, pre)
    return 1.0 / (1.0 + np.exp(-(pre + act.beta)))


def activation_grad(act: Activation, pre: np.ndarray, post: np.ndarray) -> np.ndarray:
    # ReLU derivative at exactly 0 taken as 0 (the unit is inactive there).
    if act.kind == "relu":
        return (pre > 0).astype(np.float64)
    return post * (1.0 - post)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(params: NetworkParams, act: Activation, x: np.ndarray,
            mask: np.ndarray | None = None) -> ForwardTrace:
    """Single-example forward pass; mask is an (already scaled) dropout mask."""
    d_in, d_hidden, _ = params.sizes
    if x.shape != (d_in,):
        raise ShapeError(f"input shape {x.shape}, expected ({d_in},)")
    if mask is not None and mask.shape != (d_hidden,):
        raise ShapeError(f"mask shape {mask.shape}, expected ({d_hidden},)")
    hidden_pre = params.w1 @ x + params.b1
    hidden_post = apply_activation(act, hidden_pre)
    if mask is not None:
        hidden_post = hidden_post * mask
    probs = softmax(params.w2 @ hidden_post + params.b2)
    return ForwardTrace(input=x, hidden_pre=hidden_pre, hidden_post=hidden_post, probs=probs)


def cross_entropy(probs: np.ndarray, label: int) -> float:
    return float(-np.log(max(probs[label], PROB_FLOOR)))


def backward(params: NetworkParams, act: Activation, trace: ForwardTrace, label: int,
             mask: np.ndarray | None = None) -> Gradients:
    """Exact gradient of cross_entropy(forward(...)) w.r.t. every parameter."""
    d_out = params.sizes[2]
    if not 0 <= label < d_out:
        raise ShapeError(f"label {label} out of range for {d_out} classes")
    delta2 = trace.probs.copy()
    delta2[label] -= 1.0
    gw2 = np.outer(delta2, trace.hidden_post)
    gb2 = delta2
    dhidden = params.w2.T @ delta2
    if mask is not None:
        dhidden = dhidden * mask
    delta1 = dhidden * activation_grad(act, trace.hidden_pre, trace.hidden_post)
    gw1 = np.outer(delta1, trace.input)
    gb1 = delta1
    return Gradients(gw1, gb1, gw2, gb2)


def sgd_step(params: NetworkParams, grads: Gradients, lr: float) -> NetworkParams:
    """Plain SGD: params - lr * grads.  No momentum, no decay."""
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    return NetworkParams(
        params.w1 - lr * grads.w1,
        params.b1 - lr * grads.b1,
        params.w2 - lr * grads.w2,
        params.b2 - lr * grads.b2,
    )


def example_loss(params: NetworkParams, act: Activation, x: np.ndarray, label: int,
                 mask: np.ndarray | None = None) -> float:
    return cross_entropy(forward(params, act, x, mask).probs, label)


# relative error denominators below this are floored, so near-zero gradient
# entries are effectively compared absolutely at the same tolerance scale
GRAD_CHECK_FLOOR = 1e-4


def grad_check(params: NetworkParams, act: Activation, sample, h: float = 1e-5) -> float:
    """Worst relative error of backward() against central finite differences.

    Checks every parameter.  For ReLU, parameters whose perturbation can move
    a hidden pre-activation across the kink at 0 are excluded (the analytic
    one-sided derivative and the two-sided difference legitimately disagree
    there).
    """
    if h <= 0:
        raise ValueError("h must be positive")
    x, label = sample
    trace = forward(params, act, x)
    analytic = backward(params, act, trace, label)

    worst = 0.0
    p = params.copy()
    for arr, grad in zip(p.arrays(), analytic.arrays()):
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for k in range(flat.size):
            if act.kind == "relu" and arr is p.w1:
                i, j = divmod(k, p.w1.shape[1])
                if abs(trace.hidden_pre[i]) <= h * (1.0 + abs(x[j])):
                    continue
            elif act.kind == "relu" and arr is p.b1:
                if abs(trace.hidden_pre[k]) <= 2.0 * h:
                    continue
            orig = flat[k]
            flat[k] = orig + h
            lp = example_loss(p, act, x, label)
            flat[k] = orig - h
            lm = example_loss(p, act, x, label)
            flat[k] = orig
            numeric = (lp - lm) / (2.0 * h)
            denom = max(abs(gflat[k]), abs(numeric), GRAD_CHECK_FLOOR)
            worst = max(worst, abs(gflat[k] - numeric) / denom)
    return worst


# --- checkpoint format -----------------------------------------------------
# binary: magic b"DLNP", three big-endian uint32 (d_in, d_hidden, d_out),
# then w1, b1, w2, b2 as row-major float64.

_CKPT_MAGIC = b"DLNP"


def save_params(params: NetworkParams, path) -> None:
    d_in, d_hidden, d_out = params.sizes
    with open(path, "wb") as f:
        f.write(_CKPT_MAGIC)
        f.write(struct.pack(">III", d_in, d_hidden, d_out))
        for arr in params.arrays():
            f.write(np.ascontiguousarray(arr, dtype=np.float64).tobytes())


def load_params(path) -> NetworkParams:
    raw = Path(path).read_bytes()
    if raw[:4] != _CKPT_MAGIC:
        raise ValueError(f"{path}: not a ditherlab checkpoint")
    d_in, d_hidden, d_out = struct.unpack(">III", raw[4:16])
    shapes = [(d_hidden, d_in), (d_hidden,), (d_out, d_hidden), (d_out,)]
    arrays = []
    offset = 16
    for shape in shapes:
        n = int(np.prod(shape))
        arrays.append(np.frombuffer(raw, dtype=np.float64, count=n, offset=offset).reshape(shape).copy())
        offset += n * 8
    if offset != len(raw):
        raise ValueError(f"{path}: checkpoint payload length mismatch")
    return NetworkParams(*arrays)
