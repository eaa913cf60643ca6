"""Shared fixtures: IDX byte builders, a synthetic digit-like dataset, and
independent gradient oracles used to cross-check the library code paths."""

import gzip
import os
import struct
from pathlib import Path

import numpy as np
import pytest

from ditherlab.mnist import DataSet
from ditherlab.network import NetworkParams, example_loss

MNIST_ENV = "DITHERLAB_MNIST_DIR"
MNIST_FILES = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte",
               "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")


def mnist_dir():
    d = os.environ.get(MNIST_ENV)
    if not d:
        return None
    d = Path(d)
    for stem in MNIST_FILES:
        if not ((d / stem).exists() or (d / (stem + ".gz")).exists()):
            return None
    return d


requires_mnist = pytest.mark.skipif(
    mnist_dir() is None,
    reason=f"real MNIST IDX files not available (set {MNIST_ENV}); "
           "this offline environment has no way to fetch them")


def idx_image_bytes(pixels: np.ndarray) -> bytes:
    count, rows, cols = pixels.shape
    return struct.pack(">IIII", 2051, count, rows, cols) + pixels.astype(np.uint8).tobytes()


def idx_label_bytes(labels: np.ndarray) -> bytes:
    return struct.pack(">II", 2049, len(labels)) + np.asarray(labels, np.uint8).tobytes()


def synthetic_digits(n: int, seed: int = 7):
    """Digit-like images: ten fixed 28x28 blob templates plus pixel noise."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:28, 0:28]
    templates = []
    for c in range(10):
        cy, cx = rng.uniform(8, 20, 2)
        sy, sx = rng.uniform(2.5, 6, 2)
        blob = 220 * np.exp(-(((yy - cy) / sy) ** 2 + ((xx - cx) / sx) ** 2))
        blob += 120 * np.exp(-(((yy - cx) / sx) ** 2 + ((xx - cy) / sy) ** 2))
        templates.append(blob)
    labels = rng.integers(0, 10, n)
    noise = rng.normal(0, 60, (n, 28, 28))
    images = np.clip(np.stack([templates[c] for c in labels]) + noise, 0, 255)
    return images.astype(np.uint8), labels.astype(np.uint8)


def write_synthetic_mnist(directory: Path, n_train: int = 512, n_test: int = 512,
                          compress: bool = False):
    """Write the four standard IDX files with synthetic digit data."""
    directory.mkdir(parents=True, exist_ok=True)
    tr_img, tr_lab = synthetic_digits(n_train, seed=7)
    te_img, te_lab = synthetic_digits(n_test, seed=8)
    payloads = {
        "train-images-idx3-ubyte": idx_image_bytes(tr_img),
        "train-labels-idx1-ubyte": idx_label_bytes(tr_lab),
        "t10k-images-idx3-ubyte": idx_image_bytes(te_img),
        "t10k-labels-idx1-ubyte": idx_label_bytes(te_lab),
    }
    for stem, data in payloads.items():
        if compress:
            (directory / (stem + ".gz")).write_bytes(gzip.compress(data))
        else:
            (directory / stem).write_bytes(data)
    return directory


@pytest.fixture(scope="session")
def synthetic_mnist_dir(tmp_path_factory):
    return write_synthetic_mnist(tmp_path_factory.mktemp("idx"))


def toy_params(sizes=(10, 5, 3), seed=11, scale=0.5) -> NetworkParams:
    rng = np.random.default_rng(seed)
    d_in, d_hidden, d_out = sizes
    return NetworkParams(
        rng.normal(0, scale, (d_hidden, d_in)),
        rng.normal(0, scale, d_hidden),
        rng.normal(0, scale, (d_out, d_hidden)),
        rng.normal(0, scale, d_out),
    )


def toy_dataset(n=40, sizes=(10, 5, 3), seed=5, centers_seed=None) -> DataSet:
    """Gaussian blobs; pass the same centers_seed to draw train/test splits
    from one distribution."""
    rng = np.random.default_rng(seed)
    d_in, _, d_out = sizes
    centers_rng = rng if centers_seed is None else np.random.default_rng(centers_seed)
    centers = centers_rng.normal(0, 1.5, (d_out, d_in))
    labels = rng.integers(0, d_out, n)
    inputs = centers[labels] + rng.normal(0, 0.8, (n, d_in))
    return DataSet(inputs=inputs, labels=labels.astype(np.int64), mean_offset=0.0)


def finite_difference_gradients(params, act, x, label, h=1e-5) -> NetworkParams:
    """Central-difference gradient over every parameter (independent oracle)."""
    p = params.copy()
    grads = NetworkParams(*(np.zeros_like(a) for a in p.arrays()))
    for arr, out in zip(p.arrays(), grads.arrays()):
        flat, oflat = arr.reshape(-1), out.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            lp = example_loss(p, act, x, label)
            flat[k] = orig - h
            lm = example_loss(p, act, x, label)
            flat[k] = orig
            oflat[k] = (lp - lm) / (2 * h)
    return grads
