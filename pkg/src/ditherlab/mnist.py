"""IDX-format MNIST loading, normalization and subset selection.

The IDX container is the standard MNIST distribution format: a big-endian
magic number (2051 for images, 2049 for labels), big-endian 32-bit
dimensions, then the raw payload bytes.  Files may optionally be
gzip-compressed on disk.
"""

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049

TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"


class IdxError(ValueError):
    """Malformed IDX data."""


class BadMagicError(IdxError):
    pass


class TruncatedPayloadError(IdxError):
    pass


class LabelOutOfRangeError(IdxError):
    pass


class SubsetTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class RawImageSet:
    count: int
    rows: int
    cols: int
    pixels: np.ndarray  # uint8, shape (count, rows, cols)


@dataclass(frozen=True)
class LabelSet:
    count: int
    labels: np.ndarray  # int64, values in [0, 9]


@dataclass(frozen=True)
class DataSet:
    """Unpacked, normalized examples ready for the network.

    mean_offset records the scalar (or per-pixel vector) subtracted during
    normalization, so a second set can be normalized with the same
    statistics.
    """

    inputs: np.ndarray  # float64, shape (n, rows*cols)
    labels: np.ndarray  # int64, shape (n,)
    mean_offset: float | np.ndarray

    def __len__(self) -> int:
        return len(self.labels)


def load_idx_images(data: bytes) -> RawImageSet:
    if len(data) < 4:
        raise TruncatedPayloadError(f"image header needs 16 bytes, got {len(data)}")
    magic = struct.unpack(">I", data[:4])[0]
    if magic != IMAGE_MAGIC:
        raise BadMagicError(f"expected image magic {IMAGE_MAGIC}, got {magic}")
    if len(data) < 16:
        raise TruncatedPayloadError(f"image header needs 16 bytes, got {len(data)}")
    count, rows, cols = struct.unpack(">III", data[4:16])
    expected = count * rows * cols
    payload = data[16:]
    if len(payload) != expected:
        raise TruncatedPayloadError(
            f"expected {expected} pixel bytes for {count}x{rows}x{cols}, got {len(payload)}"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(count, rows, cols)
    return RawImageSet(count=count, rows=rows, cols=cols, pixels=pixels)


def load_idx_labels(data: bytes) -> LabelSet:
    if len(data) < 4:
        raise TruncatedPayloadError(f"label header needs 8 bytes, got {len(data)}")
    magic = struct.unpack(">I", data[:4])[0]
    if magic != LABEL_MAGIC:
        raise BadMagicError(f"expected label magic {LABEL_MAGIC}, got {magic}")
    if len(data) < 8:
        raise TruncatedPayloadError(f"label header needs 8 bytes, got {len(data)}")
    count = struct.unpack(">I", data[4:8])[0]
    payload = data[8:]
    if len(payload) != count:
        raise TruncatedPayloadError(f"expected {count} label bytes, got {len(payload)}")
    labels = np.frombuffer(payload, dtype=np.uint8).astype(np.int64)
    if labels.size and labels.max() > 9:
        raise LabelOutOfRangeError(f"label {labels.max()} out of range [0, 9]")
    return LabelSet(count=count, labels=labels)


def read_idx_file(path) -> bytes:
    """Read an IDX file, transparently decompressing gzip."""
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def pack_idx_images(images: RawImageSet) -> bytes:
    header = struct.pack(">IIII", IMAGE_MAGIC, images.count, images.rows, images.cols)
    return header + images.pixels.tobytes()


def pack_idx_labels(labels: LabelSet) -> bytes:
    header = struct.pack(">II", LABEL_MAGIC, labels.count)
    return header + labels.labels.astype(np.uint8).tobytes()


def normalize(raw: RawImageSet, labels: LabelSet, mean_offset=None, per_pixel: bool = False) -> DataSet:
    """Unpack images to flat vectors, scale to [0, 1] and subtract a mean.

    Pixels are scaled by 1/255 first.  The subtracted mean is either the
    supplied ``mean_offset`` (e.g. taken from a training DataSet) or
    computed over this set: one global scalar by default, a per-pixel
    vector when ``per_pixel`` is set.
    """
    if labels.count != raw.count:
        raise IdxError(f"label count {labels.count} != image count {raw.count}")
    x = raw.pixels.reshape(raw.count, raw.rows * raw.cols).astype(np.float64) / 255.0
    if mean_offset is None:
        mean_offset = x.mean(axis=0) if per_pixel else float(x.mean())
    x = x - mean_offset
    return DataSet(inputs=x, labels=labels.labels.copy(), mean_offset=mean_offset)


def take_subset(data: DataSet, n: int) -> DataSet:
    """First n examples in file order."""
    if n > len(data):
        raise SubsetTooLargeError(f"requested {n} of {len(data)} examples")
    return DataSet(inputs=data.inputs[:n], labels=data.labels[:n], mean_offset=data.mean_offset)


def _find_file(directory: Path, stem: str) -> Path:
    for name in (stem, stem + ".gz"):
        p = directory / name
        if p.exists():
            return p
    raise FileNotFoundError(f"missing MNIST file {stem}[.gz] in {directory}")


def load_mnist(directory, train_subset: int = 256, stats_from_subset: bool = True):
    """Load the four standard IDX files and return (train, test) DataSets.

    The training set is cut to its first ``train_subset`` examples; the test
    set is normalized with the training statistics.  By default the mean is
    computed over the training subset (the only data the model sees); set
    ``stats_from_subset=False`` to use the full 60k training set instead.
    """
    directory = Path(directory)

    def parse(loader, stem):
        path = _find_file(directory, stem)
        try:
            return loader(read_idx_file(path))
        except IdxError as e:
            raise type(e)(f"{path}: {e}") from e

    train_raw = parse(load_idx_images, TRAIN_IMAGES)
    train_lab = parse(load_idx_labels, TRAIN_LABELS)
    test_raw = parse(load_idx_images, TEST_IMAGES)
    test_lab = parse(load_idx_labels, TEST_LABELS)

    if stats_from_subset:
        if train_subset > train_raw.count:
            raise SubsetTooLargeError(f"requested {train_subset} of {train_raw.count} examples")
        sub_raw = RawImageSet(train_subset, train_raw.rows, train_raw.cols,
                              train_raw.pixels[:train_subset])
        sub_lab = LabelSet(train_subset, train_lab.labels[:train_subset])
        train = normalize(sub_raw, sub_lab)
    else:
        train = take_subset(normalize(train_raw, train_lab), train_subset)
    test = normalize(test_raw, test_lab, mean_offset=train.mean_offset)
    return train, test
