"""
Dataset ingestion: IDX image/label files (MNIST, Fashion-MNIST, Kuzushiji-MNIST),
synthetic Gaussian blobs, one-hot encoding and train/test splitting.
"""

import gzip
import logging
import os
import struct
from typing import BinaryIO, List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import (
    ConsistencyException,
    DatasetNotFoundException,
    FormatException,
    LengthException,
    ParameterException,
    ValidationException,
)
from dataio.schemas import Dataset
from tensor.schemas import RngState

logger = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
IDX_CLASSES = 10
IDX_DATASETS = {
    "mnist": "mnist",
    "fashion": "fashion",
    "kmnist": "kmnist",
}


def one_hot(labels: Sequence[int], classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        raise ValidationException(f"Labels must lie in [0, {classes}), got range [{labels.min()}, {labels.max()}]")
    encoded = np.zeros((labels.size, classes), dtype=np.float64)
    encoded[np.arange(labels.size), labels] = 1.0
    return encoded


def subset(ds: Dataset, idx: Sequence[int], name: Optional[str] = None) -> Dataset:
    index = np.asarray(idx, dtype=np.int64)
    return Dataset(
        name=name or ds.name,
        inputs=ds.inputs[index],
        labels_onehot=ds.labels_onehot[index],
        labels_raw=[ds.labels_raw[i] for i in index]
    )

# =============================================================================
# IDX FILES
# =============================================================================

def _open(path: str) -> BinaryIO:
    if not os.path.exists(path):
        raise DatasetNotFoundException(path)
    if path.endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_header(handle: BinaryIO, path: str, magic: int, dims: int) -> Tuple[int, ...]:
    raw = handle.read(4 * (1 + dims))
    if len(raw) < 4:
        raise LengthException(f"{path}: missing IDX header")
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise FormatException(f"{path}: magic number 0x{found:08x}, expected 0x{magic:08x}")
    if len(raw) < 4 * (1 + dims):
        raise LengthException(f"{path}: truncated IDX header")
    return struct.unpack(">" + "I" * dims, raw[4:])


def read_idx_images(path: str) -> np.ndarray:
    """Images as uint8 array [count, rows, cols]"""
    with _open(path) as handle:
        count, rows, cols = _read_header(handle, path, IMAGES_MAGIC, 3)
        payload = handle.read()
    expected = count * rows * cols
    if len(payload) < expected:
        raise LengthException(f"{path}: {len(payload)} pixel bytes, expected {expected}")
    return np.frombuffer(payload[:expected], dtype=np.uint8).reshape(count, rows, cols)


def read_idx_labels(path: str) -> np.ndarray:
    with _open(path) as handle:
        (count,) = _read_header(handle, path, LABELS_MAGIC, 1)
        payload = handle.read()
    if len(payload) < count:
        raise LengthException(f"{path}: {len(payload)} label bytes, expected {count}")
    return np.frombuffer(payload[:count], dtype=np.uint8)


def load_idx(images_path: str, labels_path: str, name: str = "idx", classes: int = IDX_CLASSES) -> Dataset:
    """Parse an IDX image/label pair; pixels scaled by 1/255 and flattened row-major"""
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise ConsistencyException(
            f"{images_path} holds {images.shape[0]} images but {labels_path} holds {labels.shape[0]} labels"
        )
    inputs = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    raw = [int(label) for label in labels]
    logger.info("Loaded %s: %d samples, %d features", name, inputs.shape[0], inputs.shape[1])
    return Dataset(name=name, inputs=inputs, labels_onehot=one_hot(raw, classes), labels_raw=raw)


def write_idx(ds: Dataset, images_path: str, labels_path: str, image_shape: Tuple[int, int]) -> None:
    """Write ``ds`` as an IDX pair (pixels rounded to bytes)"""
    rows, cols = image_shape
    if rows * cols != ds.features:
        raise ValidationException(f"Image shape {image_shape} does not cover {ds.features} features")
    pixels = np.rint(ds.inputs * 255.0).astype(np.uint8)
    opener = gzip.open if images_path.endswith(".gz") else open
    with opener(images_path, "wb") as handle:
        handle.write(struct.pack(">IIII", IMAGES_MAGIC, ds.samples, rows, cols))
        handle.write(pixels.tobytes())
    opener = gzip.open if labels_path.endswith(".gz") else open
    with opener(labels_path, "wb") as handle:
        handle.write(struct.pack(">II", LABELS_MAGIC, ds.samples))
        handle.write(np.asarray(ds.labels_raw, dtype=np.uint8).tobytes())


def dataset_paths(root: str, name: str, split: str = "train") -> Tuple[str, str]:
    """``<root>/<name>/<split>-{images,labels}.idx``, preferring an existing ``.gz`` twin"""
    folder = os.path.join(root, IDX_DATASETS.get(name, name))
    paths = []
    for kind in ("images", "labels"):
        plain = os.path.join(folder, f"{split}-{kind}.idx")
        if not os.path.exists(plain) and os.path.exists(plain + ".gz"):
            plain += ".gz"
        paths.append(plain)
    return paths[0], paths[1]


def load_named_dataset(name: str, root: str, split: str = "train") -> Dataset:
    if name not in IDX_DATASETS:
        raise ValidationException(f"Unknown IDX dataset '{name}'; expected one of {sorted(IDX_DATASETS)}")
    images_path, labels_path = dataset_paths(root, name, split)
    for path in (images_path, labels_path):
        if not os.path.exists(path):
            raise DatasetNotFoundException(path)
    return load_idx(images_path, labels_path, name=f"{name}-{split}")

# =============================================================================
# SYNTHETIC DATA
# =============================================================================

def _blob_means(classes: int, dim: int, separation: float, rng: RngState) -> np.ndarray:
    if classes <= dim:
        # scaled basis vectors sit exactly `separation` apart
        means = np.zeros((classes, dim))
        means[np.arange(classes), np.arange(classes)] = separation / np.sqrt(2.0)
        return means
    radius = separation * classes
    while True:
        for _ in range(100):
            means = rng.normal((classes, dim), scale=radius)
            gaps = np.linalg.norm(means[:, None, :] - means[None, :, :], axis=2)
            gaps[np.arange(classes), np.arange(classes)] = np.inf
            if gaps.min() >= separation:
                return means
        radius *= 2.0


def synthetic_blobs(
    classes: int,
    dim: int,
    per_class: int,
    separation: float,
    rng: RngState,
    name: str = "blobs"
) -> Dataset:
    """Unit-variance Gaussian clusters, rescaled as a whole into [0, 1]"""
    if min(classes, dim, per_class) < 1:
        raise ParameterException("classes, dim and per_class must all be >= 1")
    if separation <= 0:
        raise ParameterException(f"separation must be positive, got {separation}")
    means = _blob_means(classes, dim, separation, rng)
    labels = np.repeat(np.arange(classes), per_class)
    points = means[labels] + rng.normal((labels.size, dim))
    order = rng.permutation(labels.size)
    points, labels = points[order], labels[order]
    low, high = points.min(), points.max()
    scaled = (points - low) / (high - low) if high > low else np.zeros_like(points)
    scaled = np.clip(scaled, 0.0, 1.0)
    raw: List[int] = [int(label) for label in labels]
    return Dataset(name=name, inputs=scaled, labels_onehot=one_hot(raw, classes), labels_raw=raw)


def train_test_split(
    ds: Dataset,
    fraction: float,
    rng: RngState,
    stratified: bool = False
) -> Tuple[Dataset, Dataset]:
    """Disjoint, exhaustive partition with ``fraction`` of the rows in the first part"""
    if not 0.0 < fraction < 1.0:
        raise ParameterException(f"fraction must lie strictly between 0 and 1, got {fraction}")
    M = ds.samples
    if stratified:
        labels = np.asarray(ds.labels_raw)
        train: List[int] = []
        for label in np.unique(labels):
            members = np.flatnonzero(labels == label)
            members = members[rng.permutation(members.size)]
            train.extend(members[: int(round(members.size * fraction))].tolist())
        train_idx = np.sort(np.asarray(train, dtype=np.int64))
    else:
        order = rng.permutation(M)
        train_idx = np.sort(order[: int(round(M * fraction))])
    if train_idx.size == 0 or train_idx.size == M:
        raise ParameterException(f"fraction {fraction} leaves one side of a {M}-sample split empty")
    test_idx = np.setdiff1d(np.arange(M), train_idx)
    return subset(ds, train_idx, f"{ds.name}-train"), subset(ds, test_idx, f"{ds.name}-test")
