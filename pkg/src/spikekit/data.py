"""MNIST ingestion from IDX binary files, plus batching.

Files may be the raw IDX binaries or their gzipped form; compression is
detected from the first two bytes. Nothing here touches the network: the
CLI documents where to put the four canonical files.
"""
from __future__ import annotations

import gzip
import hashlib
import os
import struct
from dataclasses import dataclass

import numpy as np

from . import arraycore as ac
from .arraycore import Rng, Tensor
from .errors import ContractError, FormatError

__all__ = ["Dataset", "load_idx_images", "load_idx_labels", "load_mnist",
           "batches", "MNIST_FILES", "CANONICAL_SHA256", "find_file",
           "verify_sha256"]

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}

# SHA-256 of the decompressed canonical files
CANONICAL_SHA256 = {
    "train-images-idx3-ubyte": "ba891046e6505d7aadcbbe25680a0738ad16aec93bde7f9b65e87a2fc25776db",
    "train-labels-idx1-ubyte": "65a50cbbf4e906d70832878ad85ccda5333a97f0f4c3dd2ef09a8a9eef7101c5",
    "t10k-images-idx3-ubyte": "0fa7898d509279e482958e8ce81c8e77db3f2f8254e26661ceb7762c4d494ce7",
    "t10k-labels-idx1-ubyte": "ff7bcfd416de33731a308c3f266cc351222c34898ecbeaf847f06e48f7ec33f2",
}


@dataclass(frozen=True)
class Dataset:
    """Flattened images in [0,1] plus integer labels of equal length."""

    images: Tensor  # [N, features]
    labels: np.ndarray  # [N] int64 in 0..9

    def __post_init__(self):
        n = self.images.shape[0]
        if n != len(self.labels):
            raise FormatError(f"{n} images but {len(self.labels)} labels")
        if self.images.size and (self.images.data.min() < 0.0
                                 or self.images.data.max() > 1.0):
            raise FormatError("pixel values escape [0, 1]")

    def __len__(self) -> int:
        return self.images.shape[0]

    def subset(self, n: int) -> "Dataset":
        return Dataset(ac.lift(self.images.data[:n]), self.labels[:n])


def _read_payload(path: str) -> bytes:
    with open(path, "rb") as f:
        head = f.read(2)
        f.seek(0)
        if head == b"\x1f\x8b":
            with gzip.open(f) as g:
                return g.read()
        return f.read()


def load_idx_images(path: str) -> Tensor:
    """Read an IDX image file into a [N, rows*cols] tensor scaled to [0,1]."""
    raw = _read_payload(path)
    if len(raw) < 16:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, n, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IMAGE_MAGIC:
        raise FormatError(f"{path}: magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}")
    expected = 16 + n * rows * cols
    if len(raw) != expected:
        raise FormatError(f"{path}: {len(raw)} bytes, expected {expected}")
    pixels = np.frombuffer(raw, dtype=np.uint8, offset=16)
    images = pixels.astype(np.float64).reshape(n, rows * cols) / 255.0
    return ac.lift(images)


def load_idx_labels(path: str) -> np.ndarray:
    """Read an IDX label file into an int64 vector with entries in 0..9."""
    raw = _read_payload(path)
    if len(raw) < 8:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, n = struct.unpack(">II", raw[:8])
    if magic != LABEL_MAGIC:
        raise FormatError(f"{path}: magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}")
    if len(raw) != 8 + n:
        raise FormatError(f"{path}: {len(raw)} bytes, expected {8 + n}")
    labels = np.frombuffer(raw, dtype=np.uint8, offset=8).astype(np.int64)
    if labels.size and labels.max() > 9:
        raise FormatError(f"{path}: label {labels.max()} out of range 0..9")
    return labels


def find_file(data_dir: str, name: str) -> str | None:
    """Locate ``name`` or ``name.gz`` under data_dir."""
    for candidate in (name, name + ".gz"):
        path = os.path.join(data_dir, candidate)
        if os.path.isfile(path):
            return path
    return None


def verify_sha256(path: str, name: str) -> None:
    """Check the decompressed payload against the canonical digest."""
    digest = hashlib.sha256(_read_payload(path)).hexdigest()
    want = CANONICAL_SHA256[name]
    if digest != want:
        raise FormatError(f"{path}: sha256 {digest} != canonical {want}")


def load_mnist(data_dir: str, split: str = "train", verify: bool = False) -> Dataset:
    """Load one MNIST split from data_dir; raises FileNotFoundError if absent."""
    if split not in ("train", "test"):
        raise ContractError(f"split must be 'train' or 'test', got {split!r}")
    img_name = MNIST_FILES[f"{split}_images"]
    lab_name = MNIST_FILES[f"{split}_labels"]
    img_path = find_file(data_dir, img_name)
    lab_path = find_file(data_dir, lab_name)
    if img_path is None or lab_path is None:
        missing = [n for n, p in ((img_name, img_path), (lab_name, lab_path))
                   if p is None]
        raise FileNotFoundError(
            f"missing MNIST files under {data_dir}: "
            + ", ".join(f"{m}[.gz]" for m in missing))
    if verify:
        verify_sha256(img_path, img_name)
        verify_sha256(lab_path, lab_name)
    return Dataset(load_idx_images(img_path), load_idx_labels(lab_path))


def batches(dataset: Dataset, batch_size: int, rng: Rng | None = None,
            shuffle: bool = False):
    """Yield (images, labels) covering every sample exactly once.

    The final batch may be smaller. Shuffling draws a seeded permutation
    from ``rng``.
    """
    if batch_size < 1:
        raise ContractError(f"batch_size={batch_size} must be positive")
    n = len(dataset)
    if shuffle:
        if rng is None:
            raise ContractError("shuffle=True needs an rng")
        order = rng.permutation(n)
    else:
        order = np.arange(n)
    images = dataset.images.data
    for start in range(0, n, batch_size):
        idx = order[start:start + batch_size]
        yield ac.lift(images[idx]), dataset.labels[idx]
