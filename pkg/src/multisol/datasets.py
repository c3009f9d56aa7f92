"""Synthetic blobs, IDX and CSV loaders, and train/validation/test splits."""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dirichlet import make_rng

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


class IdxFormatError(ValueError):
    pass


class CsvFormatError(ValueError):
    pass


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    m: int
    split: str = "all"
    bounds: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.features.ndim != 2:
            raise ValueError(f"features must be an (n, d) matrix, got shape {self.features.shape}")
        if self.features.shape[0] != self.labels.size:
            raise ValueError(f"{self.features.shape[0]} feature rows but {self.labels.size} labels")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.m):
            raise ValueError(f"labels must lie in [0, {self.m})")
        if self.bounds is None and self.labels.size:
            self.bounds = (self.features.min(axis=0), self.features.max(axis=0))

    def __len__(self):
        return self.labels.size

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.m)

    def subset(self, idx, split: str | None = None) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.m, split or self.split)

    def to_csv(self, path, label_column: str = "label"):
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow([f"f{i + 1}" for i in range(self.d)] + [label_column])
            for x, y in zip(self.features, self.labels):
                wr.writerow([repr(float(v)) for v in x] + [int(y)])


@dataclass
class BlobSpec:
    m: int
    counts: tuple
    std: float = 0.3
    radius: float = 2.0
    seed: int = 0

    def __post_init__(self):
        self.counts = tuple(int(c) for c in self.counts)
        if self.m < 2:
            raise ValueError("blobs need at least 2 classes")
        if len(self.counts) != self.m:
            raise ValueError(f"{len(self.counts)} counts given for m={self.m}")
        if min(self.counts) < 1 or not self.std > 0:
            raise ValueError("blob counts and standard deviation must be positive")


def make_blobs(spec: BlobSpec) -> Dataset:
    """Isotropic Gaussian clusters with means equally spaced on a circle."""
    rng = make_rng(spec.seed)
    angles = 2 * np.pi * np.arange(spec.m) / spec.m
    means = spec.radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    labels = np.repeat(np.arange(spec.m), spec.counts)
    features = means[labels] + spec.std * rng.standard_normal((labels.size, 2))
    return Dataset(features, labels, spec.m)


def _read_idx(path, magic: int, what: str) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"IDX {what} file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < 4:
        raise IdxFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise IdxFormatError(f"{path}: bad magic 0x{found:08x} for {what} (expected 0x{magic:08x})")
    ndim = found & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise IdxFormatError(f"{path}: truncated header ({len(raw)} bytes, need {header})")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = math.prod(dims)
    if len(raw) - header < size:
        raise IdxFormatError(f"{path}: truncated data ({len(raw) - header} of {size} bytes)")
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header).reshape(dims)


def load_idx(images_path, labels_path, m: int = 10, split: str = "all") -> Dataset:
    """Load an IDX image/label pair (MNIST layout); pixels are scaled to [0, 1]."""
    images = _read_idx(images_path, IDX_IMAGES_MAGIC, "images")
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC, "labels")
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(f"count mismatch: {images.shape[0]} images vs {labels.shape[0]} labels")
    feats = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return Dataset(feats, labels.astype(np.int64), m, split)


def write_idx(path, array: np.ndarray):
    """Write a uint8 array in IDX format (used for fixtures and conversions)."""
    array = np.asarray(array, dtype=np.uint8)
    magic = 0x00000800 | array.ndim
    with open(path, "wb") as fh:
        fh.write(struct.pack(">I", magic))
        fh.write(struct.pack(f">{array.ndim}I", *array.shape))
        fh.write(array.tobytes())


def load_csv(path, label_column: str = "label", m: int | None = None) -> Dataset:
    """Numeric CSV with a header row; all non-label columns are features in file order."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0]:
        raise CsvFormatError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    if label_column not in header:
        raise CsvFormatError(f"{path}: unknown label column {label_column!r}; header is {header}")
    if not body:
        raise CsvFormatError(f"{path}: no data rows")
    li = header.index(label_column)
    feats, labels = [], []
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise CsvFormatError(f"{path}:{lineno}: ragged row with {len(row)} cells, header has {len(header)}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise CsvFormatError(f"{path}:{lineno}: non-numeric cell in {row}") from None
        lab = vals.pop(li)
        if lab != int(lab):
            raise CsvFormatError(f"{path}:{lineno}: label {lab} is not an integer")
        feats.append(vals)
        labels.append(int(lab))
    labels = np.array(labels, dtype=np.int64)
    if m is None:
        m = int(labels.max()) + 1
    if labels.min() < 0 or labels.max() >= m:
        raise CsvFormatError(f"{path}: label values must lie in [0, {m}), found [{labels.min()}, {labels.max()}]")
    return Dataset(np.array(feats, dtype=np.float64).reshape(len(labels), -1), labels, m)


def _split_sizes(n: int, fractions) -> list[int]:
    raw = np.asarray(fractions, dtype=np.float64) * n
    sizes = np.floor(raw).astype(int)
    # hand leftover items to the largest remainders, earlier splits first on ties
    for k in np.argsort(-(raw - sizes), kind="stable")[: n - sizes.sum()]:
        sizes[k] += 1
    return sizes.tolist()


def partition(dataset: Dataset, fractions, seed: int = 0, stratified: bool = True, names=None) -> tuple:
    """Shuffle and cut into ``len(fractions)`` disjoint parts covering the dataset."""
    rng = make_rng(seed)
    parts: list[list[np.ndarray]] = [[] for _ in fractions]
    groups = [np.flatnonzero(dataset.labels == j) for j in range(dataset.m)] if stratified else [np.arange(len(dataset))]
    for idx in groups:
        idx = rng.permutation(idx)
        lo = 0
        for k, size in enumerate(_split_sizes(idx.size, fractions)):
            parts[k].append(idx[lo : lo + size])
            lo += size
    names = names or [f"part{k}" for k in range(len(fractions))]
    return tuple(dataset.subset(np.sort(np.concatenate(p)), names[k]) for k, p in enumerate(parts))


def split(dataset: Dataset, fractions=(0.8, 0.1, 0.1), seed: int = 0, stratified: bool = True):
    """Train/validation/test split; ``stratified`` keeps class proportions within one sample."""
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or min(fractions) <= 0 or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must be three positive numbers summing to 1, got {fractions}")
    return partition(dataset, fractions, seed, stratified, ("train", "validation", "test"))
