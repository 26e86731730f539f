"""Dataset loading (IDX, CIFAR-10 binary), desk-scale subsetting and batching."""
from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
CIFAR_RECORD = 1 + 32 * 32 * 3

FASHION_CLASSES = ["T-shirt/top", "Trouser", "Pullover", "Dress", "Coat",
                   "Sandal", "Shirt", "Sneaker", "Bag", "Ankle boot"]
CIFAR_CLASSES = ["airplane", "automobile", "bird", "cat", "deer",
                 "dog", "frog", "horse", "ship", "truck"]


class DataFormatError(ValueError):
    pass


class DataLengthError(DataFormatError):
    pass


class ConsistencyError(ValueError):
    pass


class LabelError(ValueError):
    pass


@dataclass
class Dataset:
    images: np.ndarray  # (N, H, W, C) in [0, 1]
    labels: np.ndarray  # (N,) int64
    split: str = "train"
    class_names: list = field(default_factory=list)

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


def _read_bytes(path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as f:
        return f.read()


def _parse_idx(raw: bytes, magic: int, ndim: int, path) -> np.ndarray:
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise DataLengthError(f"{path}: file shorter than its IDX header")
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise DataFormatError(f"{path}: bad magic 0x{found:08x}, expected 0x{magic:08x}")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(dims))
    if len(raw) - header != size:
        raise DataLengthError(f"{path}: expected {size} data bytes, found {len(raw) - header}")
    return np.frombuffer(raw, dtype=np.uint8, offset=header).reshape(dims)


def load_idx(images_path, labels_path, split: str = "train",
             class_names: list | None = None) -> Dataset:
    """Load an IDX image/label pair; ``.gz`` paths are decompressed."""
    images = _parse_idx(_read_bytes(images_path), IDX_IMAGES_MAGIC, 3, images_path)
    labels = _parse_idx(_read_bytes(labels_path), IDX_LABELS_MAGIC, 1, labels_path)
    if images.shape[0] != labels.shape[0]:
        raise ConsistencyError(
            f"{images.shape[0]} images but {labels.shape[0]} labels")
    names = list(class_names) if class_names is not None else FASHION_CLASSES
    if labels.size and labels.max() >= len(names):
        raise LabelError(f"label {labels.max()} has no class name")
    return Dataset(images[..., None] / 255.0, labels.astype(np.int64), split, names)


def write_idx(images: np.ndarray, labels: np.ndarray, images_path, labels_path) -> None:
    """Write uint8 images (N, H, W) and labels (N,) as IDX, gzipped for ``.gz`` paths."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    blobs = [
        (images_path, struct.pack(">I3I", IDX_IMAGES_MAGIC, *images.shape) + images.tobytes()),
        (labels_path, struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0]) + labels.tobytes()),
    ]
    for path, blob in blobs:
        path = Path(path)
        if path.suffix == ".gz":
            # mtime=0 keeps the archive bytes reproducible
            with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as f:
                f.write(blob)
        else:
            path.write_bytes(blob)


def load_cifar10(batch_paths, split: str = "train") -> Dataset:
    images, labels = [], []
    for path in batch_paths:
        raw = _read_bytes(path)
        if len(raw) == 0 or len(raw) % CIFAR_RECORD:
            raise DataLengthError(f"{path}: length {len(raw)} is not a multiple of {CIFAR_RECORD}")
        rec = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
        if rec[:, 0].max() > 9:
            raise LabelError(f"{path}: label byte {rec[:, 0].max()} > 9")
        labels.append(rec[:, 0].astype(np.int64))
        images.append(rec[:, 1:].reshape(-1, 3, 32, 32).transpose(0, 2, 3, 1))
    return Dataset(np.concatenate(images) / 255.0, np.concatenate(labels), split,
                   list(CIFAR_CLASSES))


def write_cifar10(images: np.ndarray, labels: np.ndarray, path) -> None:
    """Write uint8 (N, 32, 32, 3) images in the channel-planar CIFAR-10 record layout."""
    images = np.asarray(images, dtype=np.uint8)
    planar = images.transpose(0, 3, 1, 2).reshape(images.shape[0], -1)
    rec = np.column_stack([np.asarray(labels, dtype=np.uint8), planar])
    Path(path).write_bytes(rec.tobytes())


def area_downsample(images: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Resize (N, H, W, C) to ``size`` by exact area averaging (fractional overlaps weighted)."""
    n, h, w, c = images.shape
    th, tw = size
    if (th, tw) == (h, w):
        return images.copy()
    rows = _area_matrix(h, th)
    cols = _area_matrix(w, tw)
    return np.einsum("ph,nhwc,qw->npqc", rows, images, cols, optimize=True)


def _area_matrix(src: int, dst: int) -> np.ndarray:
    """(dst, src) matrix whose row i averages the source cells covered by target cell i."""
    m = np.zeros((dst, src))
    scale = src / dst
    for i in range(dst):
        lo, hi = i * scale, (i + 1) * scale
        for j in range(int(np.floor(lo)), min(src, int(np.ceil(hi)))):
            m[i, j] = min(hi, j + 1) - max(lo, j)
    return m / scale


def desk_subset(ds: Dataset, classes, per_class: int, target_size=None,
                seed: int = 0) -> Dataset:
    """Sample ``per_class`` images from each listed class, relabel them 0..len(classes)-1."""
    rng = np.random.default_rng(seed)
    picks, labels = [], []
    for new, cls in enumerate(classes):
        pool = np.flatnonzero(ds.labels == cls)
        if pool.size < per_class:
            raise ValueError(f"class {cls} has {pool.size} samples, {per_class} requested")
        picks.append(np.sort(rng.choice(pool, size=per_class, replace=False)))
        labels.append(np.full(per_class, new, dtype=np.int64))
    idx = np.concatenate(picks)
    images = ds.images[idx]
    if target_size is not None:
        images = area_downsample(images, tuple(target_size))
    names = [ds.class_names[c] for c in classes] if ds.class_names else []
    return Dataset(images, np.concatenate(labels), ds.split, names)


def batches(ds: Dataset, batch_size: int, seed: int, epoch: int, shuffle: bool = True):
    """Yield index arrays covering the dataset once; order depends only on (seed, epoch)."""
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    if len(ds) == 0:
        raise ValueError("cannot batch an empty dataset")
    if shuffle:
        order = np.random.default_rng([seed, epoch]).permutation(len(ds))
    else:
        order = np.arange(len(ds))
    for start in range(0, len(ds), batch_size):
        yield order[start:start + batch_size]
