"""MNIST ingestion and binary-pattern datasets.

Labels are +1 / -1 throughout. Patterns are uint8 arrays of 0/1 bits in
row-major order.
"""

from __future__ import annotations

import csv
import gzip
import io
import os
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
MNIST_ENV = "NEGSYM_MNIST_DIR"
MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


class IdxFormatError(ValueError):
    def __init__(self, path, offset: int, message: str):
        super().__init__(f"{path}: byte {offset}: {message}")
        self.path = path
        self.offset = offset


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class GrayImage:
    width: int
    height: int
    pixels: np.ndarray  # uint8, shape (height, width)

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.size != self.width * self.height:
            raise ValueError(f"{px.size} pixels for a {self.width}x{self.height} image")
        object.__setattr__(self, "pixels", px.reshape(self.height, self.width))


@dataclass
class LabeledDataset:
    patterns: np.ndarray  # (m, N) uint8
    labels: np.ndarray  # (m,) int8 in {-1, +1}
    name: str = ""

    def __post_init__(self):
        self.patterns = np.asarray(self.patterns, dtype=np.uint8)
        self.labels = np.asarray(self.labels, dtype=np.int8)
        if self.patterns.ndim != 2:
            self.patterns = self.patterns.reshape(len(self.labels), -1)
        if len(self.patterns) != len(self.labels):
            raise ValueError(
                f"{len(self.patterns)} patterns but {len(self.labels)} labels"
            )
        if np.any(self.patterns > 1):
            raise ValueError("patterns must contain only 0/1")
        if not np.all(np.isin(self.labels, (-1, 1))):
            raise ValueError("labels must be -1 or +1")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def width(self) -> int:
        return self.patterns.shape[1]

    def negated(self, name: str | None = None) -> "LabeledDataset":
        """Same labels, every pattern bit-flipped."""
        return LabeledDataset(1 - self.patterns, self.labels.copy(), name or f"{self.name}-negated")

    def take(self, count: int, name: str | None = None) -> "LabeledDataset":
        return LabeledDataset(self.patterns[:count], self.labels[:count], name or self.name)


# --- IDX ----------------------------------------------------------------------


def _read_bytes(path) -> bytes:
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as fh:
            return fh.read()
    return path.read_bytes()


def read_idx(path, expected_magic: int) -> np.ndarray:
    """Parse one big-endian IDX file of unsigned bytes."""
    raw = _read_bytes(path)
    if len(raw) < 4:
        raise IdxFormatError(path, len(raw), "truncated before magic number")
    magic = int.from_bytes(raw[:4], "big")
    if magic != expected_magic:
        raise IdxFormatError(path, 0, f"bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    ndim = raw[3]
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise IdxFormatError(path, len(raw), "truncated inside dimension header")
    dims = [int.from_bytes(raw[4 + 4 * i: 8 + 4 * i], "big") for i in range(ndim)]
    size = int(np.prod(dims))
    if len(raw) < header + size:
        raise IdxFormatError(
            path, len(raw), f"truncated payload: need {header + size} bytes, have {len(raw)}"
        )
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header).reshape(dims)


def write_idx(path, array: np.ndarray) -> None:
    array = np.asarray(array, dtype=np.uint8)
    magic = 0x00000800 | array.ndim
    buf = io.BytesIO()
    buf.write(magic.to_bytes(4, "big"))
    for d in array.shape:
        buf.write(int(d).to_bytes(4, "big"))
    buf.write(array.tobytes())
    Path(path).write_bytes(buf.getvalue())


def load_idx(images_path, labels_path) -> list[tuple[GrayImage, int]]:
    images = read_idx(images_path, IMAGES_MAGIC)
    labels = read_idx(labels_path, LABELS_MAGIC)
    if images.ndim != 3:
        raise IdxFormatError(images_path, 3, f"expected 3 dimensions, got {images.ndim}")
    if len(images) != len(labels):
        raise IdxFormatError(
            labels_path, 4, f"{len(labels)} labels for {len(images)} images in {images_path}"
        )
    h, w = images.shape[1:]
    return [(GrayImage(w, h, img), int(lab)) for img, lab in zip(images, labels)]


def find_mnist(directory=None) -> Path | None:
    """Directory holding the four MNIST IDX files (optionally gzipped), or None."""
    directory = directory or os.environ.get(MNIST_ENV)
    if not directory:
        return None
    directory = Path(directory)
    for name in (f for pair in MNIST_FILES.values() for f in pair):
        if not (directory / name).exists() and not (directory / f"{name}.gz").exists():
            return None
    return directory


def mnist_split(directory, split: str) -> list[tuple[GrayImage, int]]:
    directory = Path(directory)

    def resolve(name):
        plain = directory / name
        return plain if plain.exists() else directory / f"{name}.gz"

    images, labels = MNIST_FILES[split]
    return load_idx(resolve(images), resolve(labels))


# --- image ops ----------------------------------------------------------------


def downsample(img: GrayImage, out_w: int, out_h: int) -> GrayImage:
    """Block-mean pooling, rounded half up to the nearest integer."""
    if out_w < 1 or out_h < 1 or img.width % out_w or img.height % out_h:
        raise ValueError(
            f"cannot pool {img.width}x{img.height} to {out_w}x{out_h}: sizes must divide"
        )
    bh, bw = img.height // out_h, img.width // out_w
    sums = img.pixels.astype(np.int64).reshape(out_h, bh, out_w, bw).sum(axis=(1, 3))
    area = bh * bw
    pooled = (2 * sums + area) // (2 * area)
    return GrayImage(out_w, out_h, pooled.astype(np.uint8))


def binarize(img: GrayImage, threshold: int = 128) -> np.ndarray:
    return (img.pixels >= threshold).astype(np.uint8).ravel()


def negate(pattern) -> np.ndarray:
    bits = np.asarray(pattern, dtype=np.uint8)
    if np.any(bits > 1):
        raise ValueError("pattern must contain only 0/1")
    return 1 - bits


def invert_gray(img: GrayImage) -> GrayImage:
    return GrayImage(img.width, img.height, 255 - img.pixels)


# --- datasets -----------------------------------------------------------------


def remove_contradictions(patterns: np.ndarray, labels: np.ndarray):
    """Drop every occurrence of a bit-string that carries more than one label."""
    seen = defaultdict(set)
    keys = [p.tobytes() for p in patterns]
    for key, lab in zip(keys, labels):
        seen[key].add(int(lab))
    keep = np.array([len(seen[k]) == 1 for k in keys], dtype=bool)
    return patterns[keep], labels[keep]


def build_digit_task(raw, digit_pos: int = 3, digit_neg: int = 6, size=(4, 4),
                     threshold: int = 128, invert: bool = False,
                     unique: bool = False, name: str = "") -> LabeledDataset:
    """Two-digit binary task: pool, threshold, label +1/-1, drop contradictions.

    ``invert`` flips grayscale before preprocessing (the negated test set built
    from images). ``unique`` additionally collapses repeated bit-strings.
    """
    out_w, out_h = size
    patterns, labels = [], []
    for img, digit in raw:
        if digit not in (digit_pos, digit_neg):
            continue
        if invert:
            img = invert_gray(img)
        patterns.append(binarize(downsample(img, out_w, out_h), threshold))
        labels.append(1 if digit == digit_pos else -1)
    if not patterns:
        raise DataError(f"no images with digits {digit_pos}/{digit_neg}")
    pats, labs = remove_contradictions(np.array(patterns), np.array(labels))
    if unique and len(pats):
        _, first = np.unique(pats, axis=0, return_index=True)
        first.sort()
        pats, labs = pats[first], labs[first]
    if not len(pats):
        raise DataError("every pattern was contradictory")
    return LabeledDataset(pats, labs, name or f"digits-{digit_pos}v{digit_neg}")


def build_drawback_task(base: LabeledDataset, name: str | None = None) -> LabeledDataset:
    """Originals labelled +1, their negations labelled -1, contradictions removed."""
    pats = np.concatenate([base.patterns, 1 - base.patterns])
    labs = np.concatenate([np.ones(len(base), np.int8), -np.ones(len(base), np.int8)])
    pats, labs = remove_contradictions(pats, labs)
    return LabeledDataset(pats, labs, name or f"{base.name}-drawback")


SYNTHETIC_RULES = ("parity", "majority")


def synthetic_dataset(n: int, size: int, rule: str = "parity", seed: int = 0) -> LabeledDataset:
    """Random patterns labelled by a fixed seeded mask.

    ``parity``: +1 when an even-sized mask (two bits) has even parity. The
    rule is unchanged by negation, so QNNs can learn it.
    ``majority``: +1 when most bits of an odd-sized mask are set. Negation
    flips the label, which QNNs cannot represent.
    """
    if not 1 <= n <= 20:
        raise ValueError(f"n must be in [1, 20], got {n}")
    rng = np.random.default_rng(seed)
    if rule == "parity":
        if n < 2:
            raise ValueError("parity rule needs n >= 2")
        mask = rng.choice(n, size=2, replace=False)
    elif rule == "majority":
        mask = rng.choice(n, size=n if n % 2 else n - 1, replace=False)
    else:
        raise ValueError(f"unknown rule {rule!r}; expected one of {SYNTHETIC_RULES}")
    patterns = rng.integers(0, 2, size=(size, n), dtype=np.uint8)
    picked = patterns[:, np.sort(mask)].astype(np.int64).sum(axis=1)
    if rule == "parity":
        labels = np.where(picked % 2 == 0, 1, -1)
    else:
        labels = np.where(2 * picked > len(mask), 1, -1)
    return LabeledDataset(patterns, labels, f"synthetic-{rule}-n{n}-s{seed}")


# --- CSV cache ----------------------------------------------------------------


def save_csv(dataset: LabeledDataset, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bits", "label"])
        for bits, lab in zip(dataset.patterns, dataset.labels):
            writer.writerow(["".join(map(str, bits)), int(lab)])
    os.replace(tmp, path)


def load_csv(path, name: str | None = None) -> LabeledDataset:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["bits", "label"]:
            raise DataError(f"{path}: expected header 'bits,label', got {reader.fieldnames}")
        rows = list(reader)
    if not rows:
        raise DataError(f"{path}: no rows")
    widths = {len(r["bits"]) for r in rows}
    if len(widths) != 1:
        raise DataError(f"{path}: mixed pattern widths {sorted(widths)}")
    patterns = np.array([[int(c) for c in r["bits"]] for r in rows], dtype=np.uint8)
    labels = np.array([int(r["label"]) for r in rows], dtype=np.int8)
    return LabeledDataset(patterns, labels, name or path.stem)


def export_mnist_subset(directory, train_fraction: float = 0.8) -> Path:
    """Write mlxtend's 5000-image MNIST sample as train/t10k IDX files.

    Stand-in when the full MNIST files are not available. Each digit's images
    are split in their stored order, the first ``train_fraction`` going to
    the training files. Requires the optional ``mlxtend`` package.
    """
    from mlxtend.data import mnist_data

    images, labels = mnist_data()
    images = images.reshape(-1, 28, 28).astype(np.uint8)
    labels = labels.astype(np.uint8)
    train_idx, test_idx = [], []
    for digit in range(10):
        idx = np.flatnonzero(labels == digit)
        cut = int(round(train_fraction * len(idx)))
        train_idx.extend(idx[:cut])
        test_idx.extend(idx[cut:])
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for split, idx in (("train", np.sort(train_idx)), ("test", np.sort(test_idx))):
        img_name, lab_name = MNIST_FILES[split]
        write_idx(directory / img_name, images[idx])
        write_idx(directory / lab_name, labels[idx])
    return directory
