"""Synthetic dataset generators, the CIFAR-10 binary loader, and tensor files.

Reproducibility: every generator draws from numpy's PCG64 via
``np.random.default_rng(seed)``. PCG64 output is specified by numpy and
stable across platforms, so a fixed seed yields byte-identical datasets
anywhere. Draw order is part of the recipe: classes outer, replicas inner.

Images are float32 arrays of shape (L, W, C), channel-last, all values in
[0, 1]. Labels index ``class_names``.

Tensor file format (magic "QMC1"): little-endian u32 header fields
{num_samples, L, W, C, num_classes}, then per sample a u16 label followed by
L*W*C little-endian float32 values, row-major, channel-last.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_MAGIC = b"QMC1"

# Colors of the noisy-colors recipe, in class order (raw 8-bit RGB).
NOISY_COLOR_TABLE = [
    ("blue", (0, 0, 255)),
    ("green", (0, 255, 0)),
    ("red", (255, 0, 0)),
    ("cyan", (0, 255, 255)),
    ("magenta", (255, 0, 255)),
    ("yellow", (255, 255, 0)),
    ("light_cyan", (128, 255, 255)),
    ("pink", (255, 128, 255)),
    ("light_yellow", (255, 255, 128)),
]

SHAPE_DESIGNS = ("none", "cross", "x", "rounded")

# CIFAR-10 label order in the binary files.
CIFAR_CLASSES = ("airplane", "automobile", "bird", "cat", "deer",
                 "dog", "frog", "horse", "ship", "truck")

# Class accumulation order for the n-class CIFAR tasks (2 -> frog+ship, ...).
CIFAR_TASK_ORDER = ("frog", "ship", "automobile", "truck", "airplane",
                    "bird", "cat", "horse", "dog", "deer")


class DatasetFormatError(ValueError):
    pass


@dataclass
class LabeledDataset:
    images: np.ndarray  # (N, L, W, C) float32 in [0, 1]
    labels: np.ndarray  # (N,) int64
    class_names: list[str]
    split: str

    def __len__(self) -> int:
        return int(self.images.shape[0])

    @property
    def image_shape(self):
        return tuple(self.images.shape[1:])


def make_rng(seed: int) -> np.random.Generator:
    """The package-wide generator: PCG64 seeded through SeedSequence."""
    return np.random.default_rng(seed)


def _split(images, labels, names, n_train_per_class, n_classes, per_class):
    images = np.asarray(images, dtype=np.float32)
    labels = np.asarray(labels, dtype=np.int64)
    train_idx, test_idx = [], []
    for c in range(n_classes):
        idx = np.flatnonzero(labels == c)
        assert len(idx) == per_class
        train_idx.extend(idx[:n_train_per_class])
        test_idx.extend(idx[n_train_per_class:])
    train = LabeledDataset(images[train_idx], labels[train_idx], names, "train")
    test = LabeledDataset(images[test_idx], labels[test_idx], names, "test")
    return train, test


def _corrupt(image: np.ndarray, rng: np.random.Generator, fraction: float = 0.2):
    """Zero out a fixed fraction of pixels (all channels), chosen without
    replacement."""
    length, width, _ = image.shape
    n_pixels = length * width
    n_corrupt = int(round(fraction * n_pixels))
    chosen = rng.choice(n_pixels, size=n_corrupt, replace=False)
    flat = image.reshape(n_pixels, -1)
    flat[chosen] = 0.0
    return image


def _channel_scale(rgb) -> np.ndarray:
    """raw/255 then channel c (1-indexed) scaled by c/C, per the recipe."""
    c_total = len(rgb)
    return np.array(
        [(value / 255.0) * ((i + 1) / c_total) for i, value in enumerate(rgb)],
        dtype=np.float64,
    )


def gen_noisy_colors(seed: int, replicas: int = 400):
    """Nine 10x10 color squares, 20% of pixels corrupted to black per image."""
    rng = make_rng(seed)
    names = [name for name, _ in NOISY_COLOR_TABLE]
    images, labels = [], []
    for label, (_, rgb) in enumerate(NOISY_COLOR_TABLE):
        base = np.broadcast_to(_channel_scale(rgb), (10, 10, 3)).copy()
        for _ in range(replicas):
            images.append(_corrupt(base.copy(), rng).astype(np.float32))
            labels.append(label)
    n_train = int(replicas * 0.8)
    return _split(images, labels, names, n_train, len(names), replicas)


def shape_mask(design: str) -> np.ndarray:
    """Fixed 10x10 binary masks for the patterned-colors designs."""
    mask = np.zeros((10, 10), dtype=bool)
    if design == "none":
        return mask
    if design == "cross":
        mask[4:6, :] = True
        mask[:, 4:6] = True
        return mask
    if design == "x":
        for l in range(10):
            for w in range(10):
                if w - l in (0, 1) or l + w in (9, 10):
                    mask[l, w] = True
        return mask
    if design == "rounded":
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
        for corner in ((0, 0), (0, 9), (9, 0), (9, 9)):
            mask[corner] = False
        return mask
    raise ValueError(f"unknown design {design!r}")


def gen_noisy_shapes(seed: int, replicas: int = 400):
    """Six base colors x four designs = 24 classes; designs drawn in white
    (255, 255, 255) before normalization and corruption."""
    rng = make_rng(seed)
    colors = NOISY_COLOR_TABLE[:6]
    white = _channel_scale((255, 255, 255))
    names, images, labels = [], [], []
    for color_name, _ in colors:
        for design in SHAPE_DESIGNS:
            names.append(f"{color_name}_{design}")
    label = 0
    for _, rgb in colors:
        base_color = np.broadcast_to(_channel_scale(rgb), (10, 10, 3)).copy()
        for design in SHAPE_DESIGNS:
            base = base_color.copy()
            base[shape_mask(design)] = white
            for _ in range(replicas):
                images.append(_corrupt(base.copy(), rng).astype(np.float32))
                labels.append(label)
            label += 1
    n_train = int(replicas * 0.8)
    return _split(images, labels, names, n_train, len(names), replicas)


def gen_high_channel(seed: int, train_replicas: int = 100, test_replicas: int = 20):
    """Ten classes of 10x10x12 uniform noise; class i (1-indexed) adds 0.5 to
    channels i..i+2, then everything is rescaled by 1/1.5 into [0, 1)."""
    rng = make_rng(seed)
    names = [f"channels_{c + 1}_to_{c + 3}" for c in range(10)]
    per_class = train_replicas + test_replicas
    images, labels = [], []
    for label in range(10):
        for _ in range(per_class):
            tensor = rng.random((10, 10, 12))
            tensor[:, :, label:label + 3] += 0.5
            images.append((tensor / 1.5).astype(np.float32))
            labels.append(label)
    return _split(images, labels, names, train_replicas, 10, per_class)


# -- bilinear resize -------------------------------------------------------------

def bilinear_resize(image: np.ndarray, out_l: int, out_w: int) -> np.ndarray:
    """Half-pixel-center bilinear interpolation, per channel, edges clamped."""
    in_l, in_w = image.shape[0], image.shape[1]
    src_l = np.clip((np.arange(out_l) + 0.5) * (in_l / out_l) - 0.5, 0, in_l - 1)
    src_w = np.clip((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5, 0, in_w - 1)
    l0 = np.floor(src_l).astype(int)
    w0 = np.floor(src_w).astype(int)
    l1 = np.minimum(l0 + 1, in_l - 1)
    w1 = np.minimum(w0 + 1, in_w - 1)
    tl = (src_l - l0)[:, None, None]
    tw = (src_w - w0)[None, :, None]
    img = np.asarray(image, dtype=np.float64)
    top = img[l0][:, w0] * (1 - tw) + img[l0][:, w1] * tw
    bottom = img[l1][:, w0] * (1 - tw) + img[l1][:, w1] * tw
    return (top * (1 - tl) + bottom * tl).astype(np.float32)


# -- CIFAR-10 binary loader --------------------------------------------------------

_CIFAR_RECORD = 3073
_CIFAR_TRAIN_FILES = [f"data_batch_{i}.bin" for i in range(1, 6)]
_CIFAR_TEST_FILES = ["test_batch.bin"]


def cifar_task_classes(n: int) -> list[str]:
    if not 2 <= n <= 10:
        raise ValueError("CIFAR tasks cover 2 to 10 classes")
    return list(CIFAR_TASK_ORDER[:n])


def _read_cifar_records(paths):
    labels, pixels = [], []
    for path in paths:
        data = Path(path).read_bytes()
        if len(data) == 0 or len(data) % _CIFAR_RECORD != 0:
            raise DatasetFormatError(
                f"{path}: size {len(data)} is not a multiple of {_CIFAR_RECORD}"
            )
        arr = np.frombuffer(data, dtype=np.uint8).reshape(-1, _CIFAR_RECORD)
        labels.append(arr[:, 0])
        pixels.append(arr[:, 1:])
    return np.concatenate(labels), np.concatenate(pixels)


def _cifar_images(pixels: np.ndarray) -> np.ndarray:
    # 3072 bytes = R, G, B planes of 32x32, row-major
    planes = pixels.reshape(-1, 3, 32, 32)
    return np.transpose(planes, (0, 2, 3, 1)).astype(np.float32) / 255.0


def load_cifar10(path, class_names, per_class_train: int = 500,
                 per_class_test: int = 100, seed: int = 0,
                 out_size: tuple[int, int] = (10, 10)):
    """First-N-per-class subsets of the binary batches, shuffled, resized.

    ``path`` is the directory holding data_batch_1..5.bin and test_batch.bin.
    """
    path = Path(path)
    for name in class_names:
        if name not in CIFAR_CLASSES:
            raise ValueError(f"unknown CIFAR class {name!r}")
    for fname in _CIFAR_TRAIN_FILES + _CIFAR_TEST_FILES:
        if not (path / fname).exists():
            raise FileNotFoundError(f"missing CIFAR-10 batch file {path / fname}")
    wanted = [CIFAR_CLASSES.index(name) for name in class_names]
    rng = make_rng(seed)
    out = []
    for files, per_class, split in (
        (_CIFAR_TRAIN_FILES, per_class_train, "train"),
        (_CIFAR_TEST_FILES, per_class_test, "test"),
    ):
        raw_labels, pixels = _read_cifar_records(path / f for f in files)
        keep_rows, keep_labels = [], []
        for new_label, cifar_label in enumerate(wanted):
            rows = np.flatnonzero(raw_labels == cifar_label)[:per_class]
            if len(rows) < per_class:
                raise DatasetFormatError(
                    f"class {class_names[new_label]!r} has only {len(rows)} records"
                )
            keep_rows.extend(rows)
            keep_labels.extend([new_label] * per_class)
        order = rng.permutation(len(keep_rows))
        images = _cifar_images(pixels[np.asarray(keep_rows)[order]])
        labels = np.asarray(keep_labels, dtype=np.int64)[order]
        resized = np.stack([bilinear_resize(img, *out_size) for img in images])
        out.append(LabeledDataset(resized, labels, list(class_names), split))
    return tuple(out)


# -- tensor container ---------------------------------------------------------------

def save_dataset(ds: LabeledDataset, path) -> None:
    n = len(ds)
    if ds.images.ndim == 4:
        length, width, channels = ds.images.shape[1:]
    else:
        length = width = channels = 0
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<5I", n, length, width, channels, len(ds.class_names)))
        for i in range(n):
            fh.write(struct.pack("<H", int(ds.labels[i])))
            fh.write(ds.images[i].astype("<f4").tobytes())


def load_dataset(path, split: str = "train") -> LabeledDataset:
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise DatasetFormatError(f"{path}: bad magic {data[:4]!r}")
    if len(data) < 24:
        raise DatasetFormatError(f"{path}: truncated header")
    n, length, width, channels, n_classes = struct.unpack("<5I", data[4:24])
    sample_bytes = 2 + length * width * channels * 4
    if len(data) != 24 + n * sample_bytes:
        raise DatasetFormatError(f"{path}: expected {n} samples, file size is off")
    images = np.empty((n, length, width, channels), dtype=np.float32)
    labels = np.empty(n, dtype=np.int64)
    offset = 24
    for i in range(n):
        (labels[i],) = struct.unpack_from("<H", data, offset)
        offset += 2
        count = length * width * channels
        images[i] = np.frombuffer(
            data, dtype="<f4", count=count, offset=offset
        ).reshape(length, width, channels)
        offset += count * 4
    names = [f"class{i}" for i in range(n_classes)]
    return LabeledDataset(images, labels, names, split)
