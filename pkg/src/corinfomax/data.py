"""Synthetic augmentable datasets and a flat-file table format.

Samples are stored column-wise (``features`` is ``D_in x M``).  Randomness is
always passed in explicitly as a ``numpy.random.Generator``.
"""

from dataclasses import dataclass

import numpy as np

from .densela import ShapeError


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if x.ndim != 2 or y.shape != (x.shape[1],):
            raise ShapeError(f"features {x.shape} and labels {y.shape} disagree")
        if y.size and (y.min() < 0 or y.max() >= self.num_classes):
            raise ValueError("labels out of range")
        if x.shape[1] < self.num_classes:
            raise ValueError("fewer samples than classes")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    @property
    def dim(self):
        return self.features.shape[0]

    def __len__(self):
        return self.features.shape[1]

    def subset(self, idx):
        return Dataset(self.features[:, idx], self.labels[idx], self.num_classes)


@dataclass(frozen=True)
class AugmentConfig:
    noise_std: float = 0.0
    mask_prob: float = 0.0
    scale_range: tuple = (1.0, 1.0)
    rotate_pairs: int = 0
    max_angle: float = 0.0

    def __post_init__(self):
        lo, hi = self.scale_range
        if self.noise_std < 0 or not 0 <= self.mask_prob < 1:
            raise ValueError("noise_std must be >= 0 and mask_prob in [0, 1)")
        if not 0 < lo <= hi:
            raise ValueError(f"bad scale range {self.scale_range}")
        if self.rotate_pairs < 0 or not np.isfinite(self.max_angle):
            raise ValueError("rotate_pairs must be >= 0 and max_angle finite")


def gen_blobs(num_classes, per_class, d_in, separation, within_std, seed):
    """Gaussian blobs around well-spread anchors.

    Anchors are ``separation`` times random unit vectors whose pairwise angles
    are at least 60 degrees (rejection sampling, at most 10**4 draws).
    """
    if not separation > 0:
        raise ValueError("separation must be positive")
    rng = np.random.default_rng(seed)
    anchors = []
    for _ in range(10_000):
        if len(anchors) == num_classes:
            break
        u = rng.normal(size=d_in)
        u /= np.linalg.norm(u)
        if all(u @ a <= 0.5 for a in anchors):
            anchors.append(u)
    else:
        raise RuntimeError(f"could not place {num_classes} anchors 60 degrees apart in {d_in} dimensions")
    anchors = separation * np.array(anchors).T
    labels = np.repeat(np.arange(num_classes), per_class)
    features = anchors[:, labels] + within_std * rng.normal(size=(d_in, labels.size))
    return Dataset(features, labels, num_classes)


def train_test_split(dataset, test_fraction, seed):
    """Stratified random split; returns ``(train, test)``."""
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in range(dataset.num_classes):
        idx = rng.permutation(np.flatnonzero(dataset.labels == c))
        k = int(round(test_fraction * idx.size))
        test_idx.append(idx[:k])
        train_idx.append(idx[k:])
    return dataset.subset(np.sort(np.concatenate(train_idx))), dataset.subset(np.sort(np.concatenate(test_idx)))


def save_table(path, dataset):
    """One sample per line: comma-separated features then the integer label."""
    with open(path, "w") as fh:
        for x, y in zip(dataset.features.T, dataset.labels):
            fh.write(",".join(f"{v:.17g}" for v in x) + f",{int(y)}\n")


def load_table(path, num_classes=None):
    rows, labels = [], []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
                if width < 2:
                    raise DataFormatError(f"line {lineno}: need at least one feature and a label")
            elif len(fields) != width:
                raise DataFormatError(f"line {lineno}: expected {width} fields, got {len(fields)}")
            try:
                rows.append([float(v) for v in fields[:-1]])
                labels.append(int(fields[-1]))
            except ValueError as exc:
                raise DataFormatError(f"line {lineno}: {exc}") from None
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    labels = np.array(labels)
    if labels.min() < 0:
        raise DataFormatError("labels must be non-negative")
    k = int(labels.max()) + 1 if num_classes is None else num_classes
    return Dataset(np.array(rows).T, labels, k)


def _plane_rotations(x, n_rot, max_angle, rng):
    d, n = x.shape
    if d < 2:
        return x
    cols = np.arange(n)
    for _ in range(n_rot):
        i = rng.integers(0, d, size=n)
        j = (i + rng.integers(1, d, size=n)) % d  # j != i
        theta = rng.uniform(-max_angle, max_angle, size=n)
        c, s = np.cos(theta), np.sin(theta)
        xi, xj = x[i, cols], x[j, cols]
        x[i, cols] = c * xi - s * xj
        x[j, cols] = s * xi + c * xj
    return x


def augment_batch(x, config, rng):
    """Augment every column of ``x`` independently; returns a new matrix.

    Order: random plane rotations, a per-sample scale, coordinate masking,
    additive Gaussian noise.
    """
    x = np.array(x, dtype=np.float64, copy=True)
    d, n = x.shape
    if config.rotate_pairs:
        x = _plane_rotations(x, config.rotate_pairs, config.max_angle, rng)
    lo, hi = config.scale_range
    if hi > lo:
        x *= rng.uniform(lo, hi, size=n)
    elif lo != 1.0:
        x *= lo
    if config.mask_prob > 0:
        x *= rng.random(size=(d, n)) >= config.mask_prob
    if config.noise_std > 0:
        x += config.noise_std * rng.normal(size=(d, n))
    return x


def augment_pair(x, config, rng, config2=None):
    """Two independent augmentations of a single vector ``x``."""
    x = np.asarray(x, dtype=np.float64)[:, None]
    x1 = augment_batch(x, config, rng)[:, 0]
    x2 = augment_batch(x, config if config2 is None else config2, rng)[:, 0]
    return x1, x2


def batches(num_samples, n, seed, drop_last=False):
    """Shuffle ``range(num_samples)`` and cut it into index arrays of size ``n``."""
    if n < 1:
        raise ValueError("batch size must be >= 1")
    if n > num_samples:
        raise ValueError(f"batch size {n} exceeds dataset size {num_samples}")
    perm = np.random.default_rng(seed).permutation(num_samples)
    out = [perm[k:k + n] for k in range(0, num_samples, n)]
    if drop_last and out[-1].size < n:
        out.pop()
    return out
