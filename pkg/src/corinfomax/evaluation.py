"""Linear probing of frozen encoder features and covariance-spectrum diagnostics."""

from dataclasses import dataclass

import numpy as np

from . import net
from .densela import ShapeError, sym_eigenvalues


@dataclass(frozen=True)
class ProbeParams:
    weight: np.ndarray  # num_classes x F
    bias: np.ndarray


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # descending
    min_eig: float
    max_eig: float
    effective_rank: float


def effective_rank(eigenvalues):
    """``exp`` of the Shannon entropy of the normalised eigenvalue distribution.

    Negative round-off eigenvalues are clipped to zero.
    """
    lam = np.clip(np.asarray(eigenvalues, dtype=np.float64), 0.0, None)
    total = lam.sum()
    if total <= 0:
        return 1.0
    p = lam[lam > 0] / total
    return float(np.exp(-np.sum(p * np.log(p))))


def spectrum_report(r):
    eig = sym_eigenvalues(r)
    return Spectrum(eig, float(eig[-1]), float(eig[0]), effective_rank(eig))


def embed(params, dataset):
    """Encoder features (F x M) of the un-augmented dataset."""
    y, _, _ = net.forward(params, dataset.features)
    return y


def _softmax(logits):
    logits = logits - logits.max(axis=0)
    e = np.exp(logits)
    return e / e.sum(axis=0)


def cross_entropy(probe, embeddings, labels):
    p = _softmax(probe.weight @ embeddings + probe.bias[:, None])
    return float(-np.mean(np.log(p[labels, np.arange(labels.size)] + 1e-300)))


def probe_train(embeddings, labels, epochs, lr=0.2, momentum=0.9, seed=0, batch_size=256,
                num_classes=None, lr_final_ratio=0.01, history=None):
    """Softmax regression on frozen features with mini-batch SGD + momentum.

    Features are standardised internally and the scaling is folded back into
    the returned weights, so the probe applies to raw embeddings.  The step
    size follows a cosine decay from ``lr`` to ``lr * lr_final_ratio``.  When
    ``history`` is a list, the full-data training loss is appended after each
    epoch.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or labels.shape != (x.shape[1],):
        raise ShapeError(f"embeddings {x.shape} do not match labels {labels.shape}")
    k = int(labels.max()) + 1 if num_classes is None else num_classes
    if np.unique(labels).size < 2:
        raise ValueError("probe needs at least two distinct classes")
    f, m = x.shape
    mean = x.mean(axis=1)
    std = x.std(axis=1)
    std[std == 0] = 1.0
    xs = (x - mean[:, None]) / std[:, None]
    onehot = np.zeros((k, m))
    onehot[labels, np.arange(m)] = 1.0

    w = np.zeros((k, f))
    b = np.zeros(k)
    vw, vb = np.zeros_like(w), np.zeros_like(b)
    rng = np.random.default_rng(seed)
    steps_per_epoch = -(-m // batch_size)
    total = max(epochs * steps_per_epoch - 1, 1)
    step = 0
    for _ in range(epochs):
        perm = rng.permutation(m)
        for start in range(0, m, batch_size):
            idx = perm[start:start + batch_size]
            xb = xs[:, idx]
            g = _softmax(w @ xb + b[:, None]) - onehot[:, idx]
            gw = g @ xb.T / idx.size
            gb = g.mean(axis=1)
            eta = lr * (lr_final_ratio + 0.5 * (1 - lr_final_ratio) * (1 + np.cos(np.pi * step / total)))
            vw = momentum * vw + gw
            vb = momentum * vb + gb
            w -= eta * vw
            b -= eta * vb
            step += 1
        if history is not None:
            history.append(cross_entropy(ProbeParams(w, b), xs, labels))
    w_raw = w / std
    return ProbeParams(w_raw, b - w_raw @ mean)


def predict(probe, embeddings):
    # np.argmax returns the first maximum, i.e. ties go to the lowest class index
    return np.argmax(probe.weight @ embeddings + probe.bias[:, None], axis=0)


def probe_accuracy(probe, embeddings, labels):
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if probe.weight.shape[1] != embeddings.shape[0]:
        raise ShapeError(f"probe expects {probe.weight.shape[1]} features, got {embeddings.shape[0]}")
    return float(np.mean(predict(probe, embeddings) == np.asarray(labels)))
