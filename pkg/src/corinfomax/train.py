"""Pretraining loop: augment -> shared net -> covariance tracker -> loss -> SGD."""

import csv
import logging
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import covtrack, net
from .data import AugmentConfig, augment_batch, batches
from .densela import escalate_jitter
from .evaluation import spectrum_report
from .loss import LossBreakdown, LossParams, objective_and_grad

log = logging.getLogger(__name__)

METRIC_FIELDS = [
    "epoch", "total_loss", "big_bang", "attraction", "ldmi_tracked",
    "min_eig", "max_eig", "effective_rank", "learning_rate",
]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 128
    lr_max: float = 0.5
    lr_start: float = 0.05
    lr_min: float = 1e-3
    warmup_epochs: int = 10
    momentum: float = 0.9
    weight_decay: float = 1e-4
    loss: LossParams = field(default_factory=LossParams)
    forgetting: float = 0.01
    seed: int = 0
    drop_last: bool = True

    def __post_init__(self):
        if min(self.lr_max, self.lr_start, self.lr_min) <= 0:
            raise ValueError("learning rates must be positive")
        if not 0 <= self.warmup_epochs <= self.epochs:
            raise ValueError("warmup_epochs must lie in [0, epochs]")
        if not 0 <= self.forgetting < 1:
            raise ValueError("forgetting factor must lie in [0, 1)")


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    total_loss: float
    big_bang: float
    attraction: float
    ldmi_tracked: float
    min_eig: float
    max_eig: float
    effective_rank: float
    learning_rate: float


def schedule_lr(step, total_steps, warmup_steps, lr_start, lr_max, lr_min):
    """Linear warmup from ``lr_start`` to ``lr_max``, then cosine decay to ``lr_min``.

    The cosine reaches ``lr_min`` exactly at ``step = total_steps - 1``.
    """
    if step < warmup_steps:
        return lr_start + (lr_max - lr_start) * step / warmup_steps
    span = max(total_steps - 1 - warmup_steps, 1)
    progress = min((step - warmup_steps) / span, 1.0)
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + math.cos(math.pi * progress))


def collect_metrics(state, breakdown, lr, epoch=0):
    spectrum = spectrum_report(state.r1)
    return EpochMetrics(
        epoch=epoch,
        total_loss=breakdown.total,
        big_bang=breakdown.big_bang,
        attraction=breakdown.attraction,
        ldmi_tracked=breakdown.ldmi_tracked,
        min_eig=spectrum.min_eig,
        max_eig=spectrum.max_eig,
        effective_rank=spectrum.effective_rank,
        learning_rate=lr,
    )


def _rng(seed, *keys):
    return np.random.default_rng(np.random.SeedSequence([seed, *keys]))


def train_step(params, velocity, state, x, train_config, augment, augment2, rng, lr):
    """One optimisation step on raw inputs ``x`` (D_in x N)."""
    x1 = augment_batch(x, augment, rng)
    x2 = augment_batch(x, augment2, rng)
    _, z1, c1 = net.forward(params, x1)
    _, z2, c2 = net.forward(params, x2)
    batch = covtrack.Batch(z1, z2)

    def run(eps):
        return objective_and_grad(state, batch, replace(train_config.loss, eps=eps))

    (out, state, g1, g2), _ = escalate_jitter(run, train_config.loss.eps)
    gr1, _ = net.backward(params, c1, g1)
    gr2, _ = net.backward(params, c2, g2)
    grads = net.MlpParams(
        [a + b for a, b in zip(gr1.weights, gr2.weights)],
        [a + b for a, b in zip(gr1.biases, gr2.biases)],
        params.n_encoder,
    )
    params, velocity = net.sgd_step(params, grads, velocity, lr, train_config.momentum, train_config.weight_decay)
    return params, velocity, state, out


def pretrain(dataset, net_config, train_config, augment=None, augment2=None, callback=None, params=None):
    """Self-supervised pretraining.

    Returns ``(params, covariance_state, metrics)``.  ``callback(epoch,
    params, state, metrics)`` runs after every epoch.  Fully deterministic
    given the configs' seeds.
    """
    augment = augment or AugmentConfig()
    augment2 = augment2 or augment
    params = params.copy() if params is not None else net.init_params(net_config)
    state = covtrack.init(net_config.output_dim, train_config.forgetting)
    if train_config.epochs == 0:
        return params, state, []

    m = len(dataset)
    per_epoch = len(batches(m, train_config.batch_size, 0, train_config.drop_last))
    total_steps = train_config.epochs * per_epoch
    warmup_steps = train_config.warmup_epochs * per_epoch
    velocity = None
    metrics = []
    step = 0
    for epoch in range(train_config.epochs):
        sums = np.zeros(3)
        order = batches(m, train_config.batch_size, int(_rng(train_config.seed, epoch).integers(2**32)),
                        train_config.drop_last)
        for bi, idx in enumerate(order):
            lr = schedule_lr(step, total_steps, warmup_steps, train_config.lr_start,
                             train_config.lr_max, train_config.lr_min)
            params, velocity, state, out = train_step(
                params, velocity, state, dataset.features[:, idx], train_config,
                augment, augment2, _rng(train_config.seed, epoch, bi), lr,
            )
            sums += (out.total, out.big_bang, out.attraction)
            step += 1
        mean = LossBreakdown(*(sums / len(order)), out.ldmi_tracked)
        metrics.append(collect_metrics(state, mean, lr, epoch))
        log.debug("epoch %d: %s", epoch, metrics[-1])
        if callback is not None:
            callback(epoch, params, state, metrics)
    return params, state, metrics


def write_metrics(path, metrics, append=True):
    """Append rows to a CSV file, writing the header if the file is new."""
    new = not os.path.exists(path) or not append
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(METRIC_FIELDS)
        for m in metrics:
            w.writerow([m.epoch] + [repr(float(getattr(m, k))) for k in METRIC_FIELDS[1:]])
