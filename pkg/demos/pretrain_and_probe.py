"""Pretrain on Gaussian blobs, then fit a linear probe on frozen features.

Run with ``python demos/pretrain_and_probe.py`` (about 15 seconds).
"""

import numpy as np

from corinfomax import data, evaluation, net, train
from corinfomax.loss import LossParams

ds = data.gen_blobs(num_classes=4, per_class=500, d_in=16, separation=8.0, within_std=1.0, seed=0)
train_set, test_set = data.train_test_split(ds, 0.2, seed=0)

net_config = net.NetConfig(16, encoder_dims=(64, 64), projector_dims=(64, 16))
train_config = train.TrainConfig(epochs=200, batch_size=128, loss=LossParams(alpha=100.0))
augment = data.AugmentConfig(noise_std=1.5, mask_prob=0.3, scale_range=(0.5, 1.5), rotate_pairs=8, max_angle=1.0)


def report(epoch, params, state, metrics):
    if epoch % 25 == 0:
        m = metrics[-1]
        print(f"epoch {epoch:3d}  loss {m.total_loss:8.3f}  ldmi {m.ldmi_tracked:.3f}  "
              f"min_eig {m.min_eig:.2e}  rank {m.effective_rank:.2f}")


params, state, metrics = train.pretrain(train_set, net_config, train_config, augment, callback=report)

probe = evaluation.probe_train(evaluation.embed(params, train_set), train_set.labels, epochs=100)
acc = evaluation.probe_accuracy(probe, evaluation.embed(params, test_set), test_set.labels)
print(f"held-out probe accuracy: {acc:.4f}")

spectrum = evaluation.spectrum_report(state.r1)
print("projector covariance spectrum:", np.array2string(spectrum.eigenvalues, precision=4))
