"""Gradient check against finite differences and the logdet overhead benchmark."""

import time
from dataclasses import dataclass

import numpy as np

from . import covtrack, net
from .data import AugmentConfig
from .densela import add_scaled_identity, cho_solve, cholesky, logdet_from_cholesky
from .loss import LossParams, grad_z, grad_z_fd, max_relative_error
from .train import TrainConfig, train_step

GRADCHECK_SHAPES = [(p, n) for p in (4, 8, 16) for n in (8, 32)]


@dataclass(frozen=True)
class GradcheckCase:
    dim: int
    n: int
    lam: float
    alpha: float
    rel_err: float
    coupled_gap: float  # analytic (frozen mean) vs. full-coupling FD, informational


def random_case(rng, dim, n, alpha, eps=1e-8):
    """A random (previous state, batch, params) triple with unit-norm outputs."""
    a = rng.normal(size=(dim, dim))
    lam = float(rng.uniform(0.01, 0.9))
    r1 = a @ a.T / dim + 0.1 * np.eye(dim)
    b = rng.normal(size=(dim, dim))
    r2 = b @ b.T / dim + 0.1 * np.eye(dim)
    state = covtrack.CovarianceState(dim, lam, 0.1 * rng.normal(size=dim), 0.1 * rng.normal(size=dim),
                                     r1, r2, np.zeros((dim, dim)))
    z1 = net.l2_normalize(rng.normal(size=(dim, n)))
    z2 = net.l2_normalize(z1 + 0.3 * rng.normal(size=(dim, n)))
    return state, covtrack.Batch(z1, z2), LossParams(eps=eps, alpha=alpha)


def gradcheck(cases=20, h=1e-5, seed=0, coupled=True):
    """Compare :func:`grad_z` with central differences on random cases."""
    rng = np.random.default_rng(seed)
    alphas = (0.0, 100.0, 250.0)
    out = []
    for k in range(cases):
        dim, n = GRADCHECK_SHAPES[k % len(GRADCHECK_SHAPES)]
        alpha = alphas[k % len(alphas)]
        state, batch, params = random_case(rng, dim, n, alpha)
        g = grad_z(state, batch, params)
        err = max_relative_error(g, grad_z_fd(state, batch, params, h))
        gap = max_relative_error(g, grad_z_fd(state, batch, params, h, freeze_mean=False)) if coupled else float("nan")
        out.append(GradcheckCase(dim, n, state.lam, alpha, err, gap))
    return out


@dataclass(frozen=True)
class BenchRow:
    dim: int
    batch: int
    logdet_seconds: float
    step_seconds: float

    @property
    def ratio(self):
        return self.logdet_seconds / self.step_seconds


def _logdet_work(r1, r2, z1t, z2t, eps):
    # what one step spends on the log-determinants and their gradients
    L1 = cholesky(add_scaled_identity(r1, eps))
    L2 = cholesky(add_scaled_identity(r2, eps))
    logdet_from_cholesky(L1) + logdet_from_cholesky(L2)
    cho_solve(L1, z1t)
    cho_solve(L2, z2t)


def bench_logdet(dims=(64, 128, 256), batch=256, repeats=5, input_dim=16, encoder_dims=(64, 64),
                 projector_hidden=(64,), seed=0):
    """Fraction of a full training step spent in log-determinant work, per projector size."""
    rng = np.random.default_rng(seed)
    rows = []
    for dim in dims:
        cfg = net.NetConfig(input_dim, encoder_dims, tuple(projector_hidden) + (dim,), seed=seed)
        params = net.init_params(cfg)
        tc = TrainConfig(epochs=1, batch_size=batch, warmup_epochs=0, loss=LossParams(alpha=250.0))
        aug = AugmentConfig(noise_std=0.1)
        state = covtrack.init(dim, tc.forgetting)
        x = rng.normal(size=(input_dim, batch))
        velocity = None
        step_t, logdet_t = [], []
        for _ in range(repeats + 1):  # first iteration is warm-up
            t0 = time.perf_counter()
            params, velocity, new_state, _ = train_step(params, velocity, state, x, tc, aug, aug, rng, 1e-3)
            t1 = time.perf_counter()
            _, z, _ = net.forward(params, x)
            zt = covtrack.center(z, new_state.mu1)
            t2 = time.perf_counter()
            _logdet_work(new_state.r1, new_state.r2, zt, zt, tc.loss.eps)
            t3 = time.perf_counter()
            state = new_state
            step_t.append(t1 - t0)
            logdet_t.append(t3 - t2)
        rows.append(BenchRow(dim, batch, float(np.median(logdet_t[1:])), float(np.median(step_t[1:]))))
    return rows
