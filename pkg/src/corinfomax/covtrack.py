"""Recursive mean / covariance tracking across batches with a forgetting factor.

For each branch ``q`` and batch ``l``::

    mu_q[l] = lam * mu_q[l-1] + (1 - lam) * mean(Z_q)
    Zt_q    = Z_q - mu_q[l]                       # centred with the *new* mean
    R_q[l]  = lam * R_q[l-1] + (1 - lam) * Zt_q Zt_q^T / N
    R_12[l] = lam * R_12[l-1] + (1 - lam) * Zt_1 Zt_2^T / N

States are immutable; every update returns a new :class:`CovarianceState`.
"""

from dataclasses import dataclass, replace

import numpy as np

from .densela import ShapeError, as_matrix, symmetrize


@dataclass(frozen=True)
class Batch:
    """Projector outputs of the two branches, one column per sample (P x N)."""

    z1: np.ndarray
    z2: np.ndarray

    def __post_init__(self):
        z1, z2 = as_matrix(self.z1), as_matrix(self.z2)
        if z1.shape != z2.shape:
            raise ShapeError(f"branch shapes differ: {z1.shape} vs {z2.shape}")
        object.__setattr__(self, "z1", z1)
        object.__setattr__(self, "z2", z2)

    @property
    def dim(self):
        return self.z1.shape[0]

    @property
    def n(self):
        return self.z1.shape[1]


@dataclass(frozen=True)
class CovarianceState:
    dim: int
    lam: float
    mu1: np.ndarray
    mu2: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    r12: np.ndarray
    step: int = 0


def init(dim, lam):
    """Fresh tracker: identity auto-covariances, zero cross-covariance and means."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"forgetting factor must lie in [0, 1), got {lam}")
    return CovarianceState(
        dim=dim,
        lam=float(lam),
        mu1=np.zeros(dim),
        mu2=np.zeros(dim),
        r1=np.eye(dim),
        r2=np.eye(dim),
        r12=np.zeros((dim, dim)),
    )


def _check(state, batch):
    if batch.dim != state.dim:
        raise ShapeError(f"batch dimension {batch.dim} does not match tracker dimension {state.dim}")


def update_means(state, batch):
    _check(state, batch)
    lam = state.lam
    return replace(
        state,
        mu1=lam * state.mu1 + (1.0 - lam) * batch.z1.mean(axis=1),
        mu2=lam * state.mu2 + (1.0 - lam) * batch.z2.mean(axis=1),
    )


def center(z, mu):
    z = as_matrix(z)
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (z.shape[0],):
        raise ShapeError(f"mean of shape {mu.shape} does not match batch rows {z.shape[0]}")
    return z - mu[:, None]


def _check_centered(state, z1t, z2t):
    if z1t.shape != z2t.shape or z1t.shape[0] != state.dim:
        raise ShapeError(f"centred batches {z1t.shape}, {z2t.shape} do not match dimension {state.dim}")


def update_autocov(state, z1t, z2t):
    _check_centered(state, z1t, z2t)
    lam, n = state.lam, z1t.shape[1]
    r1 = lam * state.r1 + (1.0 - lam) * (z1t @ z1t.T) / n
    r2 = lam * state.r2 + (1.0 - lam) * (z2t @ z2t.T) / n
    return replace(state, r1=symmetrize(r1), r2=symmetrize(r2))


def update_crosscov(state, z1t, z2t):
    _check_centered(state, z1t, z2t)
    lam, n = state.lam, z1t.shape[1]
    return replace(state, r12=lam * state.r12 + (1.0 - lam) * (z1t @ z2t.T) / n)


def batch_update(state, batch):
    """Means first, centre with the updated means, then the covariances.

    Returns ``(new_state, z1_centered, z2_centered)``.
    """
    state = update_means(state, batch)
    z1t = center(batch.z1, state.mu1)
    z2t = center(batch.z2, state.mu2)
    state = update_autocov(state, z1t, z2t)
    state = update_crosscov(state, z1t, z2t)
    return replace(state, step=state.step + 1), z1t, z2t
