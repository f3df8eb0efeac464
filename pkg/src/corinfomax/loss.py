"""Regularized Euclidean SSL loss on tracked covariances, with analytic gradients.

The minimized quantity per batch is::

    big_bang   = -(logdet(R1 + eps I) + logdet(R2 + eps I)) / P
    attraction = ||Z1 - Z2||_F^2 / (N P)
    total      = big_bang + alpha * attraction

where ``R1, R2`` are the covariance estimates *after* folding in the current
batch.  Gradients treat the updated means and the previous covariances as
constants; only the current batch's outer-product term carries gradient.
"""

from dataclasses import dataclass

import numpy as np

from . import covtrack
from .densela import NotPositiveDefinite, add_scaled_identity, cho_solve, cholesky, logdet_from_cholesky
from .infomeasures import SecondOrderPair, ldmi_symmetric

# Factor in front of (R + eps I)^-1 (z_n - mu) (1 - lam) / N.  Differentiating
# the outer product Zt Zt^T gives 2; "half" keeps the commonly quoted constant 1.
GRAD_CONSTANTS = {"exact": 2.0, "half": 1.0}


@dataclass(frozen=True)
class LossParams:
    eps: float = 1e-8
    alpha: float = 250.0
    dim_normalize: bool = True
    use_big_bang: bool = True

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    big_bang: float
    attraction: float
    ldmi_tracked: float


def _big_bang_scale(params, dim):
    return 1.0 / dim if params.dim_normalize else 1.0


def _terms(r1, r2, batch, params):
    """Cholesky factors plus (big_bang, attraction); big_bang is 0 when disabled."""
    L1 = cholesky(add_scaled_identity(r1, params.eps))
    L2 = cholesky(add_scaled_identity(r2, params.eps))
    diff = batch.z1 - batch.z2
    attraction = float(np.sum(diff * diff)) / diff.size
    big_bang = 0.0
    if params.use_big_bang:
        big_bang = -(logdet_from_cholesky(L1) + logdet_from_cholesky(L2)) * _big_bang_scale(params, batch.dim)
    return L1, L2, big_bang, attraction


def tracked_ldmi(state, eps):
    """Symmetric LDMI of the two branches from the tracked statistics."""
    pair = SecondOrderPair(state.r1, state.r2, state.r12, state.mu1, state.mu2, validate=False)
    return ldmi_symmetric(pair, eps)


def objective(state, batch, params):
    """Fold ``batch`` into the tracker and evaluate the loss.

    Returns ``(LossBreakdown, new_state)``.
    """
    breakdown, new_state, _ = _objective(state, batch, params)
    return breakdown, new_state


def _objective(state, batch, params):
    new_state, z1t, z2t = covtrack.batch_update(state, batch)
    L1, L2, big_bang, attraction = _terms(new_state.r1, new_state.r2, batch, params)
    total = big_bang + params.alpha * attraction
    out = LossBreakdown(total, big_bang, attraction, tracked_ldmi(new_state, params.eps))
    return out, new_state, (L1, L2, z1t, z2t)


def _gradients(batch, lam, params, L1, L2, z1t, z2t, constant):
    n, p = batch.n, batch.dim
    g_att = (2.0 * params.alpha / (n * p)) * (batch.z1 - batch.z2)
    if params.use_big_bang:
        c = -GRAD_CONSTANTS[constant] * (1.0 - lam) / n * _big_bang_scale(params, p)
        g_bb1 = c * cho_solve(L1, z1t)
        g_bb2 = c * cho_solve(L2, z2t)
    else:
        g_bb1 = np.zeros_like(g_att)
        g_bb2 = np.zeros_like(g_att)
    return g_bb1, g_bb2, g_att


def grad_parts(state_prev, batch, params, constant="exact"):
    """Split gradient of ``total`` w.r.t. the projector outputs.

    Returns ``(g_big_bang_1, g_big_bang_2, g_attraction_1)``; the attraction
    gradient on branch 2 is the negation of branch 1's.
    """
    _, new_state, (L1, L2, z1t, z2t) = _objective(state_prev, batch, params)
    return _gradients(batch, state_prev.lam, params, L1, L2, z1t, z2t, constant)


def grad_z(state_prev, batch, params, constant="exact"):
    """Gradient of ``total`` w.r.t. ``Z1`` and ``Z2`` (P x N each)."""
    g_bb1, g_bb2, g_att = grad_parts(state_prev, batch, params, constant)
    return g_bb1 + g_att, g_bb2 - g_att


def objective_and_grad(state_prev, batch, params, constant="exact"):
    """One pass: ``(LossBreakdown, new_state, g1, g2)``.  Used by the trainer."""
    out, new_state, (L1, L2, z1t, z2t) = _objective(state_prev, batch, params)
    g_bb1, g_bb2, g_att = _gradients(batch, state_prev.lam, params, L1, L2, z1t, z2t, constant)
    return out, new_state, g_bb1 + g_att, g_bb2 - g_att


def _fd_total(r1, r2, z1, z2, params):
    """Loss from explicit covariances, via LAPACK ``slogdet``.

    Deliberately independent of the Cholesky path used by :func:`objective`.
    """
    p = z1.shape[0]
    diff = z1 - z2
    total = params.alpha * float(np.sum(diff * diff)) / diff.size
    if params.use_big_bang:
        s1, ld1 = np.linalg.slogdet(r1 + params.eps * np.eye(p))
        s2, ld2 = np.linalg.slogdet(r2 + params.eps * np.eye(p))
        if s1 <= 0 or s2 <= 0:
            raise NotPositiveDefinite("finite-difference probe left the positive definite cone")
        total -= (ld1 + ld2) * _big_bang_scale(params, p)
    return total


def _covariances(state_prev, mu1, mu2, z1, z2):
    lam, n = state_prev.lam, z1.shape[1]
    z1t, z2t = z1 - mu1[:, None], z2 - mu2[:, None]
    r1 = lam * state_prev.r1 + (1.0 - lam) * (z1t @ z1t.T) / n
    r2 = lam * state_prev.r2 + (1.0 - lam) * (z2t @ z2t.T) / n
    return r1, r2


def grad_z_fd(state_prev, batch, params, h=1e-5, freeze_mean=True):
    """Central finite differences of ``total`` over every entry of Z1 and Z2.

    Each perturbation re-runs the batch update from ``state_prev``.  With
    ``freeze_mean`` the means are those of the unperturbed batch, matching
    the stop-gradient used by :func:`grad_z`; without it the mean update is
    differentiated too.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    lam = state_prev.lam
    if freeze_mean:
        means = covtrack.update_means(state_prev, batch)

        def f(z1, z2):
            return _fd_total(*_covariances(state_prev, means.mu1, means.mu2, z1, z2), z1, z2, params)
    else:

        def f(z1, z2):
            mu1 = lam * state_prev.mu1 + (1.0 - lam) * z1.mean(axis=1)
            mu2 = lam * state_prev.mu2 + (1.0 - lam) * z2.mean(axis=1)
            return _fd_total(*_covariances(state_prev, mu1, mu2, z1, z2), z1, z2, params)

    z = [batch.z1.copy(), batch.z2.copy()]
    grads = [np.zeros_like(z[0]), np.zeros_like(z[1])]
    for q in (0, 1):
        for idx in np.ndindex(z[q].shape):
            orig = z[q][idx]
            z[q][idx] = orig + h
            fp = f(z[0], z[1])
            z[q][idx] = orig - h
            fm = f(z[0], z[1])
            z[q][idx] = orig
            grads[q][idx] = (fp - fm) / (2.0 * h)
    return grads[0], grads[1]


def max_relative_error(g, g_ref):
    """Max-norm relative error of a gradient pair against a reference pair."""
    num = max(np.max(np.abs(a - b)) for a, b in zip(g, g_ref))
    den = max(np.max(np.abs(b)) for b in g_ref)
    return float(num / max(den, np.finfo(float).tiny))
