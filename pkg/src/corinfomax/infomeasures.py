"""Log-determinant entropy and mutual information from second-order statistics.

All measures take an explicit diagonal perturbation ``eps``.  The
``(dim/2) log(2 pi e)`` constants are kept, so entropies are comparable
with the Gaussian differential entropy at ``eps = 0`` and the joint /
conditional chain rule holds exactly.
"""

from dataclasses import dataclass

import numpy as np

from .densela import (
    ShapeError,
    add_scaled_identity,
    as_matrix,
    as_vector,
    cholesky,
    cho_solve,
    logdet_spd,
    sym_eigenvalues,
    symmetrize,
)

LOG_2PI_E = np.log(2.0 * np.pi * np.e)


@dataclass(frozen=True)
class SecondOrderPair:
    """Auto-/cross-covariances and means of a pair of random vectors.

    Construction checks symmetry of the auto-covariances and that the joint
    block covariance is PSD (smallest eigenvalue >= -1e-9, scaled by the
    largest).  Pass ``validate=False`` to skip the eigenvalue check.
    """

    r_x: np.ndarray
    r_y: np.ndarray
    r_xy: np.ndarray
    mu_x: np.ndarray = None
    mu_y: np.ndarray = None
    validate: bool = True

    def __post_init__(self):
        r_x, r_y, r_xy = as_matrix(self.r_x), as_matrix(self.r_y), as_matrix(self.r_xy)
        px, py = r_x.shape[0], r_y.shape[0]
        if r_x.shape != (px, px) or r_y.shape != (py, py) or r_xy.shape != (px, py):
            raise ShapeError(f"inconsistent blocks: r_x {r_x.shape}, r_y {r_y.shape}, r_xy {r_xy.shape}")
        mu_x = np.zeros(px) if self.mu_x is None else as_vector(self.mu_x)
        mu_y = np.zeros(py) if self.mu_y is None else as_vector(self.mu_y)
        if mu_x.shape != (px,) or mu_y.shape != (py,):
            raise ShapeError("mean vectors do not match covariance dimensions")
        for name, r in (("r_x", r_x), ("r_y", r_y)):
            if np.linalg.norm(r - r.T) > 1e-9 * max(np.linalg.norm(r), 1.0):
                raise ValueError(f"{name} is not symmetric")
        object.__setattr__(self, "r_x", r_x)
        object.__setattr__(self, "r_y", r_y)
        object.__setattr__(self, "r_xy", r_xy)
        object.__setattr__(self, "mu_x", mu_x)
        object.__setattr__(self, "mu_y", mu_y)
        if self.validate:
            eig = sym_eigenvalues(joint_covariance(self))
            if eig[-1] < -1e-9 * max(1.0, eig[0]):
                raise ValueError(f"joint covariance is not PSD (min eigenvalue {eig[-1]:.3e})")

    @property
    def dims(self):
        return self.r_x.shape[0], self.r_y.shape[0]

    def swapped(self):
        """The same pair with the roles of x and y exchanged."""
        return SecondOrderPair(self.r_y, self.r_x, self.r_xy.T, self.mu_y, self.mu_x, validate=False)

    @classmethod
    def from_samples(cls, x, y, validate=True):
        """Empirical (1/M normalized) statistics of column samples ``x`` (Px x M), ``y`` (Py x M)."""
        x, y = as_matrix(x), as_matrix(y)
        if x.shape[1] != y.shape[1]:
            raise ShapeError("x and y need the same number of samples")
        m = x.shape[1]
        mx, my = x.mean(axis=1), y.mean(axis=1)
        xc, yc = x - mx[:, None], y - my[:, None]
        return cls(symmetrize(xc @ xc.T / m), symmetrize(yc @ yc.T / m), xc @ yc.T / m, mx, my, validate=validate)


def ld_entropy(r, eps):
    r = as_matrix(r)
    return 0.5 * logdet_spd(add_scaled_identity(r, eps)) + 0.5 * r.shape[0] * LOG_2PI_E


def joint_covariance(p):
    """Block covariance ``[[r_x, r_xy], [r_xy^T, r_y]]`` of the stacked vector."""
    return np.block([[p.r_x, p.r_xy], [p.r_xy.T, p.r_y]])


def mmse_residual_covariance(p, eps):
    """Error covariance of the affine MMSE estimate of x from y.

    ``r_x - r_xy (r_y + eps I)^-1 r_xy^T``, without any outer perturbation.
    """
    L = cholesky(add_scaled_identity(p.r_y, eps))
    return symmetrize(p.r_x - p.r_xy @ cho_solve(L, p.r_xy.T))


def affine_mmse(p, eps):
    """Best affine estimator ``x_hat = a @ y + b`` (``eps``-regularized)."""
    L = cholesky(add_scaled_identity(p.r_y, eps))
    a = cho_solve(L, p.r_xy.T).T
    b = p.mu_x - a @ p.mu_y
    return a, b


def conditional_ld_entropy(p, eps):
    resid = mmse_residual_covariance(p, eps)
    return 0.5 * logdet_spd(add_scaled_identity(resid, eps)) + 0.5 * p.dims[0] * LOG_2PI_E


def ldmi(p, eps):
    """Asymmetric form h(x) - h(x | y)."""
    return ld_entropy(p.r_x, eps) - conditional_ld_entropy(p, eps)


def ldmi_symmetric(p, eps):
    """Average of the two asymmetric forms, written as four log-determinants."""
    lx = logdet_spd(add_scaled_identity(p.r_x, eps))
    ly = logdet_spd(add_scaled_identity(p.r_y, eps))
    ex = logdet_spd(add_scaled_identity(mmse_residual_covariance(p, eps), eps))
    ey = logdet_spd(add_scaled_identity(mmse_residual_covariance(p.swapped(), eps), eps))
    return 0.25 * (lx + ly - ex - ey)
