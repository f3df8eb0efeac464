"""Dense linear algebra kernels used by the information measures and the loss.

Matrices are plain 2-D ``float64`` numpy arrays (row-major), vectors are 1-D
arrays.  Everything here is a pure function of its inputs.
"""

import logging

import numpy as np

log = logging.getLogger(__name__)


class ShapeError(ValueError):
    """Operand dimensions are inconsistent."""


class NotPositiveDefinite(np.linalg.LinAlgError):
    """A Cholesky pivot fell at or below the allowed floor."""

    def __init__(self, msg, pivot_index=None):
        super().__init__(msg)
        self.pivot_index = pivot_index


def as_matrix(a):
    """Coerce to a finite 2-D float64 array."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def as_vector(v):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def _square(a):
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    return a


def matmul(a, b):
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def symmetrize(a):
    """Return ``(a + a.T) / 2``; the result is bitwise symmetric."""
    a = _square(a)
    return 0.5 * (a + a.T)


def add_scaled_identity(a, eps):
    a = _square(a)
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    out = a.copy()
    out[np.diag_indices_from(out)] += eps
    return out


def cholesky(a, floor=0.0):
    """Lower-triangular Cholesky factor ``L`` with ``L @ L.T == a``.

    Left-looking (Cholesky-Crout) column sweep.  Only the lower triangle of
    ``a`` is read.  Raises :class:`NotPositiveDefinite` if a pivot is
    ``<= floor``.
    """
    a = _square(a)
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        row = L[j, :j]
        d = a[j, j] - row @ row
        if not d > floor:
            raise NotPositiveDefinite(
                f"pivot {j} is {d:.3e} (floor {floor:.1e}); matrix is not positive definite",
                pivot_index=j,
            )
        ljj = np.sqrt(d)
        L[j, j] = ljj
        if j + 1 < n:
            L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ row) / ljj
    return L


def logdet_from_cholesky(L):
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def logdet_spd(a, floor=0.0):
    return logdet_from_cholesky(cholesky(a, floor=floor))


def forward_substitution(L, b):
    """Solve ``L X = b`` for lower-triangular ``L``."""
    n = L.shape[0]
    X = np.empty_like(b)
    for i in range(n):
        X[i] = (b[i] - L[i, :i] @ X[:i]) / L[i, i]
    return X


def back_substitution(U, b):
    """Solve ``U X = b`` for upper-triangular ``U``."""
    n = U.shape[0]
    X = np.empty_like(b)
    for i in range(n - 1, -1, -1):
        X[i] = (b[i] - U[i, i + 1:] @ X[i + 1:]) / U[i, i]
    return X


def cho_solve(L, b):
    """Solve ``(L L^T) X = b`` given the Cholesky factor."""
    b = np.asarray(b, dtype=np.float64)
    vec = b.ndim == 1
    if vec:
        b = b[:, None]
    if b.shape[0] != L.shape[0]:
        raise ShapeError(f"rhs has {b.shape[0]} rows, factor has {L.shape[0]}")
    X = back_substitution(L.T, forward_substitution(L, b))
    return X[:, 0] if vec else X


def solve_spd(a, b, floor=0.0):
    a = _square(a)
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != a.shape[0]:
        raise ShapeError(f"cannot solve {a.shape} system with rhs {b.shape}")
    return cho_solve(cholesky(a, floor=floor), b)


def inverse_spd(a, floor=0.0):
    a = _square(a)
    inv = solve_spd(a, np.eye(a.shape[0]), floor=floor)
    return symmetrize(inv)


def _round_robin_pairs(n):
    """Disjoint index pairs covering every (p, q) once per sweep.

    Classic tournament schedule: ``m - 1`` rounds of ``m / 2`` disjoint
    pairs, where ``m`` is ``n`` rounded up to even.  A dummy index ``n`` pads
    odd sizes and is filtered out.
    """
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for k in range(m // 2):
            p, q = players[k], players[m - 1 - k]
            if p < n and q < n:
                ps.append(min(p, q))
                qs.append(max(p, q))
        rounds.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def sym_eigenvalues(a, tol=1e-12, max_sweeps=100, sym_tol=1e-9):
    """Eigenvalues of a symmetric matrix, sorted descending.

    Cyclic Jacobi rotations in a round-robin (parallel) ordering: each round
    annihilates ``n/2`` disjoint off-diagonal pairs at once.  Sweeps stop once
    the off-diagonal Frobenius norm drops below ``tol * ||a||_F``.
    """
    a = _square(a)
    fro = np.linalg.norm(a)
    if np.linalg.norm(a - a.T) > sym_tol * max(fro, np.finfo(float).tiny):
        raise ValueError("sym_eigenvalues requires a symmetric matrix")
    A = symmetrize(a).copy()
    n = A.shape[0]
    if n == 1 or fro == 0.0:
        return np.sort(np.diag(A))[::-1].copy()

    rounds = _round_robin_pairs(n)
    target = tol * fro
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= target:
            break
        for p, q in rounds:
            apq = A[p, q]
            active = apq != 0.0
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            with np.errstate(over="ignore", divide="ignore"):
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                # hypot avoids overflowing theta**2; t -> 0 for huge theta
                t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # A <- J^T A J with J[p,p]=J[q,q]=c, J[p,q]=s, J[q,p]=-s
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = c * Ap - s * Aq
            A[:, q] = s * Ap + c * Aq
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            A[p, q] = 0.0
            A[q, p] = 0.0
    else:
        log.warning("Jacobi eigensolver hit max_sweeps=%d before converging", max_sweeps)
    return np.sort(np.diag(A))[::-1].copy()


def escalate_jitter(fn, eps, retries=3, factor=10.0):
    """Call ``fn(eps)``; on :class:`NotPositiveDefinite` retry with larger eps.

    Returns ``(result, eps_used)``.  Each escalation is logged so a drifting
    covariance tracker stays visible.
    """
    for attempt in range(retries + 1):
        try:
            return fn(eps), eps
        except NotPositiveDefinite:
            if attempt == retries:
                raise
            new_eps = eps * factor if eps > 0 else 1e-12
            log.warning("not positive definite at eps=%.1e, retrying with eps=%.1e", eps, new_eps)
            eps = new_eps
