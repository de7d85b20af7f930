"""Dense real linear algebra shared by every synthesis module.

Null-space bases, Kronecker products, eigenvalue region tests and Lyapunov
solves.  Everything here is pure and deterministic; inputs are validated and
converted to ``float`` ndarrays once at the boundary.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg

if TYPE_CHECKING:
    from .plant import LmiRegion

__all__ = [
    "as_matrix",
    "as_symmetric",
    "sym",
    "null_basis",
    "kron",
    "eigs_in_region",
    "solve_lyapunov",
    "inertia",
]


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Validate and return ``M`` as a 2D float array with finite entries."""
    A = np.atleast_2d(np.asarray(M, dtype=float))
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return A


def as_symmetric(M, name: str = "matrix") -> np.ndarray:
    """Validate symmetry of ``M`` and return its symmetrized copy.

    The asymmetry tolerance is ``1e-12 * (1 + max|M|)``; anything worse is an
    error rather than something to silently average away.
    """
    A = as_matrix(M, name)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    scale = 1.0 + np.max(np.abs(A)) if A.size else 1.0
    if A.size and np.max(np.abs(A - A.T)) > 1e-12 * scale:
        raise ValueError(f"{name} is not symmetric")
    return sym(A)


def sym(M: np.ndarray) -> np.ndarray:
    """Symmetric part ``(M + M^T) / 2``."""
    return (M + M.T) / 2.0


def null_basis(M, rtol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of the right null space of ``M``.

    Parameters
    ----------
    M : array_like
        Real matrix whose kernel is wanted.
    rtol : float
        Rank cutoff relative to the largest singular value; singular values
        below ``rtol * sigma_max`` count as zero.

    Returns
    -------
    numpy.ndarray
        Matrix ``N`` with orthonormal columns and ``M @ N = 0``.  When ``M``
        has full column rank this has zero columns (shape ``(n, 0)``).
    """
    if rtol <= 0:
        raise ValueError("rtol must be positive")
    A = as_matrix(M, "M")
    n = A.shape[1]
    if n == 0:
        return np.zeros((0, 0))
    if A.shape[0] == 0 or not np.any(A):
        return np.eye(n)
    _, s, Vh = np.linalg.svd(A)
    rank = int(np.count_nonzero(s >= rtol * s[0]))
    return Vh[rank:].T.copy()


def kron(A, B) -> np.ndarray:
    """Kronecker product of two real matrices."""
    return np.kron(as_matrix(A, "A"), as_matrix(B, "B"))


def eigs_in_region(
    A,
    region: "LmiRegion",
    margin: float = 0.0,
) -> tuple[bool, np.ndarray]:
    """Test whether every eigenvalue of ``A`` lies in an LMI region.

    A point ``s`` belongs to the region with data ``(Q, S, R)`` when the
    Hermitian matrix ``Q + s S + conj(s) S^T + |s|^2 R`` is negative
    definite.  The open left half-plane is the special case ``Q=0, S=1,
    R=0``, for which this reduces to the Hurwitz test.

    Returns
    -------
    (bool, numpy.ndarray)
        Flag (all eigenvalues strictly inside, with ``margin``) and the
        eigenvalue array.
    """
    A = as_matrix(A, "A")
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    eigs = np.linalg.eigvals(A)
    Q, S, R = region.Q, region.S, region.R
    inside = True
    for s in eigs:
        H = Q + s * S + np.conj(s) * S.T + (abs(s) ** 2) * R
        if np.max(np.linalg.eigvalsh(H)) >= -margin:
            inside = False
            break
    return inside, eigs


def solve_lyapunov(A, Q) -> np.ndarray:
    """Solve ``A W + W A^T + Q = 0`` for symmetric ``W``.

    Requires the spectrum of ``A`` to stay away from the anti-stability
    pairing ``lambda_i + conj(lambda_j) = 0`` (Hurwitz ``A`` in particular
    is fine).  The result is checked by substitution to a residual of
    ``1e-8 * ||Q||``.
    """
    A = as_matrix(A, "A")
    Q = as_symmetric(Q, "Q")
    if A.shape[0] != A.shape[1] or A.shape[0] != Q.shape[0]:
        raise ValueError("A and Q must be square of equal dimension")
    eigs = np.linalg.eigvals(A)
    scale = max(1.0, float(np.max(np.abs(eigs))) if eigs.size else 1.0)
    pairs = eigs[:, None] + np.conj(eigs)[None, :]
    if eigs.size and np.min(np.abs(pairs)) < 1e-9 * scale:
        raise ValueError(
            "Lyapunov equation is singular: A has eigenvalue pair with "
            "lambda_i + conj(lambda_j) ~= 0"
        )
    W = sym(scipy.linalg.solve_continuous_lyapunov(A, -Q))
    residual = np.max(np.abs(A @ W + W @ A.T + Q))
    qnorm = float(np.max(np.abs(Q))) if Q.size else 0.0
    if residual > 1e-8 * max(qnorm, 1e-300):
        raise ValueError(f"Lyapunov solve lost accuracy: residual {residual:.3e}")
    return W


def inertia(P, tol: float | None = None) -> tuple[int, int, int]:
    """Eigenvalue signature ``(n_negative, n_zero, n_positive)`` of symmetric ``P``.

    ``tol`` defaults to ``1e-9`` times the spectral radius; eigenvalues
    within ``tol`` of zero are counted as zero so callers can reject
    borderline matrices explicitly.
    """
    P = as_symmetric(P, "P")
    if P.size == 0:
        return (0, 0, 0)
    eigs = np.linalg.eigvalsh(P)
    if tol is None:
        tol = 1e-9 * max(np.max(np.abs(eigs)), 1e-300)
    n_neg = int(np.count_nonzero(eigs < -tol))
    n_pos = int(np.count_nonzero(eigs > tol))
    return (n_neg, P.shape[0] - n_neg - n_pos, n_pos)
