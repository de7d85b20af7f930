"""Constructive dualization, elimination and projection lemmas.

The elimination lemma asks for Z with

    [I; U^T Z V + W]^T P [I; U^T Z V + W] < 0

and is solvable exactly when two projected conditions hold, one in P and one
in P^{-1}.  `eliminate_solve` follows the constructive proof: SVD reductions
of U and V, a Schur complement onto the coupled core, and an eigenvector
extraction whose span realizes the inequality.  Every synthesis gain in this
package (static, full-order, full-information, full-actuation) is recovered
through this one routine.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.linalg

from . import matops

__all__ = [
    "EliminationInstance",
    "EliminationResult",
    "dualize_check",
    "eliminate_solve",
    "project_solve",
]

# relative eigenvalue tolerance for inertia decisions
INERTIA_RTOL = 1e-9


@dataclasses.dataclass(frozen=True)
class EliminationInstance:
    """Data (U, V, W, P) of one elimination problem.

    Shapes: U is r x q, V is s x p, W is q x p, P is (p+q) x (p+q)
    symmetric, nonsingular with exactly p negative eigenvalues.  Borderline
    spectra (eigenvalues within ``INERTIA_RTOL`` of zero, relatively) are
    rejected rather than silently rounded.
    """

    U: np.ndarray
    V: np.ndarray
    W: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        U = matops.as_matrix(self.U, "U")
        V = matops.as_matrix(self.V, "V")
        W = matops.as_matrix(self.W, "W")
        P = matops.as_symmetric(self.P, "P")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "P", P)
        q, p = W.shape
        if U.shape[1] != q:
            raise ValueError(f"U must have {q} columns to match W, got {U.shape[1]}")
        if V.shape[1] != p:
            raise ValueError(f"V must have {p} columns to match W, got {V.shape[1]}")
        if P.shape != (p + q, p + q):
            raise ValueError(f"P must be {(p + q, p + q)}, got {P.shape}")
        n_neg, n_zero, _ = matops.inertia(P, tol=INERTIA_RTOL * _spectral_radius(P))
        if n_zero:
            raise ValueError("P has a borderline (near-zero) eigenvalue")
        if n_neg != p:
            raise ValueError(
                f"P must have exactly {p} negative eigenvalues, found {n_neg}"
            )

    @property
    def p(self) -> int:
        return self.W.shape[1]

    @property
    def q(self) -> int:
        return self.W.shape[0]


@dataclasses.dataclass
class EliminationResult:
    """Outcome of eliminate_solve / project_solve.

    When solved, ``z`` satisfies the defining inequality with margin
    ``delta`` (largest eigenvalue of the substituted expression is
    ``-delta``).  Otherwise ``failed_conditions`` lists which of the two
    solvability conditions ("primal": the V-projected inequality in P,
    "dual": the U-projected inequality in P^{-1}) were violated.
    """

    z: np.ndarray | None
    status: str  # "solved" or "infeasible"
    failed_conditions: tuple[str, ...] = ()
    delta: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "solved"


def _spectral_radius(M: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(M)))) if M.size else 0.0


def dualize_check(A, B, P) -> tuple[bool, bool]:
    """Evaluate both sides of the dualization lemma.

    Returns ``(primal_holds, dual_holds)`` with
    primal = (A^T P A < 0 and B^T P B >= 0) and
    dual = (U^T P^{-1} U > 0 and V^T P^{-1} V <= 0) for U, V basis matrices
    of ker(A^T), ker(B^T).  The lemma asserts the two are equivalent for
    nonsingular (A, B) and P.
    """
    A = matops.as_matrix(A, "A")
    B = matops.as_matrix(B, "B")
    P = matops.as_symmetric(P, "P")
    n = P.shape[0]
    if A.shape[0] != n or B.shape[0] != n or A.shape[1] + B.shape[1] != n:
        raise ValueError("(A, B) must form a square composite matching P")
    AB = np.hstack([A, B])
    sv = np.linalg.svd(AB, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise ValueError("(A, B) is singular")
    eigs_P = np.linalg.eigvalsh(P)
    if np.min(np.abs(eigs_P)) <= 1e-12 * np.max(np.abs(eigs_P)):
        raise ValueError("P is singular")

    def _maxeig(M):
        return float(np.max(np.linalg.eigvalsh(matops.sym(M)))) if M.size else -np.inf

    def _mineig(M):
        return float(np.min(np.linalg.eigvalsh(matops.sym(M)))) if M.size else np.inf

    atol = 1e-9 * (1.0 + np.max(np.abs(eigs_P)))
    primal = _maxeig(A.T @ P @ A) < 0 and _mineig(B.T @ P @ B) >= -atol
    Pinv = np.linalg.inv(P)
    U = matops.null_basis(A.T)
    V = matops.null_basis(B.T)
    dual = _mineig(U.T @ Pinv @ U) > 0 and _maxeig(V.T @ Pinv @ V) <= atol
    return primal, dual


def _reduced_svd_factors(M: np.ndarray, rtol: float = 1e-9):
    """Factor M = T [I 0; 0 0] W^T with T nonsingular and W orthogonal."""
    r, c = M.shape
    if M.size and np.any(M):
        Pm, s, Qt = np.linalg.svd(M)
        rank = int(np.count_nonzero(s >= rtol * s[0]))
    else:
        Pm, s, Qt = np.eye(r), np.zeros(min(r, c)), np.eye(c)
        rank = 0
    T = Pm @ scipy.linalg.block_diag(np.diag(s[:rank]), np.eye(r - rank))
    return T, Qt.T, rank


def eliminate_solve(inst: EliminationInstance, seed: int = 0) -> EliminationResult:
    """Solve the elimination inequality constructively.

    Checks the two solvability conditions first and reports failures; when
    both hold, builds Z by the proof's reduction and verifies the result by
    substitution.  The free blocks of the reduced Z are set to zero.
    """
    U, V, W, P = inst.U, inst.V, inst.W, inst.P
    p, q = inst.p, inst.q
    r, s = U.shape[0], V.shape[0]

    failed = []
    Vperp = matops.null_basis(V)
    IW = np.vstack([np.eye(p), W])
    if Vperp.shape[1]:
        primal_proj = matops.sym(Vperp.T @ IW.T @ P @ IW @ Vperp)
        if np.max(np.linalg.eigvalsh(primal_proj)) >= 0:
            failed.append("primal")
    Pinv = np.linalg.inv(P)
    Uperp = matops.null_basis(U)
    WI = np.vstack([-W.T, np.eye(q)])
    if Uperp.shape[1]:
        dual_proj = matops.sym(Uperp.T @ WI.T @ Pinv @ WI @ Uperp)
        if np.min(np.linalg.eigvalsh(dual_proj)) <= 0:
            failed.append("dual")
    if failed:
        return EliminationResult(None, "infeasible", tuple(failed))

    Tu, Wu, q1 = _reduced_svd_factors(U)
    Tv, Wv, p1 = _reduced_svd_factors(V)
    q2, p2 = q - q1, p - p1

    Phat = matops.sym(scipy.linalg.block_diag(Wv, Wu).T @ P @ scipy.linalg.block_diag(Wv, Wu))
    What = Wu.T @ W @ Wv
    IWhat = np.vstack([np.eye(p), What])
    sel_q1 = np.vstack([np.zeros((p, q1)), np.eye(q1), np.zeros((q2, q1))])
    R = np.hstack([IWhat[:, :p1], sel_q1])
    S = IWhat[:, p1:]

    core = matops.sym(R.T @ Phat @ R)
    if p2:
        PS = R.T @ Phat @ S
        core = matops.sym(core - PS @ np.linalg.solve(matops.sym(S.T @ Phat @ S), PS.T))

    eigvals, eigvecs = np.linalg.eigh(core)
    if p1 and eigvals[p1 - 1] >= 0:
        # unreachable when the conditions genuinely hold; the proof pins the
        # core's negative eigenvalue count at p1
        raise ValueError("core inertia inconsistent with solvability conditions")
    Zc = eigvecs[:, :p1]
    Z1, Z2 = Zc[:p1, :], Zc[p1:, :]

    rng = np.random.default_rng(seed)
    eta = 1e-10
    for _ in range(60):
        sv = np.linalg.svd(Z1, compute_uv=False) if p1 else np.array([1.0])
        margin_ok = (
            np.max(np.linalg.eigvalsh(matops.sym(np.vstack([Z1, Z2]).T @ core @ np.vstack([Z1, Z2])))) < 0
            if p1
            else True
        )
        if (not p1 or sv[-1] > 1e-12 * max(1.0, sv[0])) and margin_ok:
            break
        G, _ = np.linalg.qr(rng.standard_normal((p1, p1)))
        Z1 = Zc[:p1, :] + eta * G
        eta *= 2.0
    else:
        raise ValueError("could not restore nonsingularity of the core factor")

    Zhat11 = Z2 @ np.linalg.inv(Z1) if p1 else np.zeros((q1, 0))
    Zhat = np.zeros((r, s))
    Zhat[:q1, :p1] = Zhat11
    Z = np.linalg.solve(Tu.T, Zhat)
    Z = np.linalg.solve(Tv.T, Z.T).T

    inner = np.vstack([np.eye(p), U.T @ Z @ V + W])
    residual = matops.sym(inner.T @ P @ inner)
    delta = -float(np.max(np.linalg.eigvalsh(residual)))
    if delta <= 0:
        raise ValueError(f"constructed Z lost definiteness (margin {delta:.3e})")
    return EliminationResult(Z, "solved", (), delta)


def project_solve(U, V, Q, seed: int = 0) -> EliminationResult:
    """Solve Q + U^T Z V + V^T Z^T U < 0 for Z.

    Special case of the elimination lemma with P = [Q I; I 0] and W = 0;
    solvable iff both kernel-projected inequalities Uperp^T Q Uperp < 0 and
    Vperp^T Q Vperp < 0 hold.
    """
    U = matops.as_matrix(U, "U")
    V = matops.as_matrix(V, "V")
    Q = matops.as_symmetric(Q, "Q")
    n = Q.shape[0]
    if U.shape[1] != n or V.shape[1] != n:
        raise ValueError("U and V must have as many columns as Q")
    # scale Q to unit size so [Q I; I 0] keeps a healthy inertia margin;
    # Z rescales linearly on the way out
    c = max(1.0, float(np.max(np.abs(Q))) if Q.size else 1.0)
    P = np.block([[Q / c, np.eye(n)], [np.eye(n), np.zeros((n, n))]])
    inst = EliminationInstance(U=U, V=V, W=np.zeros((n, n)), P=P)
    result = eliminate_solve(inst, seed=seed)
    if result.ok:
        Z = result.z * c
        M = U.T @ Z @ V
        delta = -float(np.max(np.linalg.eigvalsh(matops.sym(Q + M + M.T))))
        return EliminationResult(Z, "solved", (), delta)
    return result
