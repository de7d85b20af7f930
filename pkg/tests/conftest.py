"""Shared randomized-instance generators for the test suite."""

import numpy as np

from dualiter.elim import EliminationInstance


def random_inertia_sym(rng, n_neg, n_pos, spread=(0.2, 2.0)):
    """Random symmetric matrix with exactly (n_neg, n_pos) signature."""
    n = n_neg + n_pos
    G, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eigs = np.concatenate([
        -rng.uniform(*spread, size=n_neg),
        rng.uniform(*spread, size=n_pos),
    ])
    return G @ np.diag(eigs) @ G.T


def planted_elimination_instance(rng, r, s, p, q):
    """EliminationInstance that is feasible by construction.

    P is sampled with exact inertia (p negative, q positive); W is backed
    out from a planted center M0 whose columns span a negative subspace of
    P, so the defining inequality is strictly solvable.
    """
    P = random_inertia_sym(rng, p, q)
    eigvals, eigvecs = np.linalg.eigh(P)
    basis = eigvecs[:, :p]
    X_N, Y_N = basis[:p, :], basis[p:, :]
    # generic X_N is invertible; resample if not
    while np.linalg.cond(X_N) > 1e8:
        P = random_inertia_sym(rng, p, q)
        eigvals, eigvecs = np.linalg.eigh(P)
        basis = eigvecs[:, :p]
        X_N, Y_N = basis[:p, :], basis[p:, :]
    M0 = Y_N @ np.linalg.inv(X_N)
    U = rng.standard_normal((r, q))
    V = rng.standard_normal((s, p))
    Z0 = rng.standard_normal((r, s))
    W = M0 - U.T @ Z0 @ V
    return EliminationInstance(U=U, V=V, W=W, P=P)


def random_hurwitz(rng, n, margin=0.2):
    """Random Hurwitz matrix: shift a random matrix left of the axis."""
    A = rng.standard_normal((n, n))
    shift = max(np.linalg.eigvals(A).real.max(), 0.0) + margin + rng.uniform(0.0, 1.0)
    return A - shift * np.eye(n)


def random_stable_ss(rng, n, m, k, strictly_proper=False):
    """Random stable state-space system with mild scaling."""
    from dualiter.plant import StateSpace

    A = random_hurwitz(rng, n)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((k, n))
    D = np.zeros((k, m)) if strictly_proper else 0.3 * rng.standard_normal((k, m))
    return StateSpace(A, B, C, D)


def random_h2_plant(rng, n=3, m_d=1, m_u=1, k_e=1, k_y=1, stable=True,
                    shift=0.6):
    """Random synthesis plant with no feedthrough into the error output."""
    from dualiter.plant import LfrPlant

    A = random_hurwitz(rng, n)
    if not stable:
        A = A + shift * np.eye(n)
    return LfrPlant.from_nominal(
        A,
        rng.standard_normal((n, m_d)),
        rng.standard_normal((n, m_u)),
        rng.standard_normal((k_e, n)),
        rng.standard_normal((k_y, n)),
        None,
        None,
        0.4 * rng.standard_normal((k_y, m_d)),
    )


def random_nominal_plant(rng, n=3, m_d=1, m_u=1, k_e=1, k_y=1, stable=True,
                         shift=0.6):
    """Random nominal synthesis plant; stable=False lifts some modes into
    the right half-plane while staying generically stabilizable."""
    from dualiter.plant import LfrPlant

    A = random_hurwitz(rng, n)
    if not stable:
        A = A + shift * np.eye(n)
    return LfrPlant.from_nominal(
        A,
        rng.standard_normal((n, m_d)),
        rng.standard_normal((n, m_u)),
        rng.standard_normal((k_e, n)),
        rng.standard_normal((k_y, n)),
        0.2 * rng.standard_normal((k_e, m_d)),
        0.4 * rng.standard_normal((k_e, m_u)),
        0.4 * rng.standard_normal((k_y, m_d)),
    )


def random_robust_plant(rng, n=3, p=1, q=1, m_d=2, m_u=1, k_e=2, k_y=1,
                        coupling=0.25, stable=True, shift=0.4):
    """Random plant with an uncertainty channel of moderate authority.

    The performance channels stay tall/wide as in the nominal fixture so
    the one-sided optima sit away from zero; D11 = 0 keeps every frozen
    uncertainty well-posed.
    """
    from dualiter.plant import LfrPlant

    A = random_hurwitz(rng, n)
    if not stable:
        A = A + shift * np.eye(n)
    s = 0.4 * coupling
    return LfrPlant(
        A=A,
        B1=coupling * rng.standard_normal((n, q)),
        B2=rng.standard_normal((n, m_d)),
        B3=rng.standard_normal((n, m_u)),
        C1=coupling * rng.standard_normal((p, n)),
        C2=rng.standard_normal((k_e, n)),
        C3=rng.standard_normal((k_y, n)),
        D11=np.zeros((p, q)),
        D12=s * rng.standard_normal((p, m_d)),
        D13=s * rng.standard_normal((p, m_u)),
        D21=s * rng.standard_normal((k_e, q)),
        D22=0.2 * rng.standard_normal((k_e, m_d)),
        D23=0.4 * rng.standard_normal((k_e, m_u)),
        D31=s * rng.standard_normal((k_y, q)),
        D32=0.4 * rng.standard_normal((k_y, m_d)),
        p=p, q=q,
    )


def random_value_set(rng, p=1, q=1, count=3, radius=0.5):
    """Polytopic value set whose hull contains zero (generators in +/-
    pairs, one unpaired extra when count is odd)."""
    from dualiter.robust import ValueSet

    gens = []
    while len(gens) < count - 1:
        G = radius * rng.standard_normal((q, p))
        gens.extend([G, -G])
    if len(gens) < count:
        gens.append(radius * rng.standard_normal((q, p)))
    return ValueSet.polytope(gens[:count])
