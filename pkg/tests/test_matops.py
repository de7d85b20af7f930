"""Unit tests for the shared linear algebra layer."""

from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dualiter import matops


def _region(Q, S, R):
    # Duck-typed stand-in for plant.LmiRegion; matops only reads Q, S, R.
    return SimpleNamespace(
        Q=np.atleast_2d(np.asarray(Q, float)),
        S=np.atleast_2d(np.asarray(S, float)),
        R=np.atleast_2d(np.asarray(R, float)),
    )


HALF_PLANE = _region([[0.0]], [[1.0]], [[0.0]])

finite_entries = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


class TestNullBasis:
    def test_row_vector(self):
        N = matops.null_basis(np.array([[1.0, 0.0]]))
        assert N.shape == (2, 1)
        np.testing.assert_allclose(np.abs(N[:, 0]), [0.0, 1.0], atol=1e-12)

    def test_full_column_rank_gives_zero_columns(self):
        N = matops.null_basis(np.eye(2))
        assert N.shape == (2, 0)

    def test_zero_matrix_gives_identity(self):
        N = matops.null_basis(np.zeros((3, 4)))
        np.testing.assert_allclose(N, np.eye(4))

    def test_random_rank_deficient(self):
        rng = np.random.default_rng(7)
        M = rng.standard_normal((3, 5))
        N = matops.null_basis(M)
        assert N.shape == (5, 2)
        assert np.max(np.abs(M @ N)) <= 1e-10 * (1 + np.max(np.abs(M)))
        np.testing.assert_allclose(N.T @ N, np.eye(2), atol=1e-12)

    def test_rtol_must_be_positive(self):
        with pytest.raises(ValueError):
            matops.null_basis(np.eye(2), rtol=0.0)

    @given(
        st.integers(1, 6), st.integers(1, 6), st.integers(0, 6),
        st.randoms(use_true_random=False),
    )
    @settings(max_examples=200, deadline=None)
    def test_residual_and_orthonormality(self, m, n, r, rnd):
        # Planted rank r = min(m, n, r): singular values are either O(1) or
        # machine-precision zero, never straddling the rank cutoff.
        rng = np.random.default_rng(rnd.randrange(2**32))
        r = min(m, n, r)
        M = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
        N = matops.null_basis(M)
        assert N.shape[0] == n
        assert N.shape[1] >= n - r
        if N.shape[1]:
            assert np.max(np.abs(M @ N)) <= 1e-10 * (1 + np.max(np.abs(M)))
            np.testing.assert_allclose(N.T @ N, np.eye(N.shape[1]), atol=1e-10)


class TestKron:
    def test_identity_blockdiag(self):
        M = np.array([[1.0, 2.0], [3.0, 4.0]])
        K = matops.kron(np.eye(2), M)
        expected = np.block([[M, np.zeros((2, 2))], [np.zeros((2, 2)), M]])
        np.testing.assert_allclose(K, expected)

    def test_scalar_factor(self):
        B = np.array([[1.0, -1.0], [0.5, 2.0]])
        np.testing.assert_allclose(matops.kron([[2.0]], B), 2 * B)

    @given(
        st.integers(1, 3), st.integers(1, 3), st.integers(1, 3),
        st.integers(1, 3), st.integers(1, 3), st.integers(1, 3),
        st.randoms(use_true_random=False),
    )
    @settings(max_examples=50, deadline=None)
    def test_mixed_product(self, ra, ca, rb, cb, cc, cd, rnd):
        rng = np.random.default_rng(rnd.randrange(2**32))
        A = rng.standard_normal((ra, ca))
        B = rng.standard_normal((rb, cb))
        C = rng.standard_normal((ca, cc))
        D = rng.standard_normal((cb, cd))
        left = matops.kron(A, B) @ matops.kron(C, D)
        right = matops.kron(A @ C, B @ D)
        np.testing.assert_allclose(left, right, atol=1e-12 * (1 + np.max(np.abs(right))))

    def test_transpose_identity(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((2, 4))
        B = rng.standard_normal((3, 2))
        np.testing.assert_allclose(matops.kron(A, B).T, matops.kron(A.T, B.T), atol=1e-12)


class TestEigsInRegion:
    def test_stable_scalar_half_plane(self):
        inside, eigs = matops.eigs_in_region([[-1.0]], HALF_PLANE)
        assert inside
        np.testing.assert_allclose(eigs, [-1.0])

    def test_disc_excludes_fast_pole(self):
        # disc of radius 2: Q = -r^2, S = 0, R = 1 encodes |s| < r
        disc = _region([[-4.0]], [[0.0]], [[1.0]])
        inside, _ = matops.eigs_in_region([[-3.0]], disc)
        assert not inside

    def test_half_disc_matches_direct_evaluation(self):
        r = 2.0
        half_disc = _region(
            [[-r * r, 0.0], [0.0, 0.0]],
            [[0.0, 0.0], [0.0, 1.0]],
            [[1.0, 0.0], [0.0, 0.0]],
        )
        rng = np.random.default_rng(11)
        for _ in range(50):
            A = rng.standard_normal((4, 4))
            inside, eigs = matops.eigs_in_region(A, half_disc)
            direct = all(abs(s) < r and s.real < 0 for s in eigs)
            assert inside == direct

    def test_half_plane_agrees_with_spectral_abscissa(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            n = rng.integers(1, 6)
            A = rng.standard_normal((n, n))
            inside, eigs = matops.eigs_in_region(A, HALF_PLANE)
            assert inside == (np.max(eigs.real) < 0)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            matops.eigs_in_region(np.zeros((2, 3)), HALF_PLANE)


class TestSolveLyapunov:
    def test_scalar(self):
        W = matops.solve_lyapunov([[-1.0]], [[2.0]])
        np.testing.assert_allclose(W, [[1.0]])

    def test_identity(self):
        W = matops.solve_lyapunov(-np.eye(2), np.eye(2))
        np.testing.assert_allclose(W, np.eye(2) / 2)

    def test_random_hurwitz_residual(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            n = int(rng.integers(1, 7))
            A = rng.standard_normal((n, n)) - (n + 2) * np.eye(n)
            Q = rng.standard_normal((n, n))
            Q = Q @ Q.T
            W = matops.solve_lyapunov(A, Q)
            res = np.max(np.abs(A @ W + W @ A.T + Q))
            assert res <= 1e-8 * max(np.max(np.abs(Q)), 1.0)
            np.testing.assert_allclose(W, W.T, atol=1e-12)

    def test_singular_pairing_rejected(self):
        with pytest.raises(ValueError, match="singular"):
            matops.solve_lyapunov(np.diag([1.0, -1.0]), np.eye(2))


class TestValidation:
    def test_as_matrix_rejects_nan(self):
        with pytest.raises(ValueError, match="NaN"):
            matops.as_matrix([[np.nan]])

    def test_as_symmetric_rejects_asymmetry(self):
        with pytest.raises(ValueError, match="symmetric"):
            matops.as_symmetric([[0.0, 1.0], [0.0, 0.0]])

    def test_inertia_counts(self):
        neg, zero, pos = matops.inertia(np.diag([-2.0, 0.0, 3.0, 4.0]))
        assert (neg, zero, pos) == (1, 1, 2)
