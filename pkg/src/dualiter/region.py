"""Static output-feedback H-infinity synthesis with pole-region constraints.

The closed-loop eigenvalues are confined to a convex region of the complex
plane described by a symmetric matrix [Q S; S^T R] with R positive
semidefinite.  All certificates couple the state space with the region
through Kronecker products; the resulting synthesis inequalities decompose
into a flat performance block (the parameter-transformed step of the plain
H-infinity iteration) and region blocks whose quadratic R-term is
Schur-complemented against the certificate.
"""

import dataclasses
import time

import cvxpy as cp
import numpy as np

from . import matops, sdp
from .hinf import (
    HinfStepResult,
    IterationReport,
    _INIT_EPS_LADDER,
    _check_side_gain,
    _nominal,
)
from .plant import (
    Controller,
    LfrPlant,
    LmiRegion,
    StateSpace,
    close_loop,
    hinf_norm,
)


@dataclasses.dataclass(frozen=True)
class RegionAnalysisCertificate:
    """Stability and performance certificates; identical objects when a
    common certificate is enforced."""

    X_s: np.ndarray
    X_p: np.ndarray


@dataclasses.dataclass(frozen=True)
class RegionStepResult:
    """Outcome of the multi-objective step: the static gain together with
    the pair of certificates it was extracted from."""

    gamma: float
    certificate: RegionAnalysisCertificate
    controller: Controller
    solver_status: str


# --- region construction --------------------------------------------------------


def _rotation(phi: float) -> np.ndarray:
    return np.array([[np.sin(phi), np.cos(phi)],
                     [-np.cos(phi), np.sin(phi)]])


def make_region(preset: str | None = None, *, r: float | None = None,
                phi: float | None = None, Q=None, S=None, R=None,
                left_half_plane: bool | None = None) -> LmiRegion:
    """Build an LMI region from a named preset or raw (Q, S, R) data.

    Presets: half_plane, disc(r), sector(phi), half_disc(r) and
    circular_sector(r, phi) with 0 < phi <= pi/2 measured from the negative
    real axis.  Raw regions must have R positive semidefinite and must
    either pass the left-half-plane sampling check or be asserted with
    left_half_plane=True.
    """
    if preset is not None and Q is not None:
        raise ValueError("pass either a preset or raw (Q, S, R) data, not both")
    if preset is None:
        if Q is None or S is None or R is None:
            raise ValueError("raw regions need all of Q, S and R")
        region = LmiRegion(Q, S, R, left_half_plane=left_half_plane)
        if not region.left_half_plane:
            raise ValueError(
                "region not asserted inside the open left half-plane; pass "
                "left_half_plane=True to override the sampling check")
        return region

    def _radius():
        if r is None or r <= 0:
            raise ValueError(f"preset {preset!r} needs a positive radius r")
        return float(r)

    def _angle():
        if phi is None or not 0 < phi <= np.pi / 2:
            raise ValueError(
                f"preset {preset!r} needs an angle phi in (0, pi/2]")
        return float(phi)

    if preset == "half_plane":
        return LmiRegion([[0.0]], [[1.0]], [[0.0]],
                         left_half_plane=left_half_plane)
    if preset == "disc":
        rr = _radius()
        return LmiRegion([[-rr ** 2]], [[0.0]], [[1.0]],
                         left_half_plane=left_half_plane)
    if preset == "sector":
        return LmiRegion(np.zeros((2, 2)), _rotation(_angle()),
                         np.zeros((2, 2)), left_half_plane=left_half_plane)
    if preset == "half_disc":
        rr = _radius()
        return LmiRegion(np.diag([-rr ** 2, 0.0]),
                         np.diag([0.0, 1.0]),
                         np.diag([1.0, 0.0]),
                         left_half_plane=left_half_plane)
    if preset == "circular_sector":
        rr, a = _radius(), _angle()
        S_cs = np.zeros((3, 3))
        S_cs[1:, 1:] = _rotation(a)
        return LmiRegion(np.diag([-rr ** 2, 0.0, 0.0]), S_cs,
                         np.diag([1.0, 0.0, 0.0]),
                         left_half_plane=left_half_plane)
    raise ValueError(f"unknown region preset {preset!r}")


def _require_synthesis_region(region: LmiRegion) -> None:
    if not region.left_half_plane:
        raise ValueError(
            "synthesis requires a region contained in the open left "
            "half-plane")


def _r_factor(region: LmiRegion) -> np.ndarray:
    """Full-rank factor E with R = E E^T (empty for R = 0)."""
    w, V = np.linalg.eigh(region.R)
    keep = w > 1e-10 * max(1.0, float(w.max()) if w.size else 0.0)
    return V[:, keep] * np.sqrt(w[keep])


def _k(const, expr):
    if isinstance(expr, np.ndarray):
        return np.kron(const, expr)
    return cp.kron(const, expr)


def _region_slots(region, cert, a_row, b_row=None, z_x=None, u_diag=None):
    """Kronecker stability block shared by all synthesis LMIs here.

    a_row/b_row are the certificate-weighted state and channel columns,
    z_x and u_diag the multiplier couplings of the lifted control channel.
    The quadratic R-term is Schur-complemented against the certificate.
    """
    Q, S, m = region.Q, region.S, region.d
    Er = _r_factor(region)
    core = _k(Q, cert) + _k(S, a_row) + _k(S.T, a_row.T)
    if b_row is not None:
        cross = _k(S, b_row) + _k(np.eye(m), z_x.T)
        core = sdp.bmat([[core, cross],
                         [cross.T, _k(np.eye(m), u_diag)]])
    if Er.shape[1]:
        rows = _k(Er.T, a_row)
        if b_row is not None:
            rows = cp.hstack([rows, _k(Er.T, b_row)])
        core = sdp.bmat([[core, rows.T],
                         [rows, -_k(np.eye(Er.shape[1]), cert)]])
    return core


def _perf_block(a_row_sym, b_col, c_row, d_blk, g, m_d, k_e):
    """Bordered energy-gain block: negative definiteness bounds the gain."""
    return sdp.bmat([
        [a_row_sym, b_col, c_row.T],
        [b_col.T, -g * np.eye(m_d), d_blk.T],
        [c_row, d_blk, -np.eye(k_e)],
    ])


# --- analysis -------------------------------------------------------------------


def analyze_region(ss: StateSpace, region: LmiRegion, common: bool = True,
                   eps_feas: float = 1e-7):
    """Energy gain of a stable system with eigenvalues confined to a region.

    With common=True a single certificate serves both objectives (never
    less conservative); otherwise stability and performance certificates
    are decoupled.  Returns (gamma, RegionAnalysisCertificate).
    """
    n, m_d, k_e = ss.n, ss.n_in, ss.n_out
    A, B, C, D = ss.A, ss.B, ss.C, ss.D
    prob = sdp.LmiProblem()
    g = prob.scalar("g", nonneg=True)
    Xs = prob.symmetric("Xs", n)
    Xp = Xs if common else prob.symmetric("Xp", n)
    if n:
        prob.require_posdef(Xs)
        if not common:
            prob.require_posdef(Xp)
        prob.require_negdef(
            _k(region.Q, Xs) + _k(region.S, Xs @ A)
            + _k(region.S.T, A.T @ Xs) + _k(region.R, A.T @ Xs @ A))
    prob.require_negdef(_perf_block(
        Xp @ A + A.T @ Xp, Xp @ B, C, D, g, m_d, k_e))
    prob.minimize(g)
    sol = sdp.solve(prob, eps_feas=eps_feas)
    if not sol.ok:
        raise ValueError(
            "analysis LMIs infeasible: eigenvalues outside the region or "
            "the system is unstable")
    gamma = float(np.sqrt(max(sol.values["g"], 0.0)))
    Xs_v = sol.values["Xs"]
    Xp_v = Xs_v if common else sol.values["Xp"]
    return gamma, RegionAnalysisCertificate(X_s=Xs_v, X_p=Xp_v)


# --- full-order synthesis (lower bound) -------------------------------------------


def _dof_problem(view, region, g_fixed=None, trace_objective=False):
    n = view.A.shape[0]
    m_d, m_u = view.B1.shape[1], view.B2.shape[1]
    k_e, k_y = view.C1.shape[0], view.C2.shape[0]
    A, B1, B2 = view.A, view.B1, view.B2
    C1, C2 = view.C1, view.C2
    D11, D12, D21 = view.D11, view.D12, view.D21

    prob = sdp.LmiProblem()
    X = prob.symmetric("X", n)
    Y = prob.symmetric("Y", n)
    Kt = prob.rectangular("Kt", n, n)
    L = prob.rectangular("L", n, k_y)
    M = prob.rectangular("M", m_u, n)
    N = prob.rectangular("N", m_u, k_y)
    g = g_fixed if g_fixed is not None else prob.scalar("g", nonneg=True)

    Xb = sdp.bmat([[Y, np.eye(n)], [np.eye(n), X]])
    Ab = sdp.bmat([[A @ Y + B2 @ M, A + B2 @ N @ C2],
                   [Kt, X @ A + L @ C2]])
    Bb = sdp.bmat([[B1 + B2 @ N @ D21], [X @ B1 + L @ D21]])
    Cb = sdp.bmat([[C1 @ Y + D12 @ M, C1 + D12 @ N @ C2]])
    Db = D11 + D12 @ N @ D21

    prob.require_posdef(Xb)
    prob.require_negdef(_perf_block(Ab + Ab.T, Bb, Cb, Db, g, m_d, k_e))
    prob.require_negdef(_region_slots(region, Xb, Ab))
    if trace_objective:
        prob.minimize(cp.trace(X) + cp.trace(Y))
    elif g_fixed is None:
        prob.minimize(g)
    return prob


def lower_bound_dof_region(plant: LfrPlant, region: LmiRegion,
                           eps_back: float = 0.01):
    """Best bound over dynamic full-order controllers, with the controller.

    Returns (gamma_dof, X, Y, controller).  The controller is recovered
    from a solve at (1+eps_back) times the optimum and its closed loop is
    verified against the region and gain oracles.
    """
    view = _nominal(plant)
    _require_synthesis_region(region)
    n = view.A.shape[0]
    if n == 0:
        raise ValueError("region synthesis needs state dynamics")
    sol = sdp.solve(_dof_problem(view, region))
    if not sol.ok:
        raise ValueError(
            "full-order synthesis LMIs infeasible for this region")
    gamma_dof = float(np.sqrt(max(sol.objective_value, 0.0)))
    level = (1.0 + eps_back) * gamma_dof
    sol2 = sdp.solve(_dof_problem(view, region, g_fixed=level ** 2))
    if not sol2.ok:
        sol2, level = sol, gamma_dof
    X, Y = matops.sym(sol2.values["X"]), matops.sym(sol2.values["Y"])
    Kt, L = sol2.values["Kt"], sol2.values["L"]
    M, N = sol2.values["M"], sol2.values["N"]

    # I - XY = U V^T with both factors square nonsingular
    W = np.eye(n) - X @ Y
    Uw, sw, Vwt = np.linalg.svd(W)
    sw = np.maximum(sw, 1e-10 * max(1.0, sw.max() if n else 1.0))
    U = Uw * np.sqrt(sw)
    Vt = np.sqrt(sw)[:, None] * Vwt
    lhs = np.block([[U, X @ view.B2],
                    [np.zeros((view.B2.shape[1], n)),
                     np.eye(view.B2.shape[1])]])
    rhs = np.block([[Vt, np.zeros((n, view.C2.shape[0]))],
                    [view.C2 @ Y, np.eye(view.C2.shape[0])]])
    mid = np.block([[Kt - X @ view.A @ Y, L], [M, N]])
    blk = np.linalg.solve(lhs, np.linalg.solve(rhs.T, mid.T).T)
    ctrl = Controller.dynamic(blk[:n, :n], blk[:n, n:],
                              blk[n:, :n], blk[n:, n:])

    closed = close_loop(plant, ctrl)
    inside, _ = matops.eigs_in_region(closed.A, region)
    if not inside:
        raise ValueError(
            "recovered dynamic controller leaves the region; the "
            "certificate margins were lost")
    if hinf_norm(closed) > level * (1.0 + 1e-3):
        raise ValueError(
            "recovered dynamic controller misses its gain bound; the "
            "certificate margins were lost")
    return gamma_dof, X, Y, ctrl


# --- gain design ----------------------------------------------------------------


def design_side_gain_region(plant: LfrPlant, region: LmiRegion, side: str,
                            gamma: float | None = None, certificate=None):
    """Full-information or full-actuation gain for a region-constrained step.

    With gamma=None the level is minimized first and the gain is designed
    at 1.01 times the optimum.  A supplied certificate is held fixed and
    only the gain-defining variables are solved, with their norm minimized
    to keep the result well scaled.
    """
    view = _nominal(plant)
    _require_synthesis_region(region)
    if side not in ("information", "actuation"):
        raise ValueError(f"unknown design side {side!r}")
    n, m_d, m_u = view.A.shape[0], view.B1.shape[1], view.B2.shape[1]
    k_e, k_y = view.C1.shape[0], view.C2.shape[0]

    def _build(g_fixed, cert_value):
        prob = sdp.LmiProblem()
        g = g_fixed if g_fixed is not None else prob.scalar("g", nonneg=True)
        if cert_value is None:
            cert = prob.symmetric("cert", n)
            prob.require_posdef(cert)
        else:
            cert = cert_value
        if side == "information":
            M = prob.rectangular("M", m_u, n)
            N = prob.rectangular("N", m_u, m_d)
            a_row = view.A @ cert + view.B2 @ M
            b_col = view.B1 + view.B2 @ N
            c_row = view.C1 @ cert + view.D12 @ M
            d_blk = view.D11 + view.D12 @ N
            free = cp.hstack([M, N])
        else:
            M = prob.rectangular("M", n, k_y)
            N = prob.rectangular("N", k_e, k_y)
            a_row = cert @ view.A + M @ view.C2
            b_col = cert @ view.B1 + M @ view.D21
            c_row = view.C1 + N @ view.C2
            d_blk = view.D11 + N @ view.D21
            free = cp.vstack([M, N])
        prob.require_negdef(_perf_block(
            a_row + a_row.T, b_col, c_row, d_blk, g, m_d, k_e))
        prob.require_negdef(_region_slots(region, cert, a_row))
        if g_fixed is None:
            prob.minimize(g)
        else:
            prob.minimize(cp.norm(free, "fro"))
        return prob

    if certificate is not None:
        certificate = matops.as_symmetric(certificate, "certificate")
        if np.min(np.linalg.eigvalsh(certificate)) <= 0:
            raise ValueError("certificate must be positive definite")
    if gamma is None:
        pre = sdp.solve(_build(None, certificate))
        if not pre.ok:
            raise ValueError(
                f"{side} design LMIs infeasible for this region")
        gamma = 1.01 * float(np.sqrt(max(pre.objective_value, 0.0)))
    sol = sdp.solve(_build(float(gamma) ** 2, certificate))
    if not sol.ok:
        raise ValueError(
            f"{side} design LMIs infeasible at gamma={gamma:.6g} for this "
            "region")
    M_v, N_v = sol.values["M"], sol.values["N"]
    cert_v = certificate if certificate is not None else sol.values["cert"]
    if side == "information":
        F1 = np.linalg.solve(cert_v.T, M_v.T).T
        return Controller.full_information(np.hstack([F1, N_v]))
    E1 = np.linalg.solve(cert_v, M_v)
    return Controller.full_actuation(np.vstack([E1, N_v]))


# --- alternating steps ------------------------------------------------------------


def _extract_static(H, N1, N2, dual: bool) -> np.ndarray:
    base = H.T - N2 if dual else H - N2
    s = np.linalg.svd(base, compute_uv=False)
    if s[-1] < 1e-12 * max(s[0], 1.0):
        raise ValueError(
            "gain recovery failed: H - N2 is numerically singular")
    if dual:
        # K with K (H^T - N2) = N1
        return np.linalg.solve(base.T, N1.T).T
    return np.linalg.solve(base, N1)


def _step_problem(view, region, side, gain, g_fixed=None):
    n, m_d, m_u = view.A.shape[0], view.B1.shape[1], view.B2.shape[1]
    k_e, k_y = view.C1.shape[0], view.C2.shape[0]
    prob = sdp.LmiProblem()
    g = g_fixed if g_fixed is not None else prob.scalar("g", nonneg=True)

    if side == "primal":
        F = gain.F
        F1, F2 = F[:, :n], F[:, n:]
        X = prob.symmetric("X", n)
        H = prob.rectangular("H", m_u, m_u)
        N1 = prob.rectangular("N1", m_u, k_y)
        N2 = prob.rectangular("N2", m_u, m_u)
        AF = view.A + view.B2 @ F1
        BF = view.B1 + view.B2 @ F2
        chan = m_u
        r_state = cp.hstack([X @ AF, X @ BF, X @ view.B2])
        r_e = np.hstack([view.C1 + view.D12 @ F1,
                         view.D11 + view.D12 @ F2, view.D12])
        z_x = -H @ F1 + N1 @ view.C2 + N2 @ F1
        r_z = cp.hstack([z_x, -H @ F2 + N1 @ view.D21 + N2 @ F2, N2])
        cert, a_slots = X, X @ AF
        b_slots = X @ view.B2
    else:
        E1 = gain.E[:n, :]
        E2 = gain.E[n:, :]
        Y = prob.symmetric("Y", n)
        H = prob.rectangular("H", k_y, k_y)
        N1 = prob.rectangular("N1", m_u, k_y)
        N2 = prob.rectangular("N2", k_y, k_y)
        AE = view.A + E1 @ view.C2
        BE = view.B1 + E1 @ view.D21
        chan = k_y
        b2_bar = -E1 @ H.T + view.B2 @ N1 + E1 @ N2
        r_state = cp.hstack([AE @ Y, BE, b2_bar])
        r_e = cp.hstack([(view.C1 + E2 @ view.C2) @ Y,
                         view.D11 + E2 @ view.D21,
                         -E2 @ H.T + view.D12 @ N1 + E2 @ N2])
        r_z = cp.hstack([view.C2 @ Y, view.D21, N2])
        cert, a_slots = Y, AE @ Y
        b_slots = b2_bar

    r_I = np.hstack([np.eye(n), np.zeros((n, m_d + chan))])
    r_d = np.hstack([np.zeros((m_d, n)), np.eye(m_d), np.zeros((m_d, chan))])
    r_w = np.hstack([np.zeros((chan, n + m_d)), np.eye(chan)])
    rows = [r_I, r_state, r_d, r_z, r_w]
    mid = [[None] * 5 for _ in range(5)]
    mid[0][1] = np.eye(n)
    mid[1][0] = np.eye(n)
    mid[2][2] = -g * np.eye(m_d)
    mid[3][4] = np.eye(chan)
    mid[4][3] = np.eye(chan)
    mid[4][4] = -H - H.T
    core = sdp.quad_form_blocks(rows, mid)
    if side == "primal":
        # the performance row is constant, so its square stays affine
        flat = core + r_e.T @ r_e
    else:
        # the dual performance row carries the variables; a Schur
        # complement of its squared contribution restores linearity
        flat = sdp.bmat([[core, r_e.T], [r_e, -np.eye(k_e)]])

    prob.require_posdef(H + H.T)
    prob.require_posdef(cert)
    prob.require_negdef(flat)
    prob.require_negdef(_region_slots(
        region, cert, a_slots, b_slots, r_z[:, :n],
        N2 + N2.T - H - H.T))
    if g_fixed is None:
        prob.minimize(g)
    return prob


def step_region(plant: LfrPlant, region: LmiRegion, side: str,
                gain: Controller, eps_back: float = 0.01) -> HinfStepResult:
    """One region-constrained synthesis step.

    Minimizes the bound for the given gain, re-solves at (1+eps_back)
    times the optimum and extracts the static controller from the
    multiplier variables; the result carries that static gain.  Either
    side can be infeasible on its own here, which is reported as an error.
    """
    view = _nominal(plant)
    _require_synthesis_region(region)
    _check_side_gain(view, side, gain)
    sol = sdp.solve(_step_problem(view, region, side, gain))
    if not sol.ok:
        raise ValueError(
            f"{side} synthesis LMIs infeasible for this region "
            f"(status {sol.status!r})")
    gamma = float(np.sqrt(max(sol.values["g"], 0.0)))
    level = (1.0 + eps_back) * gamma
    sol2 = sdp.solve(_step_problem(view, region, side, gain,
                                   g_fixed=level ** 2))
    if not sol2.ok:
        sol2 = sol
    K = _extract_static(sol2.values["H"], sol2.values["N1"],
                        sol2.values["N2"], dual=side == "dual")
    cert = matops.sym(sol2.values["X" if side == "primal" else "Y"])
    closed = close_loop(plant, Controller.static(K))
    inside, _ = matops.eigs_in_region(closed.A, region)
    if not inside:
        raise ValueError(
            "extracted static gain leaves the region; the step margins "
            "were lost")
    return HinfStepResult(gamma=gamma, certificate=cert,
                          gain=Controller.static(K),
                          solver_status=sol.status)


def step_region_multiobj(plant: LfrPlant, region: LmiRegion,
                         gain_stab: Controller, gain_perf: Controller,
                         eps_back: float = 0.01) -> RegionStepResult:
    """Primal step with separate stability and performance certificates.

    Two full-information gains drive the two objectives; only the
    multiplier variables are shared, which is what ties the two blocks to
    a single static controller.
    """
    view = _nominal(plant)
    _require_synthesis_region(region)
    _check_side_gain(view, "primal", gain_stab)
    _check_side_gain(view, "primal", gain_perf)
    n, m_d, m_u = view.A.shape[0], view.B1.shape[1], view.B2.shape[1]
    k_e, k_y = view.C1.shape[0], view.C2.shape[0]

    def _build(g_fixed=None):
        prob = sdp.LmiProblem()
        g = g_fixed if g_fixed is not None else prob.scalar("g", nonneg=True)
        Xs = prob.symmetric("Xs", n)
        Xp = prob.symmetric("Xp", n)
        H = prob.rectangular("H", m_u, m_u)
        N1 = prob.rectangular("N1", m_u, k_y)
        N2 = prob.rectangular("N2", m_u, m_u)
        prob.require_posdef(H + H.T)
        prob.require_posdef(Xs)
        prob.require_posdef(Xp)

        F1s = gain_stab.F[:, :n]
        z_s = -H @ F1s + N1 @ view.C2 + N2 @ F1s
        prob.require_negdef(_region_slots(
            region, Xs, Xs @ (view.A + view.B2 @ F1s), Xs @ view.B2,
            z_s, N2 + N2.T - H - H.T))

        Fp = gain_perf.F
        F1p, F2p = Fp[:, :n], Fp[:, n:]
        AF = view.A + view.B2 @ F1p
        BF = view.B1 + view.B2 @ F2p
        r_state = cp.hstack([Xp @ AF, Xp @ BF, Xp @ view.B2])
        r_e = np.hstack([view.C1 + view.D12 @ F1p,
                         view.D11 + view.D12 @ F2p, view.D12])
        r_z = cp.hstack([-H @ F1p + N1 @ view.C2 + N2 @ F1p,
                         -H @ F2p + N1 @ view.D21 + N2 @ F2p, N2])
        r_I = np.hstack([np.eye(n), np.zeros((n, m_d + m_u))])
        r_d = np.hstack([np.zeros((m_d, n)), np.eye(m_d),
                         np.zeros((m_d, m_u))])
        r_w = np.hstack([np.zeros((m_u, n + m_d)), np.eye(m_u)])
        rows = [r_I, r_state, r_d, r_z, r_w]
        mid = [[None] * 5 for _ in range(5)]
        mid[0][1] = np.eye(n)
        mid[1][0] = np.eye(n)
        mid[2][2] = -g * np.eye(m_d)
        mid[3][4] = np.eye(m_u)
        mid[4][3] = np.eye(m_u)
        mid[4][4] = -H - H.T
        prob.require_negdef(sdp.quad_form_blocks(rows, mid) + r_e.T @ r_e)
        if g_fixed is None:
            prob.minimize(g)
        return prob

    sol = sdp.solve(_build())
    if not sol.ok:
        raise ValueError(
            f"multi-objective synthesis LMIs infeasible (status "
            f"{sol.status!r})")
    gamma = float(np.sqrt(max(sol.values["g"], 0.0)))
    sol2 = sdp.solve(_build(((1.0 + eps_back) * gamma) ** 2))
    if not sol2.ok:
        sol2 = sol
    K = _extract_static(sol2.values["H"], sol2.values["N1"],
                        sol2.values["N2"], dual=False)
    closed = close_loop(plant, Controller.static(K))
    inside, _ = matops.eigs_in_region(closed.A, region)
    if not inside:
        raise ValueError(
            "extracted static gain leaves the region; the step margins "
            "were lost")
    cert = RegionAnalysisCertificate(X_s=matops.sym(sol2.values["Xs"]),
                                     X_p=matops.sym(sol2.values["Xp"]))
    return RegionStepResult(gamma=gamma, certificate=cert,
                            controller=Controller.static(K),
                            solver_status=sol.status)


# --- the alternating algorithm -----------------------------------------------------


_VARIANTS = ("base", "V1", "V2", "V3", "V4")


def _embed_actuation(view, K) -> Controller:
    return Controller.full_actuation(
        np.vstack([view.B2 @ K, view.D12 @ K]))


def _embed_information(view, K) -> Controller:
    return Controller.full_information(
        np.hstack([K @ view.C2, K @ view.D21]))


def _blend(view, gain: Controller, K: np.ndarray) -> Controller:
    if gain.kind == "full_information":
        other = _embed_information(view, K)
        return Controller.full_information(0.5 * gain.F + 0.5 * other.F)
    other = _embed_actuation(view, K)
    return Controller.full_actuation(0.5 * gain.E + 0.5 * other.E)


def _next_gain(plant, region, side, step, eps_back):
    """Well-scaled gain for the step after ``step``, per the sizing recipe.

    Designed at the step's certificate and backed-off level; the fixed
    certificate always works in exact arithmetic, so a free certificate is
    only a numerical fallback.
    """
    other = "actuation" if side == "primal" else "information"
    level = (1.0 + eps_back) * step.gamma
    cert = step.certificate
    try:
        return design_side_gain_region(plant, region, other, gamma=level,
                                       certificate=cert)
    except ValueError:
        return design_side_gain_region(plant, region, other, gamma=level)


def run_dual_iteration_region(plant: LfrPlant, region: LmiRegion,
                              variant: str = "base", max_iters: int = 9,
                              eps_back: float = 0.01,
                              stop_tol: float = 1e-3) -> IterationReport:
    """Alternate primal and dual region-constrained steps.

    The per-step bounds need not decrease here, so progress is tracked by
    the running minimum and the best controller found is returned.  The
    variants change how the gains handed to the next step are chosen: V1
    embeds the extracted controller on both sides (almost monotone, little
    exploration), V2 only on the actuation side, and V3/V4 re-run a
    non-improving primal step once with the information gain blended
    half-half with an embedded controller (two steps back for V3, the
    incumbent best for V4).
    """
    if variant not in _VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    t0 = time.monotonic()
    view = _nominal(plant)
    _require_synthesis_region(region)

    sol = sdp.solve(_dof_problem(view, region))
    if not sol.ok:
        raise ValueError(
            "initialization infeasible: the full-order synthesis LMIs do "
            "not hold for this region")
    gamma_dof = float(np.sqrt(max(sol.objective_value, 0.0)))

    first = None
    failure = "no candidate gain available"
    ladder = [eps_back] + [e for e in _INIT_EPS_LADDER if e > eps_back]
    candidates = [("designed", (1.0 + eps) * gamma_dof) for eps in ladder]
    inside_open, _ = matops.eigs_in_region(view.A, region)
    if inside_open:
        candidates.append(("zero", None))
    for kind, level in candidates:
        try:
            if kind == "designed":
                F = design_side_gain_region(plant, region, "information",
                                            gamma=level)
            else:
                F = Controller.full_information(
                    np.zeros((view.B2.shape[1],
                              view.A.shape[0] + view.B1.shape[1])))
            first = step_region(plant, region, "primal", F,
                                eps_back=eps_back)
            break
        except ValueError as exc:
            failure = str(exc)
    if first is None:
        raise ValueError(
            f"initialization infeasible: no starting gain made the first "
            f"primal step feasible (last attempt: {failure})")

    history = [(1, "primal", first.gamma, "optimal", time.monotonic() - t0)]
    controllers = {1: first.gain}
    best_gamma, best_K = first.gamma, first.gain
    deltas = [best_gamma]
    last = first
    side = "dual"
    k = 2
    while k <= max_iters:
        if side == "dual" and variant in ("V1", "V2"):
            gain = _embed_actuation(view, controllers[k - 1].K)
        elif side == "primal" and variant == "V1":
            gain = _embed_information(view, controllers[k - 1].K)
        else:
            try:
                gain = _next_gain(plant, region, "dual" if side == "primal"
                                  else "primal", last, eps_back)
            except ValueError:
                break
        status = "optimal"
        try:
            step = step_region(plant, region, side, gain, eps_back=eps_back)
        except ValueError:
            # retry once with a gain blended toward the incumbent best
            try:
                step = step_region(plant, region, side,
                                   _blend(view, gain, best_K.K),
                                   eps_back=eps_back)
                status = "recovered"
            except ValueError:
                break
        if (side == "primal" and variant in ("V3", "V4")
                and step.gamma > best_gamma):
            ref = controllers.get(k - 2) if variant == "V3" else best_K
            if ref is not None:
                blended = _blend(view, gain, ref.K)
                try:
                    step = step_region(plant, region, side, blended,
                                       eps_back=eps_back)
                    status = "blended"
                except ValueError:
                    pass  # keep the unblended step
        history.append((k, side, step.gamma, status,
                        time.monotonic() - t0))
        controllers[k] = step.gain
        if step.gamma < best_gamma:
            best_gamma, best_K = step.gamma, step.gain
        deltas.append(best_gamma)
        last = step
        if len(deltas) >= 3 and deltas[-3] - deltas[-1] < stop_tol * deltas[-3]:
            break
        side = "primal" if side == "dual" else "dual"
        k += 1

    closed = close_loop(plant, best_K)
    inside, _ = matops.eigs_in_region(closed.A, region)
    if not inside:
        raise ValueError("best controller leaves the region; margins lost")
    gamma_ver, _ = analyze_region(closed, region, common=True)
    return IterationReport(gamma_lower=gamma_dof, gamma_history=history,
                           final_controller=best_K,
                           final_gamma_verified=gamma_ver)
