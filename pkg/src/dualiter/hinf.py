"""Static output-feedback H-infinity synthesis by alternating convex steps.

The non-convex static design problem is sandwiched between a primal step
(common certificate with a full-information gain) and a dual step (common
certificate with a full-actuation gain).  Each step is an SDP; gains are
extracted constructively from the closed-loop inequality, and alternating
the two steps yields a non-increasing sequence of upper bounds on the
optimal closed-loop energy gain, initialized at the convex full-order
lower bound.
"""

from __future__ import annotations

import dataclasses
import time

import cvxpy as cp
import numpy as np

from . import elim, matops, sdp
from .plant import Controller, LfrPlant, StateSpace, close_loop

__all__ = [
    "HinfStepResult",
    "IterationReport",
    "analyze",
    "lower_bound_dof",
    "design_side_gain",
    "iteration_step",
    "iteration_step_param",
    "reconstruct_static",
    "run_dual_iteration",
]


@dataclasses.dataclass(frozen=True)
class HinfStepResult:
    """Outcome of one synthesis step.

    gamma is the step's bound on the closed-loop energy gain, certificate
    the Lyapunov-type matrix it was certified with (X for primal-side
    steps, Y for dual-side ones) at level (1+eps_back)*gamma, and gain the
    controller produced for the next step (or the static gain itself for
    the parameter-transformation steps).
    """

    gamma: float
    certificate: np.ndarray
    gain: Controller
    solver_status: str


@dataclasses.dataclass(frozen=True)
class IterationReport:
    gamma_lower: float
    gamma_history: list
    final_controller: Controller
    final_gamma_verified: float


def _nominal(plant: LfrPlant):
    if not isinstance(plant, LfrPlant):
        raise TypeError("expected an LfrPlant")
    return plant.nominal


def _primal_stack(A, B, C, D) -> np.ndarray:
    """Rows (state identity, state equation, output, input identity)."""
    n, m = A.shape[0], B.shape[1]
    return np.block([
        [np.eye(n), np.zeros((n, m))],
        [A, B],
        [C, D],
        [np.zeros((m, n)), np.eye(m)],
    ])


def _dual_stack(A, B, C, D) -> np.ndarray:
    """Stack of [I; -G*] for G = (A, B, C, D); the adjoint enters with a
    sign flip, so the data rows are (-A^T, -C^T) and (-B^T, -D^T)."""
    n = A.shape[0]
    k = C.shape[0]
    return np.block([
        [np.eye(n), np.zeros((n, k))],
        [-A.T, -C.T],
        [np.zeros((k, n)), np.eye(k)],
        [-B.T, -D.T],
    ])


def _outer(X):
    dim = X.shape[0]
    zero = np.zeros((dim, dim))
    return sdp.bmat([[zero, X], [X, zero]])


def _gain_mid(g, k_e: int, m_d: int):
    """blkdiag(I, -g I): the performance weight at level g = gamma^2."""
    lower = -g * np.eye(m_d) if m_d else np.zeros((0, 0))
    return sdp.bmat([[np.eye(k_e), None], [None, lower]])


def _scaled_dual_mid(g, k_e: int, m_d: int):
    """blkdiag(g I, -I): the dual weight after multiplying through by g."""
    upper = g * np.eye(k_e) if k_e else np.zeros((0, 0))
    return sdp.bmat([[upper, None], [None, -np.eye(m_d)]])


def _annihilator_primal(view) -> np.ndarray:
    return matops.null_basis(np.hstack([view.C2, view.D21]))


def _annihilator_dual(view) -> np.ndarray:
    return matops.null_basis(np.hstack([view.B2.T, view.D12.T]))


# --- analysis ---------------------------------------------------------------

def analyze(ss: StateSpace, eps_feas: float = 1e-7):
    """Minimal certified energy-gain bound of a state-space system.

    Returns (gamma, X) with X > 0 certifying the bound.  Infeasibility
    means the system is not stable (or the gain is unbounded).
    """
    if ss.n == 0:
        return float(np.linalg.norm(ss.D, 2)), np.zeros((0, 0))
    prob = sdp.LmiProblem()
    X = prob.symmetric("X", ss.n)
    g = prob.scalar("g", nonneg=True)
    prob.require_posdef(X)
    stack = _primal_stack(ss.A, ss.B, ss.C, ss.D)
    prob.require_negdef(sdp.ls_form(_outer(X), _gain_mid(g, ss.n_out, ss.n_in), stack))
    prob.minimize(g)
    sol = sdp.solve(prob, eps_feas=eps_feas)
    if sol.status == "infeasible":
        raise ValueError("analysis LMIs infeasible: the system is not stable "
                         "or has unbounded gain")
    if not sol.ok:
        raise ValueError(f"analysis solve failed with status {sol.status!r}")
    return float(np.sqrt(max(sol.values["g"], 0.0))), sol.values["X"]


# --- full-order lower bound -------------------------------------------------

def _gs_problem(view, g_fixed=None, trace_objective=False):
    """Coupled full-order synthesis LMIs; minimizes g unless told otherwise.

    The dual inequality carries 1/g and is made jointly convex in (Y, g)
    by a Schur complement on its g-dependent block.
    """
    n = view.A.shape[0]
    m_d, k_e = view.B1.shape[1], view.C1.shape[0]
    V = _annihilator_primal(view)
    U = _annihilator_dual(view)
    Sp = _primal_stack(view.A, view.B1, view.C1, view.D11)
    Sd = _dual_stack(view.A, view.B1, view.C1, view.D11)
    mid_nog = np.block([[np.eye(k_e), np.zeros((k_e, m_d))],
                        [np.zeros((m_d, k_e)), np.zeros((m_d, m_d))]])
    prob = sdp.LmiProblem()
    X = prob.symmetric("X", n)
    Y = prob.symmetric("Y", n)
    g = g_fixed if g_fixed is not None else prob.scalar("g", nonneg=True)
    prob.require_posdef(sdp.bmat([[X, np.eye(n)], [np.eye(n), Y]]))
    if V.shape[1]:
        prob.require_negdef(
            sdp.ls_form(_outer(X), _gain_mid(g, k_e, m_d), Sp @ V))
    if U.shape[1]:
        SdU = Sd @ U
        core = sdp.ls_form(_outer(Y), mid_nog, SdU)
        cross = SdU[2 * n + k_e:, :]
        gI = g * np.eye(m_d) if m_d else np.zeros((0, 0))
        prob.require_posdef(sdp.bmat([[core, cross.T], [cross, gI]]))
    if trace_objective:
        prob.minimize(cp.trace(X) + cp.trace(Y))
    elif g_fixed is None:
        prob.minimize(g)
    return prob


def _balanced_pair(view, gamma: float):
    """Feasible (X, Y) of the full-order LMIs at a fixed level, trace
    minimized to push X towards Y^{-1}."""
    sol = sdp.solve(_gs_problem(view, g_fixed=gamma ** 2, trace_objective=True))
    if not sol.ok:
        return None
    return sol.values["X"], sol.values["Y"]


def lower_bound_dof(plant: LfrPlant, balance: bool = True, eps_back: float = 0.01):
    """Infimal gain achievable by dynamic full-order output feedback.

    Solves the coupled pair of annihilated inequalities with [X I; I Y] > 0.
    With balance set, re-solves at (1+eps_back) times the optimum minimizing
    trace(X+Y), which pushes X towards Y^{-1} and thereby aids the
    subsequent gain designs.
    """
    view = _nominal(plant)
    sol = sdp.solve(_gs_problem(view))
    if sol.status == "infeasible":
        raise ValueError("full-order synthesis LMIs infeasible: no stabilizing "
                         "dynamic controller achieves a finite gain bound")
    if not sol.ok:
        raise ValueError(f"full-order bound solve failed with status {sol.status!r}")
    gamma = float(np.sqrt(max(sol.values["g"], 0.0)))
    X, Y = sol.values["X"], sol.values["Y"]
    if balance:
        pair = _balanced_pair(view, (1.0 + eps_back) * gamma)
        if pair is not None:
            X, Y = pair
    return gamma, X, Y


# --- gain extraction --------------------------------------------------------

def _elimination_outer(X: np.ndarray, gamma: float, k_e: int, m_d: int) -> np.ndarray:
    """Quadratic-form matrix of the closed-loop inequality with rows
    reordered to (state identity, input identity | state row, output row)."""
    n = X.shape[0]
    g = gamma ** 2
    Zn = np.zeros
    return np.block([
        [Zn((n, n)), Zn((n, m_d)), X, Zn((n, k_e))],
        [Zn((m_d, n)), -g * np.eye(m_d), Zn((m_d, n)), Zn((m_d, k_e))],
        [X, Zn((n, m_d)), Zn((n, n)), Zn((n, k_e))],
        [Zn((k_e, n)), Zn((k_e, m_d)), Zn((k_e, n)), np.eye(k_e)],
    ])


def _design_instance(view, side: str, X: np.ndarray, gamma: float):
    n = view.A.shape[0]
    m_d, k_e = view.B1.shape[1], view.C1.shape[0]
    W = np.block([[view.A, view.B1], [view.C1, view.D11]])
    P = _elimination_outer(X, gamma, k_e, m_d)
    if side == "information":
        U = np.vstack([view.B2, view.D12]).T
        Vr = np.eye(n + m_d)
    elif side == "actuation":
        U = np.eye(n + k_e)
        Vr = np.hstack([view.C2, view.D21])
    else:  # static
        U = np.vstack([view.B2, view.D12]).T
        Vr = np.hstack([view.C2, view.D21])
    return elim.EliminationInstance(U=U, V=Vr, W=W, P=P)


def design_side_gain(plant: LfrPlant, side: str, certificate: np.ndarray,
                     gamma: float, normalize: bool = False, seed: int = 0) -> Controller:
    """Design a full-information gain F or a full-actuation gain E.

    side "information" takes the dual certificate Y and designs F such
    that the closed-loop analysis inequality holds with X = Y^{-1};
    side "actuation" takes the primal certificate X directly.  With
    normalize set, the gain is instead computed from an SDP minimizing a
    norm bound on the transformed gain parameters, which keeps the
    returned gains small.
    """
    if side not in ("information", "actuation"):
        raise ValueError(f"side must be 'information' or 'actuation', got {side!r}")
    view = _nominal(plant)
    cert = matops.as_symmetric(certificate, "certificate")
    if normalize:
        return _design_gain_normalized(view, side, cert, gamma)
    X = matops.sym(np.linalg.inv(cert)) if side == "information" else cert
    inst = _design_instance(view, side, X, gamma)
    result = elim.eliminate_solve(inst, seed=seed)
    if not result.ok:
        raise ValueError(
            f"{side} design inequality infeasible at gamma={gamma:.6g} "
            f"(failed conditions: {', '.join(result.failed_conditions)})")
    if side == "information":
        return Controller.full_information(result.z)
    return Controller.full_actuation(result.z)


def _design_gain_normalized(view, side: str, cert: np.ndarray, gamma: float) -> Controller:
    """Gain design minimizing a norm bound on the transformed gain.

    The certificate-multiplied gain blocks are substituted (L = X E1 on
    the actuation side, M = F1 Y on the information side) so the design
    inequality, written in its Schur form, stays affine and the minimized
    norm reflects the gain as it enters the inequality.
    """
    n = view.A.shape[0]
    m_d, k_e = view.B1.shape[1], view.C1.shape[0]
    m_u, k_y = view.B2.shape[1], view.C2.shape[0]
    g = gamma ** 2
    prob = sdp.LmiProblem()
    alpha = prob.scalar("alpha", nonneg=True)
    if side == "actuation":
        X = cert
        L = prob.rectangular("L", n, k_y)
        N = prob.rectangular("N", k_e, k_y)
        # closed-loop inequality at fixed X in Schur form; L stands for X E1
        gram = X @ view.A + L @ view.C2
        XB = X @ view.B1 + L @ view.D21
        C_cl = view.C1 + N @ view.C2
        D_cl = view.D11 + N @ view.D21
        lmi = sdp.bmat([
            [gram + gram.T, XB, C_cl.T],
            [XB.T, -g * np.eye(m_d), D_cl.T],
            [C_cl, D_cl, -np.eye(k_e)],
        ])
        G = cp.vstack([L, N])
        rows, cols = n + k_e, k_y
        prob.require_negdef(lmi)
    else:
        Y = cert
        M = prob.rectangular("M", m_u, n)
        N = prob.rectangular("N", m_u, m_d)
        # dual closed-loop inequality at Y in Schur form; M stands for F1 Y
        gram = -(view.A @ Y + view.B2 @ M)
        CY = view.C1 @ Y + view.D12 @ M
        B_cl = view.B1 + view.B2 @ N
        D_cl = view.D11 + view.D12 @ N
        lmi = sdp.bmat([
            [gram + gram.T, -CY.T, -B_cl],
            [-CY, np.eye(k_e), -D_cl],
            [-B_cl.T, -D_cl.T, g * np.eye(m_d)],
        ])
        G = cp.hstack([M, N])
        rows, cols = m_u, n + m_d
        prob.require_posdef(lmi)
    prob.require_semidef(sdp.bmat([
        [alpha * np.eye(rows), G],
        [G.T, alpha * np.eye(cols)],
    ]), sense="pos")
    prob.minimize(alpha)
    sol = sdp.solve(prob)
    if not sol.ok:
        raise ValueError(
            f"{side} design inequality infeasible at gamma={gamma:.6g} "
            f"(status {sol.status!r})")
    if side == "actuation":
        E1 = np.linalg.solve(cert, sol.values["L"])
        return Controller.full_actuation(np.vstack([E1, sol.values["N"]]))
    F1 = np.linalg.solve(cert.T, sol.values["M"].T).T
    return Controller.full_information(np.hstack([F1, sol.values["N"]]))


def reconstruct_static(plant: LfrPlant, X: np.ndarray, gamma: float,
                       seed: int = 0) -> Controller:
    """Static gain from a certificate satisfying both one-sided inequalities.

    The gain is eliminated from the closed-loop analysis inequality at
    (X, gamma); the elimination preconditions are exactly the annihilated
    inequalities at X and at X^{-1}.
    """
    view = _nominal(plant)
    X = matops.as_symmetric(X, "X")
    inst = _design_instance(view, "static", X, gamma)
    result = elim.eliminate_solve(inst, seed=seed)
    if not result.ok:
        names = {"primal": "certificate-side", "dual": "inverse-certificate-side"}
        failed = ", ".join(names[c] for c in result.failed_conditions)
        raise ValueError(
            f"elimination conditions violated at gamma={gamma:.6g}: "
            f"{failed} inequality does not hold")
    return Controller.static(result.z)


# --- alternating steps ------------------------------------------------------

def _check_side_gain(view, side: str, gain: Controller):
    n = view.A.shape[0]
    if side == "primal":
        if gain.kind != "full_information":
            raise ValueError("primal step expects a full-information gain")
        F1 = gain.F[:, :n]
        A_cl = view.A + view.B2 @ F1
        label = "A + B2 F1"
    elif side == "dual":
        if gain.kind != "full_actuation":
            raise ValueError("dual step expects a full-actuation gain")
        E1 = gain.E[:n, :]
        A_cl = view.A + E1 @ view.C2
        label = "A + E1 C2"
    else:
        raise ValueError(f"side must be 'primal' or 'dual', got {side!r}")
    if n and np.max(np.linalg.eigvals(A_cl).real) >= 0:
        raise ValueError(f"{label} is not stable; the step's hypothesis fails")


def _step_problem(view, closed, side: str, g_fixed=None, slack: bool = False):
    """LMI system of one synthesis step.

    The primal system couples the annihilated open-loop inequality with
    the closed-loop inequality of the given full-information gain under a
    common certificate X; the dual system is its counterpart in the dual
    inequalities, made jointly affine by the substitution Ybar = g Y.
    With slack=True the level is fixed and a common feasibility margin is
    maximized instead, which yields well-interior certificates.
    """
    n = view.A.shape[0]
    m_d, k_e = view.B1.shape[1], view.C1.shape[0]
    prob = sdp.LmiProblem()
    g = g_fixed if g_fixed is not None else prob.scalar("g", nonneg=True)
    t = prob.scalar("t", nonneg=True) if slack else None
    if side == "primal":
        cert = prob.symmetric("X", n)
        V = _annihilator_primal(view)
        stacks = [_primal_stack(closed.A, closed.B, closed.C, closed.D)]
        if V.shape[1]:
            stacks.append(_primal_stack(view.A, view.B1, view.C1, view.D11) @ V)
        for S in stacks:
            form = sdp.ls_form(_outer(cert), _gain_mid(g, k_e, m_d), S)
            if slack:
                form = form + t * np.eye(S.shape[1])
            prob.require_negdef(form)
    else:
        cert = prob.symmetric("Ybar", n)
        U = _annihilator_dual(view)
        stacks = [_dual_stack(closed.A, closed.B, closed.C, closed.D)]
        if U.shape[1]:
            stacks.append(_dual_stack(view.A, view.B1, view.C1, view.D11) @ U)
        for S in stacks:
            form = sdp.ls_form(_outer(cert), _scaled_dual_mid(g, k_e, m_d), S)
            if slack:
                form = form - t * np.eye(S.shape[1])
            prob.require_posdef(form)
    if g_fixed is None:
        prob.minimize(g)
    elif slack:
        prob.minimize(-t)
    return prob


def _step_certificate(plant: LfrPlant, side: str, gain: Controller,
                      gamma: float):
    """Margin-maximized step certificate at a fixed level, or None."""
    view = _nominal(plant)
    closed = close_loop(plant, gain)
    g = float(gamma) ** 2
    sol = sdp.solve(_step_problem(view, closed, side, g_fixed=g, slack=True))
    if not sol.ok:
        return None
    if side == "primal":
        return sol.values["X"]
    return matops.sym(sol.values["Ybar"] / g)


def iteration_step(plant: LfrPlant, side: str, gain: Controller,
                   eps_back: float = 0.01, normalize: bool = False,
                   seed: int = 0) -> HinfStepResult:
    """One primal or dual synthesis step.

    Minimizes the gain bound of the step system for the given gain, then
    re-solves at (1+eps_back) times the achieved bound with a maximized
    feasibility margin; the interior certificate of the re-solve is used
    to design the gain for the opposite step.
    """
    view = _nominal(plant)
    _check_side_gain(view, side, gain)
    closed = close_loop(plant, gain)
    sol = sdp.solve(_step_problem(view, closed, side))
    if not sol.ok:
        raise ValueError(
            f"{side} synthesis LMIs infeasible (status {sol.status!r})")
    g_opt = max(sol.values["g"], 0.0)
    gamma = float(np.sqrt(g_opt))
    gamma_back = (1.0 + eps_back) * gamma
    cert = _step_certificate(plant, side, gain, gamma_back)
    if cert is None:
        if side == "primal":
            cert = sol.values["X"]
        else:
            cert = matops.sym(
                sol.values["Ybar"] / max(g_opt, np.finfo(float).tiny))
    other = "actuation" if side == "primal" else "information"
    next_gain = design_side_gain(plant, other, cert, gamma_back,
                                 normalize=normalize, seed=seed)
    return HinfStepResult(gamma=gamma, certificate=cert, gain=next_gain,
                          solver_status=sol.status)


# --- parameter-transformation steps -----------------------------------------

def _param_step_problem(plant: LfrPlant, side: str, gain: Controller,
                        g_fixed=None):
    """LMI problem of the homotopy-based step.

    The gain bound enters linearly through g = gamma^2; the multiplier
    structure (H with H + H^T > 0) certifies the step against the whole
    homotopy path, and the static gain is recovered from (H, N) after
    solving.
    """
    view = _nominal(plant)
    _check_side_gain(view, side, gain)
    n = view.A.shape[0]
    m_d, k_e = view.B1.shape[1], view.C1.shape[0]
    m_u, k_y = view.B2.shape[1], view.C2.shape[0]
    prob = sdp.LmiProblem()
    g = g_fixed if g_fixed is not None else prob.scalar("g", nonneg=True)

    if side == "primal":
        F = gain.F
        F1, F2 = F[:, :n], F[:, n:]
        X = prob.symmetric("X", n)
        H = prob.rectangular("H", m_u, m_u)
        N1 = prob.rectangular("N1", m_u, k_y)
        N2 = prob.rectangular("N2", m_u, m_u)
        AF = np.hstack([view.A + view.B2 @ F1, view.B1 + view.B2 @ F2, view.B2])
        r_state = X @ AF
        r_e = np.hstack([view.C1 + view.D12 @ F1, view.D11 + view.D12 @ F2,
                         view.D12])
        r_z = cp.hstack([
            -H @ F1 + N1 @ view.C2 + N2 @ F1,
            -H @ F2 + N1 @ view.D21 + N2 @ F2,
            N2,
        ])
        chan = m_u
    else:
        E = gain.E
        E1, E2 = E[:n, :], E[n:, :]
        Y = prob.symmetric("Y", n)
        H = prob.rectangular("H", k_y, k_y)
        N1 = prob.rectangular("N1", m_u, k_y)
        N2 = prob.rectangular("N2", k_y, k_y)
        r_state = cp.hstack([
            (view.A + E1 @ view.C2) @ Y,
            view.B1 + E1 @ view.D21,
            -E1 @ H.T + view.B2 @ N1 + E1 @ N2,
        ])
        r_e = cp.hstack([
            (view.C1 + E2 @ view.C2) @ Y,
            view.D11 + E2 @ view.D21,
            -E2 @ H.T + view.D12 @ N1 + E2 @ N2,
        ])
        r_z = cp.hstack([view.C2 @ Y, view.D21, N2])
        chan = k_y

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
        # the performance row is constant here, so its square stays affine
        lmi = core + r_e.T @ r_e
    else:
        # the dual performance row carries Y, H and N; a Schur complement
        # of its squared contribution restores linearity
        lmi = sdp.bmat([[core, r_e.T], [r_e, -np.eye(k_e)]])
    prob.require_posdef(H + H.T)
    prob.require_negdef(lmi)
    if g_fixed is None:
        prob.minimize(g)
    return prob


def iteration_step_param(plant: LfrPlant, side: str, gain: Controller,
                         eps_back: float = 0.01) -> HinfStepResult:
    """Primal or dual step by convexifying parameter transformation.

    Solves the homotopy-system LMIs directly in (certificate, H, N) and
    recovers a static gain K = (H - N2)^{-1} N1 (primal) or
    K = N1 (H^T - N2)^{-1} (dual) without elimination.  The minimal gain
    bound coincides with the elimination-based step's.
    """
    sol = sdp.solve(_param_step_problem(plant, side, gain))
    if not sol.ok:
        raise ValueError(
            f"{side} parameter-transformation LMIs infeasible "
            f"(status {sol.status!r})")
    gamma = float(np.sqrt(max(sol.values["g"], 0.0)))
    g_back = ((1.0 + eps_back) * gamma) ** 2
    sol_b = sdp.solve(_param_step_problem(plant, side, gain, g_fixed=g_back))
    vals = sol_b.values if sol_b.ok else sol.values
    H, N1, N2 = vals["H"], vals["N1"], vals["N2"]
    base = H - N2 if side == "primal" else H.T - N2
    sv = np.linalg.svd(base, compute_uv=False)
    if sv.size and sv[-1] < 1e-12 * max(1.0, sv[0]):
        raise ValueError("gain recovery failed: H - N2 is numerically singular")
    if side == "primal":
        K = np.linalg.solve(base, N1)
        cert = vals["X"]
    else:
        K = np.linalg.solve(base.T, N1.T).T
        cert = vals["Y"]
    return HinfStepResult(gamma=gamma, certificate=cert,
                          gain=Controller.static(K), solver_status=sol.status)


# --- the alternating algorithm -----------------------------------------------

# balance levels (1+eps)*gamma tried while searching a workable starting gain
_INIT_EPS_LADDER = (0.05, 0.1, 0.25, 0.5, 1.0)


def _initial_gains(plant, view, gamma_dof: float, eps_back: float,
                   normalize: bool, seed: int):
    """Candidate starting full-information gains, most ambitious first.

    Feasibility of the first primal step is not implied by the full-order
    bound and depends on the chosen gain, so the trace-balanced design is
    retried with growing slack; for an open-loop stable plant the zero
    static gain embeds into a gain that can never fail.
    """
    n = view.A.shape[0]
    m_d, m_u = view.B1.shape[1], view.B2.shape[1]
    ladder = [eps_back] + [e for e in _INIT_EPS_LADDER if e > eps_back]
    for eps in ladder:
        pair = _balanced_pair(view, (1.0 + eps) * gamma_dof)
        if pair is None:
            continue
        try:
            yield design_side_gain(plant, "information", pair[1],
                                   (1.0 + eps) * gamma_dof,
                                   normalize=normalize, seed=seed)
        except ValueError:
            continue
    if n == 0 or np.max(np.linalg.eigvals(view.A).real) < 0:
        yield Controller.full_information(np.zeros((m_u, n + m_d)))


def run_dual_iteration(plant: LfrPlant, max_iters: int = 9,
                       eps_back: float = 0.01, stop_tol: float = 1e-3,
                       normalize: bool = False, seed: int = 0) -> IterationReport:
    """Alternate primal and dual steps from the full-order lower bound.

    Initialization computes the lower bound and searches a starting
    full-information gain (trace-balanced designs with growing slack,
    then the zero-gain embedding for stable plants); the loop alternates
    primal and dual steps, stopping after max_iters steps or when a full
    pass no longer improves the best bound by stop_tol relatively.  The
    final static gain is reconstructed from the last step's certificate
    and verified by an a-posteriori closed-loop analysis.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    t0 = time.monotonic()
    view = _nominal(plant)
    gamma_dof, _, _ = lower_bound_dof(plant, balance=False)

    first = None
    failure = "no candidate gain available"
    for F in _initial_gains(plant, view, gamma_dof, eps_back, normalize, seed):
        try:
            first = iteration_step(plant, "primal", F, eps_back=eps_back,
                                   normalize=normalize, seed=seed)
            break
        except ValueError as exc:
            failure = str(exc)
    if first is None:
        raise ValueError(
            f"initialization infeasible: no starting gain made the first "
            f"primal step feasible (last attempt: {failure}); consider "
            "increasing eps_back to re-balance")

    history = [(1, "primal", first.gamma, first.solver_status,
                time.monotonic() - t0)]
    last_side, last_gamma, last_input = "primal", first.gamma, F
    gain = first.gain
    side = "dual"
    while len(history) < max_iters:
        try:
            step = iteration_step(plant, side, gain, eps_back=eps_back,
                                  normalize=normalize, seed=seed)
        except ValueError:
            # feasibility transfer holds exactly; a breakdown here is
            # numerical, so stop and reconstruct from the last certificate
            break
        if step.gamma > last_gamma:
            # the bound stopped decreasing; discard the step and terminate
            break
        history.append((len(history) + 1, side, step.gamma, step.solver_status,
                        time.monotonic() - t0))
        last_side, last_gamma, last_input = side, step.gamma, gain
        gain = step.gain
        gammas = [h[2] for h in history]
        if len(gammas) >= 3 and gammas[-3] - gammas[-1] < stop_tol * gammas[-3]:
            break
        side = "primal" if side == "dual" else "dual"

    # reconstruction ladder: try a tight level first so the returned gain
    # stays close to the recorded bound, backing off on margin loss
    K = None
    for d in sorted({min(eps_back, 5e-4), eps_back}):
        level = (1.0 + d) * last_gamma
        cert = _step_certificate(plant, last_side, last_input, level)
        if cert is None:
            continue
        X_rec = cert if last_side == "primal" else matops.sym(np.linalg.inv(cert))
        try:
            K = reconstruct_static(plant, X_rec, level, seed=seed)
            break
        except ValueError:
            continue
    if K is None:
        raise ValueError(
            "reconstruction failed: elimination margins were lost at "
            f"gamma={last_gamma:.6g}; consider increasing eps_back")
    closed = close_loop(plant, K)
    gamma_verified, _ = analyze(closed)
    return IterationReport(gamma_lower=gamma_dof, gamma_history=history,
                           final_controller=K, final_gamma_verified=gamma_verified)
