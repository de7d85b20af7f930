"""Static output-feedback generalized H2 synthesis by alternating steps.

The energy-to-peak analogue of the H-infinity iteration, available for
plants whose performance output has no feedthrough (D = 0 and D12 = 0,
which makes the closed-loop feedthrough vanish for every controller).
"""

import dataclasses
import time

import cvxpy as cp
import numpy as np

from . import elim, matops, sdp
from .hinf import (
    IterationReport,
    _INIT_EPS_LADDER,
    _check_side_gain,
    _nominal,
)
from .plant import Controller, LfrPlant, StateSpace, close_loop


@dataclasses.dataclass(frozen=True)
class H2StepResult:
    """Outcome of one generalized-H2 synthesis step.

    certificate is positive definite, and the zero-feedthrough assumption
    guarantees the closed loop has no direct term into the performance
    output; gain is the one designed for the opposite step.
    """

    gamma: float
    certificate: np.ndarray
    gain: Controller


def _require_assumptions(view):
    if np.any(view.D11) or np.any(view.D12):
        raise ValueError(
            "generalized H2 design requires zero feedthrough: D and the "
            "control-to-error block must vanish")


def analyze_gh2(ss: StateSpace, eps_feas: float = 1e-7):
    """Energy-to-peak gain of a stable system with D = 0.

    Minimizes g = gamma^2 over the pair of analysis LMIs and returns
    (gamma, X).  The peak-gain characterization requires zero feedthrough,
    which is validated rather than assumed.
    """
    if np.any(ss.D):
        raise ValueError("generalized H2 analysis requires D = 0")
    n, m = ss.n, ss.n_in
    if n == 0:
        return 0.0, np.zeros((0, 0))
    prob = sdp.LmiProblem()
    X = prob.symmetric("X", n)
    g = prob.scalar("g", nonneg=True)
    prob.require_negdef(sdp.bmat([
        [X @ ss.A + ss.A.T @ X, X @ ss.B],
        [ss.B.T @ X, -np.eye(m)],
    ]))
    prob.require_posdef(sdp.bmat([
        [X, ss.C.T],
        [ss.C, g * np.eye(ss.n_out)],
    ]))
    prob.minimize(g)
    sol = sdp.solve(prob, eps_feas=eps_feas)
    if not sol.ok:
        raise ValueError(
            "analysis LMIs infeasible: the system is not stable or has "
            "unbounded energy-to-peak gain")
    return float(np.sqrt(max(sol.values["g"], 0.0))), sol.values["X"]


# --- full-order lower bound ---------------------------------------------------

def _fullorder_problem(view, g_fixed=None, trace_objective=False):
    """Convexified dynamic full-order synthesis LMIs.

    Standard transformed variables (X, Y, Ah, Bh, Ch, Dh); the zero
    feedthrough of the plant keeps the peak-gain block free of controller
    variables.
    """
    n = view.A.shape[0]
    m_d, k_e, k_y = view.B1.shape[1], view.C1.shape[0], view.C2.shape[0]
    A, B, C = view.A, view.B1, view.C1
    B2, C2, D21 = view.B2, view.C2, view.D21
    prob = sdp.LmiProblem()
    X = prob.symmetric("X", n)
    Y = prob.symmetric("Y", n)
    Ah = prob.rectangular("Ah", n, n)
    Bh = prob.rectangular("Bh", n, k_y)
    Ch = prob.rectangular("Ch", view.B2.shape[1], n)
    Dh = prob.rectangular("Dh", view.B2.shape[1], k_y)
    g = g_fixed if g_fixed is not None else prob.scalar("g", nonneg=True)

    s_y = A @ Y + B2 @ Ch
    s_x = X @ A + Bh @ C2
    a12 = Ah.T + (A + B2 @ Dh @ C2)
    a13 = B + B2 @ Dh @ D21
    a23 = X @ B + Bh @ D21
    prob.require_negdef(sdp.bmat([
        [s_y + s_y.T, a12, a13],
        [a12.T, s_x + s_x.T, a23],
        [a13.T, a23.T, -np.eye(m_d)],
    ]))
    prob.require_posdef(sdp.bmat([
        [Y, np.eye(n), (C @ Y).T],
        [np.eye(n), X, C.T],
        [C @ Y, C, g * np.eye(k_e)],
    ]))
    if trace_objective:
        prob.minimize(cp.trace(X) + cp.trace(Y))
    elif g_fixed is None:
        prob.minimize(g)
    return prob


def _lower_bound(view):
    sol = sdp.solve(_fullorder_problem(view))
    if not sol.ok:
        raise ValueError(
            "full-order synthesis LMIs infeasible: no stabilizing dynamic "
            "controller achieves a finite energy-to-peak bound")
    return float(np.sqrt(max(sol.objective_value, 0.0)))


def _balanced_pair(view, gamma):
    sol = sdp.solve(_fullorder_problem(view, g_fixed=float(gamma) ** 2,
                                       trace_objective=True))
    if not sol.ok:
        return None
    return sol.values["X"], sol.values["Y"]


# --- gain design ---------------------------------------------------------------

def _flat_instance(M0, U, V):
    """Elimination instance for M0 + sym(U^T Z V) < 0 in flat form."""
    m = M0.shape[0]
    P = np.block([[M0, np.eye(m)], [np.eye(m), np.zeros((m, m))]])
    return elim.EliminationInstance(U=U, V=V, W=np.zeros((m, m)), P=P)


def _peak_block_holds(X, C, gamma):
    blk = np.block([[X, C.T], [C, gamma ** 2 * np.eye(C.shape[0])]])
    return float(np.min(np.linalg.eigvalsh(matops.sym(blk)))) > 0


def _design_information(view, Y, gamma, seed=0):
    """Full-information gain F with closed-loop LMIs at X = Y^{-1}."""
    n, m_d = view.A.shape[0], view.B1.shape[1]
    m_u = view.B2.shape[1]
    Ypc = Y @ view.C1.T
    blk = np.block([[Y, Ypc], [Ypc.T, gamma ** 2 * np.eye(view.C1.shape[0])]])
    if float(np.min(np.linalg.eigvalsh(matops.sym(blk)))) <= 0:
        raise ValueError(
            f"information design inequality infeasible at gamma={gamma:.6g}: "
            "the certificate violates the peak-gain block")
    M0 = np.block([
        [view.A @ Y + Y @ view.A.T, view.B1],
        [view.B1.T, -np.eye(m_d)],
    ])
    U = np.hstack([view.B2.T, np.zeros((m_u, m_d))])
    res = elim.eliminate_solve(_flat_instance(M0, U, np.eye(n + m_d)),
                               seed=seed)
    if not res.ok:
        raise ValueError(
            f"information design inequality infeasible at gamma={gamma:.6g} "
            f"(failed conditions: {', '.join(res.failed_conditions)})")
    F1 = np.linalg.solve(Y.T, res.z[:, :n].T).T
    return Controller.full_information(np.hstack([F1, res.z[:, n:]]))


def _design_actuation(view, X, gamma, seed=0):
    """Full-actuation gain E with closed-loop LMIs at X."""
    n, m_d = view.A.shape[0], view.B1.shape[1]
    k_e, k_y = view.C1.shape[0], view.C2.shape[0]
    if not _peak_block_holds(X, view.C1, gamma):
        raise ValueError(
            f"actuation design inequality infeasible at gamma={gamma:.6g}: "
            "the certificate violates the peak-gain block")
    M0 = np.block([
        [view.A.T @ X + X @ view.A, X @ view.B1],
        [view.B1.T @ X, -np.eye(m_d)],
    ])
    U = np.hstack([np.eye(n), np.zeros((n, m_d))])
    V = np.hstack([view.C2, view.D21])
    res = elim.eliminate_solve(_flat_instance(M0, U, V), seed=seed)
    if not res.ok:
        raise ValueError(
            f"actuation design inequality infeasible at gamma={gamma:.6g} "
            f"(failed conditions: {', '.join(res.failed_conditions)})")
    E1 = np.linalg.solve(X, res.z)
    return Controller.full_actuation(np.vstack([E1, np.zeros((k_e, k_y))]))


# --- alternating steps ----------------------------------------------------------

def _step_system(view, side: str, gain: Controller, g_fixed=None,
                 slack: bool = False):
    """Three-LMI system of one generalized-H2 step.

    With slack=True the level is fixed and a common feasibility margin is
    maximized, mirroring the H-infinity step machinery.
    """
    n, m_d = view.A.shape[0], view.B1.shape[1]
    A, B, C = view.A, view.B1, view.C1
    prob = sdp.LmiProblem()
    g = g_fixed if g_fixed is not None else prob.scalar("g", nonneg=True)
    t = prob.scalar("t", nonneg=True) if slack else None

    def _neg(expr, dim):
        prob.require_negdef(expr + t * np.eye(dim) if slack else expr)

    def _pos(expr, dim):
        prob.require_posdef(expr - t * np.eye(dim) if slack else expr)

    if side == "primal":
        F = gain.F
        F1, F2 = F[:, :n], F[:, n:]
        X = prob.symmetric("X", n)
        V = matops.null_basis(np.hstack([view.C2, view.D21]))
        open_a = sdp.bmat([
            [X @ A + A.T @ X, X @ B],
            [B.T @ X, -np.eye(m_d)],
        ])
        if V.shape[1]:
            _neg(V.T @ open_a @ V, V.shape[1])
        AF = A + view.B2 @ F1
        BF = B + view.B2 @ F2
        _neg(sdp.bmat([
            [X @ AF + AF.T @ X, X @ BF],
            [BF.T @ X, -np.eye(m_d)],
        ]), n + m_d)
        _pos(sdp.bmat([
            [X, C.T],
            [C, g * np.eye(C.shape[0])],
        ]), n + C.shape[0])
    else:
        E1 = gain.E[:n, :]
        Y = prob.symmetric("Y", n)
        U = matops.null_basis(view.B2.T)
        AE = A + E1 @ view.C2
        BE = B + E1 @ view.D21
        _neg(sdp.bmat([
            [AE @ Y + Y @ AE.T, BE],
            [BE.T, -np.eye(m_d)],
        ]), n + m_d)
        if U.shape[1]:
            _neg(U.T @ (A @ Y + Y @ A.T + B @ B.T) @ U, U.shape[1])
        _pos(sdp.bmat([
            [Y, Y @ C.T],
            [C @ Y, g * np.eye(C.shape[0])],
        ]), n + C.shape[0])

    if g_fixed is None:
        prob.minimize(g)
    elif slack:
        prob.minimize(-t)
    return prob


def _step_certificate(view, side: str, gain: Controller, gamma: float):
    """Margin-maximized step certificate at a fixed level, or None."""
    sol = sdp.solve(_step_system(view, side, gain,
                                 g_fixed=float(gamma) ** 2, slack=True))
    if not sol.ok:
        return None
    return sol.values["X" if side == "primal" else "Y"]


def step_h2(plant: LfrPlant, side: str, gain: Controller,
            eps_back: float = 0.01, seed: int = 0) -> H2StepResult:
    """One primal or dual generalized-H2 synthesis step.

    Minimizes the peak-gain bound of the step system for the given gain,
    re-solves at (1+eps_back) times the achieved bound with a maximized
    margin, and designs the gain for the opposite step from the interior
    certificate.
    """
    view = _nominal(plant)
    _require_assumptions(view)
    _check_side_gain(view, side, gain)
    sol = sdp.solve(_step_system(view, side, gain))
    if not sol.ok:
        raise ValueError(
            f"{side} synthesis LMIs infeasible (status {sol.status!r})")
    gamma = float(np.sqrt(max(sol.values["g"], 0.0)))
    gamma_back = (1.0 + eps_back) * gamma
    cert = _step_certificate(view, side, gain, gamma_back)
    if cert is None:
        cert = sol.values["X" if side == "primal" else "Y"]
    cert = matops.sym(cert)
    if side == "primal":
        next_gain = _design_actuation(view, cert, gamma_back, seed=seed)
    else:
        next_gain = _design_information(view, cert, gamma_back, seed=seed)
    return H2StepResult(gamma=gamma, certificate=cert, gain=next_gain)


def reconstruct_h2(plant: LfrPlant, X, gamma: float, seed: int = 0) -> Controller:
    """Static gain from a step certificate.

    With X fixed the closed-loop LMIs are affine in K; they are solved
    constructively through the elimination machinery, which also reports
    which solvability condition a too-tight certificate violates.
    """
    view = _nominal(plant)
    _require_assumptions(view)
    X = matops.as_symmetric(X, "X")
    n, m_d = view.A.shape[0], view.B1.shape[1]
    if not _peak_block_holds(X, view.C1, gamma):
        raise ValueError(
            f"static reconstruction infeasible at gamma={gamma:.6g}: the "
            "certificate violates the peak-gain block (margin loss)")
    M0 = np.block([
        [view.A.T @ X + X @ view.A, X @ view.B1],
        [view.B1.T @ X, -np.eye(m_d)],
    ])
    U = np.hstack([view.B2.T @ X, np.zeros((view.B2.shape[1], m_d))])
    V = np.hstack([view.C2, view.D21])
    res = elim.eliminate_solve(_flat_instance(M0, U, V), seed=seed)
    if not res.ok:
        raise ValueError(
            f"static reconstruction infeasible at gamma={gamma:.6g}: the "
            f"{' and '.join(res.failed_conditions)} solvability condition "
            "does not hold at the supplied certificate (margin loss)")
    return Controller.static(res.z)


# --- the alternating algorithm ---------------------------------------------------

def _initial_gains(view, gamma_dof: float, eps_back: float, seed: int):
    """Starting full-information gains, mirroring the H-infinity ladder."""
    n = view.A.shape[0]
    m_d, m_u = view.B1.shape[1], view.B2.shape[1]
    ladder = [eps_back] + [e for e in _INIT_EPS_LADDER if e > eps_back]
    for eps in ladder:
        pair = _balanced_pair(view, (1.0 + eps) * gamma_dof)
        if pair is None:
            continue
        try:
            yield _design_information(view, matops.sym(pair[1]),
                                      (1.0 + eps) * gamma_dof, seed=seed)
        except ValueError:
            continue
    if n == 0 or np.max(np.linalg.eigvals(view.A).real) < 0:
        yield Controller.full_information(np.zeros((m_u, n + m_d)))


def run_dual_iteration_h2(plant: LfrPlant, max_iters: int = 9,
                          eps_back: float = 0.01, stop_tol: float = 1e-3,
                          seed: int = 0) -> IterationReport:
    """Alternate primal and dual generalized-H2 steps.

    Mirrors the H-infinity iteration: full-order lower bound, a ladder of
    starting gains, alternating steps that stop once the bound no longer
    decreases, and a final static gain reconstructed at a tight level and
    verified a posteriori.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    t0 = time.monotonic()
    view = _nominal(plant)
    _require_assumptions(view)
    gamma_dof = _lower_bound(view)

    first = None
    failure = "no candidate gain available"
    for F in _initial_gains(view, gamma_dof, eps_back, seed):
        try:
            first = step_h2(plant, "primal", F, eps_back=eps_back, seed=seed)
            break
        except ValueError as exc:
            failure = str(exc)
    if first is None:
        raise ValueError(
            f"initialization infeasible: no starting gain made the first "
            f"primal step feasible (last attempt: {failure}); consider "
            "increasing eps_back to re-balance")

    history = [(1, "primal", first.gamma, "optimal", time.monotonic() - t0)]
    last_side, last_gamma, last_input = "primal", first.gamma, F
    gain = first.gain
    side = "dual"
    while len(history) < max_iters:
        try:
            step = step_h2(plant, side, gain, eps_back=eps_back, seed=seed)
        except ValueError:
            break
        if step.gamma > last_gamma:
            break
        history.append((len(history) + 1, side, step.gamma, "optimal",
                        time.monotonic() - t0))
        last_side, last_gamma, last_input = side, step.gamma, gain
        gain = step.gain
        gammas = [h[2] for h in history]
        if len(gammas) >= 3 and gammas[-3] - gammas[-1] < stop_tol * gammas[-3]:
            break
        side = "primal" if side == "dual" else "dual"

    K = None
    for d in sorted({min(eps_back, 5e-4), eps_back}):
        level = (1.0 + d) * last_gamma
        cert = _step_certificate(view, last_side, last_input, level)
        if cert is None:
            continue
        cert = matops.sym(cert)
        X_rec = cert if last_side == "primal" else matops.sym(np.linalg.inv(cert))
        try:
            K = reconstruct_h2(plant, X_rec, level, seed=seed)
            break
        except ValueError:
            continue
    if K is None:
        raise ValueError(
            "reconstruction failed: elimination margins were lost at "
            f"gamma={last_gamma:.6g}; consider increasing eps_back")
    gamma_verified, _ = analyze_gh2(close_loop(plant, K))
    return IterationReport(gamma_lower=gamma_dof, gamma_history=history,
                           final_controller=K, final_gamma_verified=gamma_verified)


# --- D-K comparison baseline -----------------------------------------------------

def dk_baseline_h2(plant: LfrPlant, sdp_budget: int = 9,
                   max_stab_iters: int = 20, stab_margin: float = 0.0,
                   seed: int = 0):
    """Alternating D-K iteration used as a comparison baseline.

    Initialization takes K = 0 and the trace-balanced full-order
    certificate X; a stabilization phase minimizes t subject to the
    shifted Lyapunov LMI while alternately fixing X and K, and the
    performance phase then minimizes the bound over the analysis LMIs,
    again alternating.  Returns (gamma, K) after sdp_budget performance
    solves.  stab_margin tightens the acceptance t < -stab_margin.
    """
    view = _nominal(plant)
    _require_assumptions(view)
    n, m_d = view.A.shape[0], view.B1.shape[1]
    m_u, k_y = view.B2.shape[1], view.C2.shape[0]
    A, B, C = view.A, view.B1, view.C1
    B2, C2, D21 = view.B2, view.C2, view.D21

    gamma0 = _lower_bound(view)
    pair = _balanced_pair(view, 1.01 * gamma0)
    if pair is None:
        raise ValueError("initialization infeasible: balanced re-solve failed")
    X = matops.sym(pair[0])
    K = np.zeros((m_u, k_y))

    def _shifted(Xv, Kv, t):
        Acl = A + B2 @ Kv @ C2
        Bcl = B + B2 @ Kv @ D21
        lmi = sdp.bmat([
            [Xv @ Acl + Acl.T @ Xv, Xv @ Bcl],
            [Bcl.T @ Xv, -np.eye(m_d)],
        ])
        return lmi - t * np.eye(n + m_d)

    # stabilization phase: alternately fix X and K while minimizing t
    for attempt in range(max_stab_iters):
        fix_x = attempt % 2 == 0
        prob = sdp.LmiProblem()
        t = prob.scalar("t")
        if fix_x:
            Kv = prob.rectangular("K", m_u, k_y)
            prob.require_semidef(_shifted(X, Kv, t), sense="neg")
        else:
            Xv = prob.symmetric("X", n)
            prob.require_posdef(Xv)
            prob.require_semidef(_shifted(Xv, K, t), sense="neg")
        prob.minimize(t)
        sol = sdp.solve(prob)
        if not sol.ok:
            continue
        if fix_x:
            K = sol.values["K"]
        else:
            X = matops.sym(sol.values["X"])
        if sol.values["t"] < -stab_margin:
            break
    else:
        raise ValueError("stabilization phase failed: no stabilizing static "
                         "gain found within the iteration budget")

    # performance phase: alternately fix X and K while minimizing the bound
    gamma = np.inf
    for attempt in range(sdp_budget):
        fix_x = attempt % 2 == 1
        prob = sdp.LmiProblem()
        g = prob.scalar("g", nonneg=True)
        if fix_x:
            Kv = prob.rectangular("K", m_u, k_y)
            Acl = A + B2 @ Kv @ C2
            Bcl = B + B2 @ Kv @ D21
            prob.require_negdef(sdp.bmat([
                [X @ Acl + Acl.T @ X, X @ Bcl],
                [Bcl.T @ X, -np.eye(m_d)],
            ]))
            prob.require_posdef(sdp.bmat([
                [X, C.T],
                [C, g * np.eye(C.shape[0])],
            ]))
        else:
            Xv = prob.symmetric("X", n)
            Acl = A + B2 @ K @ C2
            Bcl = B + B2 @ K @ D21
            prob.require_negdef(sdp.bmat([
                [Xv @ Acl + Acl.T @ Xv, Xv @ Bcl],
                [Bcl.T @ Xv, -np.eye(m_d)],
            ]))
            prob.require_posdef(sdp.bmat([
                [Xv, C.T],
                [C, g * np.eye(C.shape[0])],
            ]))
        prob.minimize(g)
        sol = sdp.solve(prob)
        if not sol.ok:
            continue
        if fix_x:
            K = sol.values["K"]
        else:
            X = matops.sym(sol.values["X"])
        gamma = min(gamma, float(np.sqrt(max(sol.values["g"], 0.0))))
    if not np.isfinite(gamma):
        raise ValueError("performance phase failed: analysis LMIs never solved")
    return gamma, Controller.static(K)
