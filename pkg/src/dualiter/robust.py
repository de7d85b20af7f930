"""Robust analysis and synthesis against structured time-varying uncertainty.

Plants carry an uncertainty channel w = Delta(t) z with Delta confined to a
compact value set (a polytope of matrices or repeated scalar intervals).
Robust performance is certified by the closed-loop inequality with a
multiplier P drawn from an LMI-parameterized family that encodes the value
set; the dual inequalities use the family of inverses, which for both
supported set kinds again has an explicit LMI parameterization.

Synthesis alternates a primal step (annihilated open-loop inequality plus
the closed-loop inequality of a full-information gain, sharing one
multiplier and a coupled certificate pair) and a dual step (the counterpart
in the dual inequalities with a full-actuation gain).  Either step's
certificates map to a coupled triple (X, Y, P) from which a full-order
controller is eliminated on an augmented plant after completing the
certificate pair to a closed-loop certificate.  A fixed-multiplier
alternation (analysis in (X, P), synthesis at frozen values) is provided
for comparison, in the classical nominal form and in two robust variants.

Everything degenerates gracefully at p = q = 0: multipliers become empty,
the inequalities reduce to their nominal counterparts, and the iteration
drivers defer to the plain H-infinity machinery so that runs without
uncertainty reproduce it exactly.
"""

from __future__ import annotations

import dataclasses
import itertools
import time

import cvxpy as cp
import numpy as np
import scipy.linalg

from . import elim, hinf, matops, sdp
from .hinf import (
    HinfStepResult,
    IterationReport,
    _INIT_EPS_LADDER,
    _gain_mid,
    _outer,
    _scaled_dual_mid,
)
from .plant import Controller, LfrPlant, StateSpace, close_loop

__all__ = [
    "ValueSet",
    "MultiplierHandle",
    "MultiplierSet",
    "RobustStepResult",
    "make_multiplier_set",
    "multiplier_margin",
    "analyze_robust",
    "lower_bound_gs",
    "design_side_gain_robust",
    "step_robust",
    "reconstruct_robust",
    "run_dual_iteration_robust",
    "alt_init_robust",
    "dk_iterate",
]


# --- value sets --------------------------------------------------------------

@dataclasses.dataclass(frozen=True, eq=False)
class ValueSet:
    """Compact set of uncertainty values Delta.

    kind "polytope" carries generator matrices (all q x p) whose convex
    hull is the set; kind "repeated_interval" carries blocks (size, lo, hi)
    and describes Delta = blkdiag(delta_j I_size) with each scalar confined
    to its interval.  A polytope with a single zero generator models a
    channel that is wired up but carries no uncertainty.
    """

    kind: str
    generators: tuple = ()
    blocks: tuple = ()

    def __post_init__(self):
        if self.kind == "polytope":
            if self.blocks:
                raise ValueError("a polytope value set carries no interval blocks")
            if not self.generators:
                raise ValueError("a polytope value set needs at least one generator")
            gens = tuple(matops.as_matrix(G, f"generator {i}")
                         for i, G in enumerate(self.generators))
            shape = gens[0].shape
            if any(G.shape != shape for G in gens):
                raise ValueError("generators must all share one shape")
            object.__setattr__(self, "generators", gens)
        elif self.kind == "repeated_interval":
            if self.generators:
                raise ValueError("an interval value set carries no generators")
            if not self.blocks:
                raise ValueError("an interval value set needs at least one block")
            blocks = []
            for i, blk in enumerate(self.blocks):
                size, lo, hi = blk
                size = int(size)
                lo, hi = float(lo), float(hi)
                if size < 1:
                    raise ValueError(f"block {i}: size must be a positive integer")
                if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                    raise ValueError(f"block {i}: needs finite bounds with lo < hi")
                blocks.append((size, lo, hi))
            object.__setattr__(self, "blocks", tuple(blocks))
        else:
            raise ValueError(f"unknown value set kind {self.kind!r}")

    @classmethod
    def polytope(cls, generators) -> "ValueSet":
        return cls(kind="polytope", generators=tuple(generators))

    @classmethod
    def repeated_interval(cls, blocks) -> "ValueSet":
        return cls(kind="repeated_interval", blocks=tuple(blocks))

    @classmethod
    def empty(cls) -> "ValueSet":
        """The degenerate set of an absent uncertainty channel (p = q = 0)."""
        return cls(kind="polytope", generators=(np.zeros((0, 0)),))

    @property
    def p(self) -> int:
        """Columns of Delta (rows of the uncertainty output z)."""
        if self.kind == "polytope":
            return self.generators[0].shape[1]
        return sum(s for s, _, _ in self.blocks)

    @property
    def q(self) -> int:
        """Rows of Delta (rows of the uncertainty input w)."""
        if self.kind == "polytope":
            return self.generators[0].shape[0]
        return sum(s for s, _, _ in self.blocks)

    def vertices(self) -> list:
        """Extreme points: the generators, or every interval corner."""
        if self.kind == "polytope":
            return [G.copy() for G in self.generators]
        corners = itertools.product(*[(lo, hi) for _, lo, hi in self.blocks])
        return [scipy.linalg.block_diag(*[v * np.eye(s) for (s, _, _), v
                                          in zip(self.blocks, corner)])
                for corner in corners]

    def sample(self, rng, count: int) -> list:
        """Random members: convex generator combinations, or uniform scalars."""
        out = []
        for _ in range(count):
            if self.kind == "polytope":
                w = rng.dirichlet(np.ones(len(self.generators)))
                out.append(sum(wi * G for wi, G in zip(w, self.generators)))
            else:
                out.append(scipy.linalg.block_diag(
                    *[rng.uniform(lo, hi) * np.eye(s) for s, lo, hi in self.blocks]))
        return out

    @classmethod
    def from_dict(cls, doc) -> "ValueSet":
        """Parse the uncertainty document format.

        Accepted shapes: {"type": "polytope", "generators": [...]} and
        {"type": "repeated_interval", "blocks": [{"size", "lo", "hi"}, ...]}.
        """
        if not isinstance(doc, dict):
            raise ValueError("uncertainty document must be a JSON object")
        kind = doc.get("type")
        if kind == "polytope":
            gens = doc.get("generators")
            if not isinstance(gens, list) or not gens:
                raise ValueError('field "generators": missing or empty')
            try:
                arrays = tuple(np.asarray(G, dtype=float) for G in gens)
            except (TypeError, ValueError) as exc:
                raise ValueError(f'field "generators": not numeric arrays ({exc})') from exc
            return cls(kind="polytope", generators=arrays)
        if kind == "repeated_interval":
            blocks = doc.get("blocks")
            if not isinstance(blocks, list) or not blocks:
                raise ValueError('field "blocks": missing or empty')
            parsed = []
            for i, blk in enumerate(blocks):
                if not isinstance(blk, dict):
                    raise ValueError(f'field "blocks[{i}]": must be an object')
                try:
                    parsed.append((int(blk["size"]), float(blk["lo"]), float(blk["hi"])))
                except (KeyError, TypeError, ValueError) as exc:
                    raise ValueError(
                        f'field "blocks[{i}]": needs integer "size" and numeric '
                        f'"lo", "hi" ({exc})') from exc
            return cls(kind="repeated_interval", blocks=tuple(parsed))
        raise ValueError(f'field "type": expected "polytope" or "repeated_interval", got {kind!r}')

    def to_dict(self) -> dict:
        if self.kind == "polytope":
            return {"type": "polytope",
                    "generators": [G.tolist() for G in self.generators]}
        return {"type": "repeated_interval",
                "blocks": [{"size": s, "lo": lo, "hi": hi} for s, lo, hi in self.blocks]}


def _min_eig(M) -> float:
    return float(np.min(np.linalg.eigvalsh(matops.sym(M)))) if M.size else np.inf


def _max_eig(M) -> float:
    return float(np.max(np.linalg.eigvalsh(matops.sym(M)))) if M.size else -np.inf


def multiplier_margin(values: ValueSet, P, dual: bool = False) -> float:
    """Smallest slack by which a realized multiplier certifies a value set.

    A primal multiplier must satisfy [I; Delta]^T P [I; Delta] >= 0 at every
    vertex and [0; I]^T P [0; I] <= 0; a dual one [I; 0]^T P [I; 0] >= 0 and
    [-Delta^T; I]^T P [-Delta^T; I] <= 0 at every vertex.  The vertex form
    is concave (respectively convex) in Delta whenever the channel-side
    condition holds, so vertex validity extends to the whole set.  The
    return value is the worst eigenvalue margin over all conditions;
    nonnegative means valid.  Interval multipliers touch zero at the
    interval endpoints by construction.
    """
    P = matops.as_symmetric(P, "P")
    p, q = values.p, values.q
    if P.shape != (p + q, p + q):
        raise ValueError(f"multiplier must be {(p + q, p + q)}, got {P.shape}")
    if p + q == 0:
        return np.inf
    margins = []
    if dual:
        margins.append(_min_eig(P[:p, :p]))
        for Delta in values.vertices():
            J = np.vstack([-Delta.T, np.eye(q)])
            margins.append(-_max_eig(J.T @ P @ J))
    else:
        margins.append(-_max_eig(P[p:, p:]))
        for Delta in values.vertices():
            J = np.vstack([np.eye(p), Delta])
            margins.append(_min_eig(J.T @ P @ J))
    return float(min(margins))


# --- multiplier families -----------------------------------------------------

def _blkdiag(blocks):
    if len(blocks) == 1:
        return blocks[0]
    k = len(blocks)
    return sdp.bmat([[blocks[i] if i == j else None for j in range(k)]
                     for i in range(k)])


def _interval_multiplier(Hs, blocks, dual: bool):
    """Assemble the structured interval multiplier from its H blocks.

    Works identically for cvxpy expressions and numeric arrays.  The primal
    member certifies (delta - lo)(hi - delta)(H + H^T) >= 0 on the interval;
    the dual member is exactly its inverse at H -> H^{-1}.
    """
    P11s, P12s, P22s = [], [], []
    for H, (s, a, b) in zip(Hs, blocks):
        S = H + H.T
        if dual:
            c = 1.0 / (b - a) ** 2
            P11s.append(c * S)
            P12s.append(c * (a * H.T + b * H))
            P22s.append((c * a * b) * S)
        else:
            P11s.append((-a * b) * S)
            P12s.append(a * H + b * H.T)
            P22s.append(-S)
    P11, P12, P22 = _blkdiag(P11s), _blkdiag(P12s), _blkdiag(P22s)
    return sdp.bmat([[P11, P12], [P12.T, P22]])


@dataclasses.dataclass(frozen=True)
class MultiplierHandle:
    """A multiplier attached to a problem.

    ``expr`` is the affine matrix expression to place in an inequality;
    ``extract`` recovers the realized value from a solution's values dict.
    """

    expr: object
    reader: object

    def extract(self, values: dict) -> np.ndarray:
        return self.reader(values)


@dataclasses.dataclass(frozen=True, eq=False)
class MultiplierSet:
    """LMI-parameterized multiplier family certifying one value set.

    For a polytope the primal family is the set of symmetric P with
    [0; I]^T P [0; I] < 0 and [I; Delta_i]^T P [I; Delta_i] > 0 at every
    generator; every member is nonsingular with exactly p positive and q
    negative eigenvalues.  For repeated intervals the family is structured,
    one square H block per repeated scalar with H + H^T > 0.  The dual
    family parameterizes the inverses directly, so primal/dual pairs can be
    searched independently without inverting a variable.
    """

    values: ValueSet

    @property
    def dim(self) -> int:
        return self.values.p + self.values.q

    def attach_primal(self, prob: sdp.LmiProblem, tag: str = "P") -> MultiplierHandle:
        v = self.values
        p, q = v.p, v.q
        if p + q == 0:
            empty = np.zeros((0, 0))
            return MultiplierHandle(empty, lambda values: empty)
        if v.kind == "polytope":
            P = prob.symmetric(tag, p + q)
            prob.require_negdef(P[p:, p:])
            for G in v.generators:
                J = np.vstack([np.eye(p), G])
                prob.require_posdef(J.T @ P @ J)
            return MultiplierHandle(P, lambda values: values[tag])
        Hs = [prob.rectangular(f"{tag}_H{j}", s, s)
              for j, (s, _, _) in enumerate(v.blocks)]
        for H in Hs:
            prob.require_posdef(H + H.T)
        names = tuple(f"{tag}_H{j}" for j in range(len(Hs)))
        expr = _interval_multiplier(Hs, v.blocks, dual=False)
        reader = lambda values: _interval_multiplier(
            [values[nm] for nm in names], v.blocks, dual=False)
        return MultiplierHandle(expr, reader)

    def attach_dual(self, prob: sdp.LmiProblem, tag: str = "Pt") -> MultiplierHandle:
        v = self.values
        p, q = v.p, v.q
        if p + q == 0:
            empty = np.zeros((0, 0))
            return MultiplierHandle(empty, lambda values: empty)
        if v.kind == "polytope":
            Pt = prob.symmetric(tag, p + q)
            prob.require_posdef(Pt[:p, :p])
            for G in v.generators:
                J = np.vstack([-G.T, np.eye(q)])
                prob.require_negdef(J.T @ Pt @ J)
            return MultiplierHandle(Pt, lambda values: values[tag])
        Hs = [prob.rectangular(f"{tag}_H{j}", s, s)
              for j, (s, _, _) in enumerate(v.blocks)]
        for H in Hs:
            prob.require_posdef(H + H.T)
        names = tuple(f"{tag}_H{j}" for j in range(len(Hs)))
        expr = _interval_multiplier(Hs, v.blocks, dual=True)
        reader = lambda values: _interval_multiplier(
            [values[nm] for nm in names], v.blocks, dual=True)
        return MultiplierHandle(expr, reader)


def make_multiplier_set(v: ValueSet) -> MultiplierSet:
    """The multiplier family used for a value set (see MultiplierSet)."""
    if not isinstance(v, ValueSet):
        raise TypeError("expected a ValueSet")
    return MultiplierSet(values=v)


# --- stacked inequalities ----------------------------------------------------

def _primal_rows(lp: LfrPlant) -> np.ndarray:
    """Row stack of the robust primal inequality against columns (x, w, d).

    Pairs blockwise with blkdiag([0 X; X 0], P, blkdiag(I, -g I)): state
    identity and state equation, then z row and w identity, then e row and
    d identity.
    """
    d = lp.dims
    n, p, q, m_d, k_e = d["n"], d["p"], d["q"], d["m_d"], d["k_e"]
    Z = np.zeros
    return np.block([
        [np.eye(n), Z((n, q)), Z((n, m_d))],
        [lp.A, lp.B1, lp.B2],
        [lp.C1, lp.D11, lp.D12],
        [Z((q, n)), np.eye(q), Z((q, m_d))],
        [lp.C2, lp.D21, lp.D22],
        [Z((m_d, n)), Z((m_d, q)), np.eye(m_d)],
    ])


def _dual_rows(lp: LfrPlant) -> np.ndarray:
    """[I; -G*] row stack of the dual inequality against columns (x, z, e).

    Pairs with blkdiag([0 Y; Y 0], Ptilde, blkdiag(I, -1/g I)); the last
    m_d rows carry the 1/g weight and are what the Schur embedding or the
    multiply-through-by-g substitution act on.
    """
    d = lp.dims
    n, p, q, m_d, k_e = d["n"], d["p"], d["q"], d["m_d"], d["k_e"]
    Z = np.zeros
    return np.block([
        [np.eye(n), Z((n, p)), Z((n, k_e))],
        [-lp.A.T, -lp.C1.T, -lp.C2.T],
        [Z((p, n)), np.eye(p), Z((p, k_e))],
        [-lp.B1.T, -lp.D11.T, -lp.D21.T],
        [Z((k_e, n)), Z((k_e, p)), np.eye(k_e)],
        [-lp.B2.T, -lp.D12.T, -lp.D22.T],
    ])


def _open_rows(lp: LfrPlant) -> np.ndarray:
    return np.block([[lp.A, lp.B1, lp.B2],
                     [lp.C1, lp.D11, lp.D12],
                     [lp.C2, lp.D21, lp.D22]])


def _primal_mid(P, g, k_e: int, m_d: int):
    gm = _gain_mid(g, k_e, m_d)
    if P.shape[0] == 0:
        return gm
    return sdp.bmat([[P, None], [None, gm]])


def _dual_scaled_mid(Pt, g, k_e: int, m_d: int):
    """blkdiag(g Ptilde, g I, -I) written in the barred variables."""
    sm = _scaled_dual_mid(g, k_e, m_d)
    if Pt.shape[0] == 0:
        return sm
    return sdp.bmat([[Pt, None], [None, sm]])


def _dual_fixed_mid(Pt, g: float, k_e: int, m_d: int):
    """blkdiag(Ptilde, I, -1/g I) at a numerically fixed level."""
    lower = -np.eye(m_d) / float(g) if m_d else np.zeros((0, 0))
    gm = sdp.bmat([[np.eye(k_e), None], [None, lower]])
    if Pt.shape[0] == 0:
        return gm
    return sdp.bmat([[Pt, None], [None, gm]])


def _dual_core_mid(Pt, k_e: int, m_d: int):
    """Dual mid with the 1/g block zeroed out for the Schur embedding."""
    gm = np.block([[np.eye(k_e), np.zeros((k_e, m_d))],
                   [np.zeros((m_d, k_e)), np.zeros((m_d, m_d))]])
    if Pt.shape[0] == 0:
        return gm
    return sdp.bmat([[Pt, None], [None, gm]])


def _annihilator_v(lp: LfrPlant) -> np.ndarray:
    return matops.null_basis(np.hstack([lp.C3, lp.D31, lp.D32]))


def _annihilator_u(lp: LfrPlant) -> np.ndarray:
    return matops.null_basis(np.hstack([lp.B3.T, lp.D13.T, lp.D23.T]))


def _require_matching(lp: LfrPlant, mset: MultiplierSet) -> None:
    if not isinstance(mset, MultiplierSet):
        raise TypeError("expected a MultiplierSet")
    d = lp.dims
    if (mset.values.q, mset.values.p) != (d["q"], d["p"]):
        raise ValueError(
            f"value set is {mset.values.q} x {mset.values.p}, but the plant's "
            f"uncertainty channel is {d['q']} x {d['p']}")


def _as_closed_lfr(closed) -> LfrPlant:
    """Wrap a nominal closed loop so the stacked builders apply uniformly."""
    if isinstance(closed, LfrPlant):
        return closed
    n = closed.n
    return LfrPlant(A=closed.A, B2=closed.B, B3=np.zeros((n, 0)),
                    C2=closed.C, C3=np.zeros((0, n)), D22=closed.D, p=0, q=0)


# --- robust analysis ---------------------------------------------------------

def _analysis_problem(lp: LfrPlant, mset: MultiplierSet, g_fixed=None):
    prob = sdp.LmiProblem()
    d = lp.dims
    X = prob.symmetric("X", d["n"])
    g = g_fixed if g_fixed is not None else prob.scalar("g", nonneg=True)
    handle = mset.attach_primal(prob, "P")
    prob.require_posdef(X)
    S = _primal_rows(lp)
    mid = _primal_mid(handle.expr, g, d["k_e"], d["m_d"])
    prob.require_negdef(sdp.ls_form(_outer(X), mid, S))
    if g_fixed is None:
        prob.minimize(g)
    return prob, handle


def analyze_robust(closed: LfrPlant, mset: MultiplierSet, eps_feas: float = 1e-7):
    """Minimal certified robust energy-gain bound of a closed uncertain loop.

    Returns (gamma, X, P) with X > 0 and P a realized multiplier.  The
    bound holds for every time-varying Delta in the value set; for a plant
    without uncertainty channel this is the nominal analysis with an empty
    multiplier.  Infeasibility means the loop is not robustly stable
    against the multiplier relaxation (or the gain is unbounded).
    """
    closed = _as_closed_lfr(closed)
    d = closed.dims
    if d["m_u"] or d["k_y"]:
        raise ValueError("robust analysis expects a closed loop (no control or "
                         "measurement channels)")
    _require_matching(closed, mset)
    if mset.dim == 0:
        gamma, X = hinf.analyze(closed.performance_channel(), eps_feas=eps_feas)
        return gamma, X, np.zeros((0, 0))
    prob, handle = _analysis_problem(closed, mset)
    sol = sdp.solve(prob, eps_feas=eps_feas)
    if sol.status == "infeasible":
        raise ValueError("robust analysis LMIs infeasible: the loop is not "
                         "robustly stable against the multiplier family, or the "
                         "gain is unbounded")
    if not sol.ok:
        raise ValueError(f"robust analysis solve failed with status {sol.status!r}")
    gamma = float(np.sqrt(max(sol.values["g"], 0.0)))
    return gamma, sol.values["X"], handle.extract(sol.values)


# --- one-sided lower bound ---------------------------------------------------

def _gs_problem_robust(lp: LfrPlant, mset: MultiplierSet, g_fixed=None,
                       trace_objective: bool = False):
    """Coupled annihilated inequalities with independent multipliers.

    The primal inequality holds at (X, P), the dual one at (Y, Ptilde)
    with an independent dual-family multiplier; [X I; I Y] > 0 couples the
    certificates.  The 1/g block of the dual inequality is made affine by
    a Schur embedding, so g stays a plain decision variable.
    """
    d = lp.dims
    n, p, q, m_d, k_e = d["n"], d["p"], d["q"], d["m_d"], d["k_e"]
    V = _annihilator_v(lp)
    U = _annihilator_u(lp)
    Sp = _primal_rows(lp)
    Sd = _dual_rows(lp)
    prob = sdp.LmiProblem()
    X = prob.symmetric("X", n)
    Y = prob.symmetric("Y", n)
    g = g_fixed if g_fixed is not None else prob.scalar("g", nonneg=True)
    hP = mset.attach_primal(prob, "P")
    hPt = mset.attach_dual(prob, "Pt")
    prob.require_posdef(sdp.bmat([[X, np.eye(n)], [np.eye(n), Y]]))
    if V.shape[1]:
        mid = _primal_mid(hP.expr, g, k_e, m_d)
        prob.require_negdef(sdp.ls_form(_outer(X), mid, Sp @ V))
    if U.shape[1]:
        SdU = Sd @ U
        core = sdp.ls_form(_outer(Y), _dual_core_mid(hPt.expr, k_e, m_d), SdU)
        cross = SdU[2 * n + p + q + k_e:, :]
        prob.require_posdef(sdp.gamma_embed(core, cross, g))
    if trace_objective:
        prob.minimize(cp.trace(X) + cp.trace(Y))
    elif g_fixed is None:
        prob.minimize(g)
    return prob, hP, hPt


def lower_bound_gs(plant: LfrPlant, mset: MultiplierSet, balance: bool = True,
                   eps_back: float = 0.01):
    """Infimal gain bound of the one-sided multiplier relaxation.

    Returns (gamma, X, Y, P, Ptilde).  Because the primal and dual
    multipliers are searched independently instead of as an inverse pair,
    the bound sits below every level the alternating steps can certify.
    With balance set, the certificates are re-solved at (1+eps_back) times
    the bound under trace minimization, which aids the initial gain design.
    For a nominal plant this is the full-order lower bound with empty
    multipliers.
    """
    _require_matching(plant, mset)
    if mset.dim == 0:
        gamma, X, Y = hinf.lower_bound_dof(plant, balance=balance, eps_back=eps_back)
        empty = np.zeros((0, 0))
        return gamma, X, Y, empty, empty
    prob, hP, hPt = _gs_problem_robust(plant, mset)
    sol = sdp.solve(prob)
    if sol.status == "infeasible":
        raise ValueError("one-sided synthesis LMIs infeasible: no multiplier "
                         "from the family certifies any finite level")
    if not sol.ok:
        raise ValueError(f"one-sided bound solve failed with status {sol.status!r}")
    gamma = float(np.sqrt(max(sol.values["g"], 0.0)))
    vals, hP_used, hPt_used = sol.values, hP, hPt
    if balance:
        prob_b, hP_b, hPt_b = _gs_problem_robust(
            plant, mset, g_fixed=((1.0 + eps_back) * gamma) ** 2,
            trace_objective=True)
        sol_b = sdp.solve(prob_b)
        if sol_b.ok:
            vals, hP_used, hPt_used = sol_b.values, hP_b, hPt_b
    return (gamma, vals["X"], vals["Y"],
            hP_used.extract(vals), hPt_used.extract(vals))


# --- gain extraction ---------------------------------------------------------

def _elimination_outer_robust(X: np.ndarray, P: np.ndarray, gamma: float,
                              dims: dict) -> np.ndarray:
    """Mid matrix of the closed-loop inequality in elimination row order.

    Coordinates are (x, w, d | state row, z row, e row); the multiplier's
    blocks land on the (w, z) pairing, mirroring how the identity rows and
    data rows interleave in the stacked form.  The negative eigenvalue
    count is n + q + m_d, exactly the column count of the open-loop data.
    """
    n, p, q = dims["n"], dims["p"], dims["q"]
    k_e, m_d = dims["k_e"], dims["m_d"]
    g = gamma ** 2
    P11, P12, P22 = P[:p, :p], P[:p, p:], P[p:, p:]
    Z = np.zeros
    return np.block([
        [Z((n, n)), Z((n, q)), Z((n, m_d)), X, Z((n, p)), Z((n, k_e))],
        [Z((q, n)), P22, Z((q, m_d)), Z((q, n)), P12.T, Z((q, k_e))],
        [Z((m_d, n)), Z((m_d, q)), -g * np.eye(m_d), Z((m_d, n)), Z((m_d, p)), Z((m_d, k_e))],
        [X, Z((n, q)), Z((n, m_d)), Z((n, n)), Z((n, p)), Z((n, k_e))],
        [Z((p, n)), P12, Z((p, m_d)), Z((p, n)), P11, Z((p, k_e))],
        [Z((k_e, n)), Z((k_e, q)), Z((k_e, m_d)), Z((k_e, n)), Z((k_e, p)), np.eye(k_e)],
    ])


def _design_instance_robust(lp: LfrPlant, side: str, X: np.ndarray,
                            P: np.ndarray, gamma: float) -> elim.EliminationInstance:
    d = lp.dims
    W = _open_rows(lp)
    Pout = _elimination_outer_robust(X, P, gamma, d)
    if side == "information":
        U = np.vstack([lp.B3, lp.D13, lp.D23]).T
        Vr = np.eye(d["n"] + d["q"] + d["m_d"])
    elif side == "actuation":
        U = np.eye(d["n"] + d["p"] + d["k_e"])
        Vr = np.hstack([lp.C3, lp.D31, lp.D32])
    else:  # static
        U = np.vstack([lp.B3, lp.D13, lp.D23]).T
        Vr = np.hstack([lp.C3, lp.D31, lp.D32])
    return elim.EliminationInstance(U=U, V=Vr, W=W, P=Pout)


def _eliminate_gain(lp: LfrPlant, side: str, cert: np.ndarray,
                    mult: np.ndarray, gamma: float, seed: int) -> Controller:
    """Extract a one-sided gain from certificates of its design inequality.

    side "actuation" eliminates at (X, P) directly; side "information"
    works on the inverse pair (Y^{-1}, Ptilde^{-1}), which the dualization
    lemma maps onto the primal closed-loop inequality.
    """
    if side == "information":
        X = matops.sym(np.linalg.inv(cert))
        P = matops.sym(np.linalg.inv(mult)) if mult.size else mult
    else:
        X, P = cert, mult
    inst = _design_instance_robust(lp, side, X, P, gamma)
    result = elim.eliminate_solve(inst, seed=seed)
    if not result.ok:
        raise ValueError(
            f"{side} design inequality infeasible at gamma={gamma:.6g} "
            f"(failed conditions: {', '.join(result.failed_conditions)})")
    if side == "information":
        return Controller.full_information(result.z)
    return Controller.full_actuation(result.z)


def _one_sided_problem(lp: LfrPlant, mset: MultiplierSet, side: str,
                       g_fixed=None, slack: bool = False):
    """Annihilated inequality of one side with its multiplier.

    The information side is multiplied through by g, so its certificate
    and multiplier come back barred (Ybar = g Y, g Ptilde); both families
    are cones, which is what makes the substitution legitimate.
    """
    d = lp.dims
    n, m_d, k_e = d["n"], d["m_d"], d["k_e"]
    prob = sdp.LmiProblem()
    g = g_fixed if g_fixed is not None else prob.scalar("g", nonneg=True)
    t = prob.scalar("t", nonneg=True) if slack else None
    if side == "actuation":
        X = prob.symmetric("X", n)
        handle = mset.attach_primal(prob, "P")
        prob.require_posdef(X)
        V = _annihilator_v(lp)
        form = sdp.ls_form(_outer(X), _primal_mid(handle.expr, g, k_e, m_d),
                           _primal_rows(lp) @ V)
        if slack:
            form = form + t * np.eye(form.shape[0])
        prob.require_negdef(form)
    else:
        Yb = prob.symmetric("Ybar", n)
        handle = mset.attach_dual(prob, "Pt")
        prob.require_posdef(Yb)
        U = _annihilator_u(lp)
        form = sdp.ls_form(_outer(Yb), _dual_scaled_mid(handle.expr, g, k_e, m_d),
                           _dual_rows(lp) @ U)
        if slack:
            form = form - t * np.eye(form.shape[0])
        prob.require_posdef(form)
    if g_fixed is None:
        prob.minimize(g)
    elif slack:
        prob.minimize(-t)
    return prob, handle


def design_side_gain_robust(plant: LfrPlant, mset: MultiplierSet, side: str,
                            eps_back: float = 0.01, seed: int = 0):
    """Design a robust full-information gain F or full-actuation gain E.

    Minimizes the level of the one-sided annihilated inequality with its
    multiplier, re-solves at (1+eps_back) times the achieved bound with a
    maximized feasibility margin, and eliminates the gain from the
    closed-loop inequality at the re-solved certificates.  Returns
    (controller, multiplier): the dual-family member for the information
    side, the primal-family member for the actuation side.
    """
    if side not in ("information", "actuation"):
        raise ValueError(f"side must be 'information' or 'actuation', got {side!r}")
    _require_matching(plant, mset)
    prob, _ = _one_sided_problem(plant, mset, side)
    sol = sdp.solve(prob)
    if not sol.ok:
        raise ValueError(f"{side} synthesis LMIs infeasible (status {sol.status!r})")
    gamma = float(np.sqrt(max(sol.values["g"], 0.0)))
    level = (1.0 + eps_back) * gamma
    prob_m, handle_m = _one_sided_problem(plant, mset, side,
                                          g_fixed=level ** 2, slack=True)
    sol_m = sdp.solve(prob_m)
    if sol_m.ok:
        vals, handle, g_used = sol_m.values, handle_m, level ** 2
    else:
        prob_f, handle_f = _one_sided_problem(plant, mset, side)
        vals, handle, g_used = sol.values, handle_f, max(sol.values["g"],
                                                         np.finfo(float).tiny)
    if side == "actuation":
        cert, mult = vals["X"], handle.extract(vals)
    else:
        cert = matops.sym(vals["Ybar"] / g_used)
        mult = handle.extract(vals) / g_used
    controller = _eliminate_gain(plant, side, cert, mult, level, seed)
    return controller, mult


# --- alternating steps -------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class RobustStepResult(HinfStepResult):
    """Robust step outcome.

    On top of the plain step fields this carries the realized multiplier
    and the second certificate of the coupled pair (partner), which is
    what the full-order reconstruction consumes; both live at level
    (1+eps_back)*gamma.  Steps on plants without uncertainty channel defer
    to the plain iteration and carry an empty multiplier.
    """

    multiplier: np.ndarray | None = None
    partner: np.ndarray | None = None


def _check_side_gain_robust(lp: LfrPlant, side: str, gain: Controller) -> None:
    n = lp.dims["n"]
    if side == "primal":
        if gain.kind != "full_information":
            raise ValueError("primal step expects a full-information gain")
        A_cl = lp.A + lp.B3 @ gain.F[:, :n]
        label = "A + B3 F1"
    elif side == "dual":
        if gain.kind != "full_actuation":
            raise ValueError("dual step expects a full-actuation gain")
        A_cl = lp.A + gain.E[:n, :] @ lp.C3
        label = "A + E1 C3"
    else:
        raise ValueError(f"side must be 'primal' or 'dual', got {side!r}")
    if n and np.max(np.linalg.eigvals(A_cl).real) >= 0:
        raise ValueError(f"{label} is not stable; the step's hypothesis fails")


def _step_problem_robust(lp: LfrPlant, closed: LfrPlant, mset: MultiplierSet,
                         side: str, g_fixed=None, slack: bool = False,
                         static_mode: bool = False):
    """Three-LMI system of one robust synthesis step.

    Primal: [X Y; Y Y] > 0, the annihilated open-loop primal inequality at
    (X, P) and the closed-loop primal inequality of the given gain at
    (Y, P), with one shared multiplier.  Dual: the counterpart in the dual
    inequalities, closed loop at X and annihilated at Y under [X X; X Y]
    > 0, multiplied through by g so everything stays affine (certificates
    and multiplier barred).  static_mode identifies the certificate pair,
    which turns the coupling into plain positivity.
    """
    d = lp.dims
    n, m_d, k_e = d["n"], d["m_d"], d["k_e"]
    prob = sdp.LmiProblem()
    g = g_fixed if g_fixed is not None else prob.scalar("g", nonneg=True)
    t = prob.scalar("t", nonneg=True) if slack else None
    if side == "primal":
        X = prob.symmetric("X", n)
        Y = X if static_mode else prob.symmetric("Y", n)
        handle = mset.attach_primal(prob, "P")
        # the slack also rewards the coupling: the completion divides by
        # X - Y, so a gap at solver accuracy would wreck the elimination
        coupling = X if static_mode else sdp.bmat([[X, Y], [Y, Y]])
        if slack:
            coupling = coupling - t * np.eye(coupling.shape[0])
        prob.require_posdef(coupling)
        mid = _primal_mid(handle.expr, g, k_e, m_d)
        stacks = [(Y, _primal_rows(closed))]
        V = _annihilator_v(lp)
        if V.shape[1]:
            stacks.append((X, _primal_rows(lp) @ V))
        for cert, S in stacks:
            form = sdp.ls_form(_outer(cert), mid, S)
            if slack:
                form = form + t * np.eye(S.shape[1])
            prob.require_negdef(form)
    else:
        Xb = prob.symmetric("Xbar", n)
        Yb = Xb if static_mode else prob.symmetric("Ybar", n)
        handle = mset.attach_dual(prob, "Pt")
        coupling = Xb if static_mode else sdp.bmat([[Xb, Xb], [Xb, Yb]])
        if slack:
            coupling = coupling - t * np.eye(coupling.shape[0])
        prob.require_posdef(coupling)
        mid = _dual_scaled_mid(handle.expr, g, k_e, m_d)
        stacks = [(Xb, _dual_rows(closed))]
        U = _annihilator_u(lp)
        if U.shape[1]:
            stacks.append((Yb, _dual_rows(lp) @ U))
        for cert, S in stacks:
            form = sdp.ls_form(_outer(cert), mid, S)
            if slack:
                form = form - t * np.eye(S.shape[1])
            prob.require_posdef(form)
    if g_fixed is None:
        prob.minimize(g)
    elif slack:
        prob.minimize(-t)
    return prob, handle


def _unbar_step_values(side: str, vals: dict, handle: MultiplierHandle,
                       g: float, static_mode: bool):
    """(X, Y, multiplier) of a step solution, undoing the dual-side scaling."""
    if side == "primal":
        X = vals["X"]
        Y = X if static_mode else vals["Y"]
        return X, Y, handle.extract(vals)
    g = max(float(g), np.finfo(float).tiny)
    X = matops.sym(vals["Xbar"] / g)
    Y = X if static_mode else matops.sym(vals["Ybar"] / g)
    mult = handle.extract(vals)
    if mult.size:
        mult = matops.sym(mult / g)
    return X, Y, mult


def _step_certs_robust(plant: LfrPlant, mset: MultiplierSet, side: str,
                       gain: Controller, gamma: float, static_mode: bool):
    """Margin-maximized step certificates at a fixed level, or None."""
    closed = _as_closed_lfr(close_loop(plant, gain))
    g = float(gamma) ** 2
    prob, handle = _step_problem_robust(plant, closed, mset, side,
                                        g_fixed=g, slack=True,
                                        static_mode=static_mode)
    sol = sdp.solve(prob)
    if not sol.ok:
        return None
    return _unbar_step_values(side, sol.values, handle, g, static_mode)


def step_robust(plant: LfrPlant, mset: MultiplierSet, side: str,
                gain: Controller, eps_back: float = 0.01,
                static_mode: bool = False, seed: int = 0) -> RobustStepResult:
    """One robust primal or dual synthesis step.

    Minimizes the step's bound for the given gain, re-solves at
    (1+eps_back) times the achieved bound with a maximized margin, and
    designs the opposite side's gain from the re-solved certificates: the
    full-actuation gain at (X, P) after a primal step, the
    full-information gain at (Y, Ptilde) after a dual one.  The
    certificate named in the result is X (primal) or Y (dual); its coupled
    partner and the multiplier ride along for reconstruction.
    """
    _require_matching(plant, mset)
    if mset.dim == 0:
        r = hinf.iteration_step(plant, side, gain, eps_back=eps_back, seed=seed)
        return RobustStepResult(gamma=r.gamma, certificate=r.certificate,
                                gain=r.gain, solver_status=r.solver_status,
                                multiplier=np.zeros((0, 0)), partner=None)
    _check_side_gain_robust(plant, side, gain)
    closed = close_loop(plant, gain)
    prob, handle = _step_problem_robust(plant, closed, mset, side,
                                        static_mode=static_mode)
    sol = sdp.solve(prob)
    if not sol.ok:
        raise ValueError(f"{side} synthesis LMIs infeasible (status {sol.status!r})")
    g_opt = max(sol.values["g"], 0.0)
    gamma = float(np.sqrt(g_opt))
    gamma_back = (1.0 + eps_back) * gamma
    certs = _step_certs_robust(plant, mset, side, gain, gamma_back, static_mode)
    if certs is None:
        certs = _unbar_step_values(side, sol.values, handle, g_opt, static_mode)
    X, Y, mult = certs
    if side == "primal":
        next_gain = _eliminate_gain(plant, "actuation", X, mult, gamma_back, seed)
        cert, partner = X, Y
    else:
        next_gain = _eliminate_gain(plant, "information", Y, mult, gamma_back, seed)
        cert, partner = Y, X
    return RobustStepResult(gamma=gamma, certificate=cert, gain=next_gain,
                            solver_status=sol.status, multiplier=mult,
                            partner=partner)


# --- full-order reconstruction -----------------------------------------------

def _coupling_completion(X: np.ndarray, Y: np.ndarray,
                         floor_rel: float = 1e-9) -> np.ndarray:
    """Closed-loop certificate completing a coupled pair.

    For any nonsingular T the matrix [[X, T], [T^T, T^T (X - Y^{-1})^{-1} T]]
    is positive definite exactly when [X I; I Y] > 0 and its inverse has Y
    as leading block.  T is taken as I - XY with singular values floored
    (rank-revealing) so the completion stays invertible when X drifts
    towards Y^{-1}.
    """
    n = X.shape[0]
    gap = matops.sym(X - np.linalg.inv(Y))
    if n and np.min(np.linalg.eigvalsh(gap)) <= 0:
        raise ValueError("coupling condition violated: X - Y^{-1} is not "
                         "positive definite")
    T = np.eye(n) - X @ Y
    if n:
        u, s, vt = np.linalg.svd(T)
        smax = max(float(s[0]) if s.size else 0.0, 1.0)
        T = u @ np.diag(np.maximum(s, floor_rel * smax)) @ vt
    lower = matops.sym(T.T @ np.linalg.solve(gap, T))
    return matops.sym(np.block([[X, T], [T.T, lower]]))


def _augment_for_dynamic(lp: LfrPlant) -> LfrPlant:
    """Plant whose static closure by [[Ac, Bc], [Cc, Dc]] is the dynamic loop.

    The controller state rides along as extra plant state; its derivative
    enters as an extra control input and its value leaves as an extra
    measurement, so a full-order dynamic design becomes a static gain on
    the augmented plant.
    """
    d = lp.dims
    n, p, q = d["n"], d["p"], d["q"]
    m_d, m_u, k_e, k_y = d["m_d"], d["m_u"], d["k_e"], d["k_y"]
    Z = np.zeros
    return LfrPlant(
        A=np.block([[lp.A, Z((n, n))], [Z((n, n)), Z((n, n))]]),
        B1=np.vstack([lp.B1, Z((n, q))]),
        B2=np.vstack([lp.B2, Z((n, m_d))]),
        B3=np.block([[Z((n, n)), lp.B3], [np.eye(n), Z((n, m_u))]]),
        C1=np.hstack([lp.C1, Z((p, n))]),
        D11=lp.D11, D12=lp.D12,
        D13=np.hstack([Z((p, n)), lp.D13]),
        C2=np.hstack([lp.C2, Z((k_e, n))]),
        D21=lp.D21, D22=lp.D22,
        D23=np.hstack([Z((k_e, n)), lp.D23]),
        C3=np.block([[Z((n, n)), np.eye(n)], [lp.C3, Z((k_y, n))]]),
        D31=np.vstack([Z((n, q)), lp.D31]),
        D32=np.vstack([Z((n, m_d)), lp.D32]),
        p=p, q=q,
    )


def reconstruct_robust(plant: LfrPlant, mset: MultiplierSet, X: np.ndarray,
                       Y: np.ndarray, P: np.ndarray, gamma: float,
                       static_mode: bool = False, seed: int = 0) -> Controller:
    """Controller from a coupled certificate triple.

    Expects [X I; I Y] > 0, the annihilated primal inequality at (X, P)
    and the annihilated dual inequality at (Y^{-1}-side, i.e. P^{-1}) to
    hold at the given level, with P a primal-family multiplier.  A
    full-order dynamic controller is eliminated from the closed-loop
    inequality of the augmented plant at the completed certificate; the
    multiplier is unchanged because the controller does not touch the
    uncertainty channel.  In static mode the gain is eliminated directly
    at X (the coupled pair collapses to a single certificate there).
    Raises when the elimination margins are lost.
    """
    _require_matching(plant, mset)
    X = matops.as_symmetric(X, "X")
    Y = matops.as_symmetric(Y, "Y")
    P = matops.as_symmetric(P, "P") if P.size else P
    if static_mode:
        inst = _design_instance_robust(plant, "static", X, P, gamma)
        result = elim.eliminate_solve(inst, seed=seed)
        if not result.ok:
            raise ValueError(
                f"elimination margins lost at gamma={gamma:.6g}: "
                f"{', '.join(result.failed_conditions)} condition does not hold")
        return Controller.static(result.z)
    n = plant.dims["n"]
    Xcl = _coupling_completion(X, Y)
    aug = _augment_for_dynamic(plant)
    inst = _design_instance_robust(aug, "static", Xcl, P, gamma)
    result = elim.eliminate_solve(inst, seed=seed)
    if not result.ok:
        raise ValueError(
            f"elimination margins lost at gamma={gamma:.6g}: "
            f"{', '.join(result.failed_conditions)} condition does not hold")
    Zc = result.z
    return Controller.dynamic(Zc[:n, :n], Zc[:n, n:], Zc[n:, :n], Zc[n:, n:])


# --- the alternating algorithm -----------------------------------------------

def _initial_gains_robust(plant: LfrPlant, mset: MultiplierSet,
                          gamma_gs: float, eps_back: float, seed: int):
    """Candidate starting full-information gains, most ambitious first.

    Trace-balanced coupled solves at growing levels, each followed by the
    information-gain elimination; a robustly stable plant additionally
    admits the zero gain as a candidate that cannot fail to close the loop.
    """
    d = plant.dims
    ladder = [eps_back] + [e for e in _INIT_EPS_LADDER if e > eps_back]
    for eps in ladder:
        level = (1.0 + eps) * gamma_gs
        prob, _, hPt = _gs_problem_robust(plant, mset, g_fixed=level ** 2,
                                          trace_objective=True)
        sol = sdp.solve(prob)
        if not sol.ok:
            continue
        try:
            yield _eliminate_gain(plant, "information", sol.values["Y"],
                                  hPt.extract(sol.values), level, seed)
        except ValueError:
            continue
    if d["n"] == 0 or np.max(np.linalg.eigvals(plant.A).real) < 0:
        yield Controller.full_information(
            np.zeros((d["m_u"], d["n"] + d["q"] + d["m_d"])))


def run_dual_iteration_robust(plant: LfrPlant, mset: MultiplierSet,
                              max_iters: int = 9, eps_back: float = 0.01,
                              stop_tol: float = 1e-3, static_mode: bool = False,
                              alt_init: bool = False,
                              seed: int = 0) -> IterationReport:
    """Alternate robust primal and dual steps from the one-sided bound.

    Initialization computes the lower bound and searches a starting
    full-information gain (trace-balanced designs at growing levels, the
    zero gain for stable plants); if no candidate makes the first primal
    step feasible, or when alt_init is set, the alternative initialization
    with its multiplier-proximity program takes over.  The loop alternates
    primal and dual steps with the stopping rules of the plain iteration;
    the final controller is reconstructed from the last step's coupled
    certificates (dynamic full-order, or static in static mode) and
    verified by an a-posteriori robust analysis.  Without an uncertainty
    channel the steps defer to the plain iteration, so the level history
    reproduces it exactly.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    _require_matching(plant, mset)
    if mset.dim == 0 and static_mode:
        return hinf.run_dual_iteration(plant, max_iters=max_iters,
                                       eps_back=eps_back, stop_tol=stop_tol,
                                       seed=seed)
    t0 = time.monotonic()
    gamma_gs, X0, Y0, P0, Pt0 = lower_bound_gs(plant, mset, balance=False)

    if mset.dim == 0:
        candidates = hinf._initial_gains(plant, plant.nominal, gamma_gs,
                                         eps_back, False, seed)
    else:
        candidates = _initial_gains_robust(plant, mset, gamma_gs, eps_back, seed)

    first = None
    failure = "no candidate gain available"
    if not alt_init:
        for F in candidates:
            try:
                first = step_robust(plant, mset, "primal", F, eps_back=eps_back,
                                    static_mode=static_mode, seed=seed)
                break
            except ValueError as exc:
                failure = str(exc)
    if first is None:
        # multiplier-proximity fallback: design a full-actuation gain and
        # pull the starting information gain towards its multiplier
        try:
            E, _ = design_side_gain_robust(plant, mset, "actuation",
                                           eps_back=eps_back, seed=seed)
            F = alt_init_robust(plant, mset, E, gamma=gamma_gs,
                                eps_back=eps_back, seed=seed)
            first = step_robust(plant, mset, "primal", F, eps_back=eps_back,
                                static_mode=static_mode, seed=seed)
        except ValueError as exc:
            raise ValueError(
                f"initialization infeasible: no starting gain made the first "
                f"primal step feasible (last attempt: {failure}); the "
                f"alternative initialization failed too ({exc})") from exc

    history = [(1, "primal", first.gamma, first.solver_status,
                time.monotonic() - t0)]
    last_side, last_gamma, last_input = "primal", first.gamma, F
    gain = first.gain
    side = "dual"
    while len(history) < max_iters:
        try:
            step = step_robust(plant, mset, side, gain, eps_back=eps_back,
                               static_mode=static_mode, seed=seed)
        except ValueError:
            # feasibility transfer holds exactly; a breakdown here is
            # numerical, so stop and reconstruct from the last certificates
            break
        if step.gamma > last_gamma:
            break
        history.append((len(history) + 1, side, step.gamma, step.solver_status,
                        time.monotonic() - t0))
        last_side, last_gamma, last_input = side, step.gamma, gain
        gain = step.gain
        gammas = [h[2] for h in history]
        if len(gammas) >= 3 and gammas[-3] - gammas[-1] < stop_tol * gammas[-3]:
            break
        side = "primal" if side == "dual" else "dual"

    K = None
    for dlev in sorted({min(eps_back, 5e-4), eps_back}):
        level = (1.0 + dlev) * last_gamma
        certs = _step_certs_robust(plant, mset, last_side, last_input, level,
                                   static_mode)
        if certs is None:
            continue
        Xs, Ys, mult = certs
        try:
            if static_mode:
                if last_side == "primal":
                    X_rec, P_rec = Xs, mult
                else:
                    X_rec = matops.sym(np.linalg.inv(Ys))
                    P_rec = matops.sym(np.linalg.inv(mult)) if mult.size else mult
                K = reconstruct_robust(plant, mset, X_rec,
                                       matops.sym(np.linalg.inv(X_rec)), P_rec,
                                       level, static_mode=True, seed=seed)
            else:
                if last_side == "primal":
                    triple = (Xs, matops.sym(np.linalg.inv(Ys)), mult)
                else:
                    Pinv = matops.sym(np.linalg.inv(mult)) if mult.size else mult
                    triple = (matops.sym(np.linalg.inv(Xs)), Ys, Pinv)
                K = reconstruct_robust(plant, mset, *triple, level, seed=seed)
            break
        except ValueError:
            continue
    if K is None:
        raise ValueError(
            "reconstruction failed: elimination margins were lost at "
            f"gamma={last_gamma:.6g}; consider increasing eps_back")
    closed = _as_closed_lfr(close_loop(plant, K))
    gamma_verified, _, _ = analyze_robust(closed, mset)
    return IterationReport(gamma_lower=gamma_gs, gamma_history=history,
                           final_controller=K, final_gamma_verified=gamma_verified)


# --- alternative initialization ----------------------------------------------

def _alt_init_problem(lp: LfrPlant, closed: LfrPlant, mset: MultiplierSet,
                      g: float):
    """Multiplier-proximity program at a fixed level.

    The closed full-actuation loop is certified in the dual inequalities
    at X with a multiplier P that is itself drawn from the dual family,
    the annihilated dual inequality holds at (Y, Ptilde), the pair couples
    through [X X; X Y] > 0, and alpha bounds ||P - Ptilde||; minimizing
    alpha pulls the two multipliers together so that the information gain
    designed from (Y, Ptilde) makes the subsequent primal step feasible.
    """
    d = lp.dims
    n, m_d, k_e = d["n"], d["m_d"], d["k_e"]
    dim = mset.dim
    prob = sdp.LmiProblem()
    X = prob.symmetric("X", n)
    Y = prob.symmetric("Y", n)
    alpha = prob.scalar("alpha", nonneg=True)
    hP = mset.attach_dual(prob, "P")
    hPt = mset.attach_dual(prob, "Pt")
    prob.require_posdef(sdp.bmat([[X, X], [X, Y]]))
    prob.require_posdef(sdp.ls_form(
        _outer(X), _dual_fixed_mid(hP.expr, g, k_e, m_d), _dual_rows(closed)))
    U = _annihilator_u(lp)
    if U.shape[1]:
        prob.require_posdef(sdp.ls_form(
            _outer(Y), _dual_fixed_mid(hPt.expr, g, k_e, m_d),
            _dual_rows(lp) @ U))
    if dim:
        diff = hP.expr - hPt.expr
        prob.require_posdef(sdp.bmat([[alpha * np.eye(dim), diff],
                                      [diff.T, np.eye(dim)]]))
    prob.minimize(alpha)
    return prob, hPt


def alt_init_robust(plant: LfrPlant, mset: MultiplierSet, E: Controller,
                    gamma: float | None = None, eps_back: float = 0.01,
                    max_doublings: int = 6, seed: int = 0) -> Controller:
    """Starting full-information gain via multiplier proximity.

    Takes a robustly stabilizing full-actuation gain, solves the
    proximity program at (1+eps_back) times the one-sided bound (or the
    given level), designs the information gain from the resulting dual
    certificate pair, and probes the primal step; on infeasibility the
    level is doubled and the procedure retried, up to max_doublings times.
    """
    _require_matching(plant, mset)
    if E.kind != "full_actuation":
        raise ValueError("alternative initialization expects a full-actuation gain")
    if gamma is None:
        gamma = lower_bound_gs(plant, mset, balance=False)[0]
    closed = _as_closed_lfr(close_loop(plant, E))
    level = (1.0 + eps_back) * float(gamma)
    failure = "proximity program infeasible at every level"
    for _ in range(max_doublings):
        prob, hPt = _alt_init_problem(plant, closed, mset, level ** 2)
        sol = sdp.solve(prob)
        if sol.ok:
            try:
                F = _eliminate_gain(plant, "information", sol.values["Y"],
                                    hPt.extract(sol.values), level, seed)
            except ValueError as exc:
                failure = str(exc)
                level *= 2.0
                continue
            probe = close_loop(plant, F)
            prob_p, _ = _step_problem_robust(plant, _as_closed_lfr(probe),
                                             mset, "primal")
            if sdp.solve(prob_p).ok:
                return F
            failure = f"primal step infeasible at gamma={level:.6g}"
        else:
            failure = f"proximity program status {sol.status!r} at gamma={level:.6g}"
        level *= 2.0
    raise ValueError(
        f"alternative initialization failed after {max_doublings} level "
        f"doublings (last: {failure})")


# --- fixed-multiplier alternations -------------------------------------------

def _dk_rows(lp: LfrPlant, prob: sdp.LmiProblem, kind: str, nc: int):
    """Closed-loop stack rows affine in fresh controller variables.

    Returns (r_state, r_z, r_e, make_controller) against the closed
    columns (x, w, d), with the controller state appended to the plant
    state for dynamic structures; zero-width channel columns are dropped
    rather than multiplied through (r_z is None at p = 0).
    """
    d = lp.dims
    p, q, m_d = d["p"], d["q"], d["m_d"]

    def cat(row):
        row = [blk for blk in row if blk is not None]
        return row[0] if len(row) == 1 else sdp.bmat([row])

    if kind == "static":
        K = prob.rectangular("K", d["m_u"], d["k_y"])
        KC3 = K @ lp.C3
        KD31 = K @ lp.D31 if q else None
        KD32 = K @ lp.D32 if m_d else None

        def row(M3, Mx, Mw, Md):
            return cat([Mx + M3 @ KC3,
                        (Mw + M3 @ KD31) if q else None,
                        (Md + M3 @ KD32) if m_d else None])

        r_st = row(lp.B3, lp.A, lp.B1, lp.B2)
        r_z = row(lp.D13, lp.C1, lp.D11, lp.D12) if p else None
        r_e = row(lp.D23, lp.C2, lp.D21, lp.D22)
        return r_st, r_z, r_e, (lambda vals: Controller.static(vals["K"]))

    Ac = prob.rectangular("Ac", nc, nc)
    Bc = prob.rectangular("Bc", nc, d["k_y"])
    Cc = prob.rectangular("Cc", d["m_u"], nc)
    Dc = prob.rectangular("Dc", d["m_u"], d["k_y"])
    DcC3 = Dc @ lp.C3
    DcD31 = Dc @ lp.D31 if q else None
    DcD32 = Dc @ lp.D32 if m_d else None

    def row(M3, Mx, Mw, Md, Cpart):
        return cat([Mx + M3 @ DcC3, M3 @ Cpart,
                    (Mw + M3 @ DcD31) if q else None,
                    (Md + M3 @ DcD32) if m_d else None])

    r_st = sdp.bmat([
        [row(lp.B3, lp.A, lp.B1, lp.B2, Cc)],
        [cat([Bc @ lp.C3, Ac,
              Bc @ lp.D31 if q else None,
              Bc @ lp.D32 if m_d else None])],
    ])
    r_z = row(lp.D13, lp.C1, lp.D11, lp.D12, Cc) if p else None
    r_e = row(lp.D23, lp.C2, lp.D21, lp.D22, Cc)
    maker = lambda vals: Controller.dynamic(vals["Ac"], vals["Bc"],
                                            vals["Cc"], vals["Dc"])
    return r_st, r_z, r_e, maker


def _uncertainty_input_factor(P: np.ndarray, p: int) -> np.ndarray:
    """Square-root factor of the multiplier's z-pairing block.

    The fixed-multiplier synthesis Schur-complements the quadratic
    controller terms against this block, which therefore has to be
    positive semidefinite; the vertex constraints guarantee that whenever
    the value set's hull contains zero.
    """
    P11 = P[:p, :p]
    if not p:
        return np.zeros((0, 0))
    w, Q = np.linalg.eigh(matops.sym(P11))
    scale = max(float(np.max(np.abs(w))), 1e-300)
    if w[0] < -1e-8 * scale:
        raise ValueError(
            "fixed-multiplier synthesis needs the multiplier's uncertainty "
            "output block to be positive semidefinite (holds whenever the "
            "value set contains zero); re-analyze with a value set whose "
            "hull contains the zero matrix")
    w = np.maximum(w, 0.0)
    keep = w > 1e-12 * scale
    return Q[:, keep] * np.sqrt(w[keep])


def _dk_synthesis_problem(lp: LfrPlant, P: np.ndarray, X: np.ndarray,
                          kind: str, nc: int):
    """Controller synthesis at a frozen analysis certificate pair (X, P).

    The closed-loop inequality is affine in the controller parameters
    except for the squares of the z and e rows, which are removed by one
    Schur complement; minimizing g recovers the best level the frozen
    certificates allow.
    """
    d = lp.dims
    p, q, m_d, k_e = d["p"], d["q"], d["m_d"], d["k_e"]
    n_cl = d["n"] + (nc if kind == "dynamic" else 0)
    if X.shape != (n_cl, n_cl):
        raise ValueError(f"certificate must be {(n_cl, n_cl)} for this "
                         f"controller structure, got {X.shape}")
    L1 = _uncertainty_input_factor(P, p)
    prob = sdp.LmiProblem()
    g = prob.scalar("g", nonneg=True)
    r_st, r_z, r_e, maker = _dk_rows(lp, prob, kind, nc)
    r_xI = np.hstack([np.eye(n_cl), np.zeros((n_cl, q + m_d))])
    r_dI = np.hstack([np.zeros((m_d, n_cl + q)), np.eye(m_d)])
    gram = r_xI.T @ (X @ r_st)
    core = gram + gram.T - g * (r_dI.T @ r_dI)
    if q:
        r_wI = np.hstack([np.zeros((q, n_cl)), np.eye(q),
                          np.zeros((q, m_d))])
        core = core + r_wI.T @ P[p:, p:] @ r_wI
        if p:
            cross = r_z.T @ (P[:p, p:] @ r_wI)
            core = core + cross + cross.T
    border = []
    if p and L1.shape[1]:
        border.append(L1.T @ r_z)
    if k_e:
        border.append(r_e)
    if border:
        N = border[0] if len(border) == 1 else cp.vstack(border)
        lmi = sdp.bmat([[core, N.T], [N, -np.eye(N.shape[0])]])
    else:
        lmi = core
    prob.require_negdef(lmi)
    prob.minimize(g)
    return prob, maker


def _dk_pair_problem(lp: LfrPlant, P: np.ndarray, Pt: np.ndarray,
                     g_fixed=None, slack: bool = False):
    """Coupled certificate pair at frozen multipliers (the V2 synthesis)."""
    d = lp.dims
    n, p, q, m_d, k_e = d["n"], d["p"], d["q"], d["m_d"], d["k_e"]
    prob = sdp.LmiProblem()
    X = prob.symmetric("X", n)
    Y = prob.symmetric("Y", n)
    g = g_fixed if g_fixed is not None else prob.scalar("g", nonneg=True)
    t = prob.scalar("t", nonneg=True) if slack else None
    prob.require_posdef(sdp.bmat([[X, np.eye(n)], [np.eye(n), Y]]))
    V = _annihilator_v(lp)
    if V.shape[1]:
        form = sdp.ls_form(_outer(X), _primal_mid(P, g, k_e, m_d),
                           _primal_rows(lp) @ V)
        if slack:
            form = form + t * np.eye(form.shape[0])
        prob.require_negdef(form)
    U = _annihilator_u(lp)
    if U.shape[1]:
        SdU = _dual_rows(lp) @ U
        core = sdp.ls_form(_outer(Y), _dual_core_mid(Pt, k_e, m_d), SdU)
        if slack:
            core = core - t * np.eye(core.shape[0])
        cross = SdU[2 * n + p + q + k_e:, :]
        prob.require_posdef(sdp.gamma_embed(core, cross, g))
    if g_fixed is None:
        prob.minimize(g)
    elif slack:
        prob.minimize(-t)
    return prob


def dk_iterate(plant: LfrPlant, mset: MultiplierSet | None, variant: str,
               init: Controller, iters: int = 10, eps_back: float = 0.01,
               seed: int = 0) -> IterationReport:
    """Fixed-variable alternation from a given stabilizing controller.

    variant "nominal" alternates the closed-loop analysis in (X, g) with a
    controller re-synthesis at frozen X on a nominal plant.  "V1" does the
    same with the robust inequalities, freezing the certificate and the
    multiplier for the synthesis half.  "V2" freezes only the multiplier
    and re-solves the coupled certificate pair, reconstructing the next
    controller through the completion (so its iterates are full-order
    dynamic regardless of the initial structure).  The initial controller
    must be (robustly) stabilizing, which the first analysis checks; both
    halves are individually optimal, so the interleaved level history is
    non-increasing.  No lower bound is associated with the alternation;
    the report carries nan there.
    """
    if variant not in ("nominal", "V1", "V2"):
        raise ValueError(f"variant must be 'nominal', 'V1' or 'V2', got {variant!r}")
    if init.kind not in ("static", "dynamic"):
        raise ValueError("the alternation needs an output-feedback controller "
                         "(static or dynamic)")
    if iters < 1:
        raise ValueError("iters must be at least 1")
    if variant == "nominal":
        if not plant.is_nominal:
            raise ValueError("variant 'nominal' expects a plant without "
                             "uncertainty channel")
        mset = make_multiplier_set(ValueSet.empty())
    else:
        if mset is None:
            raise TypeError(f"variant {variant!r} needs a multiplier set")
        _require_matching(plant, mset)

    def _analyze(controller):
        closed = _as_closed_lfr(close_loop(plant, controller))
        return analyze_robust(closed, mset)

    t0 = time.monotonic()
    controller = init
    history = []
    for _ in range(iters):
        try:
            gamma_a, X, P = _analyze(controller)
        except ValueError as exc:
            if not history:
                raise ValueError(
                    "initial controller is not (robustly) stabilizing: "
                    f"{exc}") from exc
            break
        history.append((len(history) + 1, "analysis", gamma_a, "optimal",
                        time.monotonic() - t0))
        if variant in ("nominal", "V1"):
            nc = controller.Ac.shape[0] if controller.kind == "dynamic" else 0
            prob, maker = _dk_synthesis_problem(plant, P, X, controller.kind, nc)
            sol = sdp.solve(prob)
            if not sol.ok:
                break
            gamma_s = float(np.sqrt(max(sol.values["g"], 0.0)))
            controller = maker(sol.values)
        else:
            Pt = matops.sym(np.linalg.inv(P)) if P.size else P
            sol = sdp.solve(_dk_pair_problem(plant, P, Pt))
            if not sol.ok:
                break
            gamma_s = float(np.sqrt(max(sol.values["g"], 0.0)))
            level = (1.0 + eps_back) * gamma_s
            sol_m = sdp.solve(_dk_pair_problem(plant, P, Pt,
                                               g_fixed=level ** 2, slack=True))
            vals = sol_m.values if sol_m.ok else sol.values
            try:
                controller = reconstruct_robust(plant, mset, vals["X"],
                                                vals["Y"], P, level, seed=seed)
            except ValueError:
                break
        history.append((len(history) + 1, "synthesis", gamma_s, sol.status,
                        time.monotonic() - t0))
    gamma_verified, _, _ = _analyze(controller)
    return IterationReport(gamma_lower=float("nan"), gamma_history=history,
                           final_controller=controller,
                           final_gamma_verified=gamma_verified)
