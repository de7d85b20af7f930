"""Declarative LMI layer over a conic solver.

Builds the structured inequalities every synthesis routine needs: the
sandwich form stacked^T blkdiag(Xouter, Pmid) stacked, block quadratic forms
with variable-bearing stacks, and the Schur embedding that turns inverse
performance blocks into expressions affine in g = gamma^2.  Solving is
delegated to cvxpy with a fixed fallback chain; strict inequalities are
realized by an epsilon*I margin and every accepted solution is verified by
substitution.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence

import cvxpy as cp
import numpy as np

from . import matops

__all__ = [
    "LmiProblem",
    "LmiSolution",
    "SolverFailure",
    "bmat",
    "ls_form",
    "quad_form_blocks",
    "gamma_embed",
    "solve",
]

# tried in order until one returns a verified solution
SOLVER_CHAIN = ("CLARABEL", "SCS", "CVXOPT")

# accepted definiteness violation of returned solutions, relative
RESIDUAL_RTOL = 1e-6


class SolverFailure(RuntimeError):
    """Raised internally when every backend breaks down on a problem."""


def _is_const(block) -> bool:
    if isinstance(block, cp.expressions.expression.Expression):
        return block.is_constant()
    return True


def _rows_of(block) -> int:
    return block.shape[0] if getattr(block, "ndim", 2) == 2 else 1


def _cols_of(block) -> int:
    return block.shape[1] if getattr(block, "ndim", 2) == 2 else 1


def bmat(rows: Sequence[Sequence]) -> cp.Expression | np.ndarray:
    """Block matrix assembly where ``None`` stands for a zero block.

    Sizes of ``None`` blocks are inferred from the other blocks in the same
    row and column, so LMIs can be written down exactly as printed.
    """
    grid = [
        [
            blk
            if blk is None or isinstance(blk, cp.expressions.expression.Expression)
            else np.atleast_2d(np.asarray(blk, float))
            for blk in row
        ]
        for row in rows
    ]
    nr, nc = len(grid), len(grid[0])
    if any(len(r) != nc for r in grid):
        raise ValueError("ragged block structure")
    heights: list[int | None] = [None] * nr
    widths: list[int | None] = [None] * nc
    for i, row in enumerate(grid):
        for j, blk in enumerate(row):
            if blk is None:
                continue
            h, w = _rows_of(blk), _cols_of(blk)
            if heights[i] is not None and heights[i] != h:
                raise ValueError(f"inconsistent height in block row {i}")
            if widths[j] is not None and widths[j] != w:
                raise ValueError(f"inconsistent width in block column {j}")
            heights[i], widths[j] = h, w
    if any(h is None for h in heights) or any(w is None for w in widths):
        raise ValueError("cannot infer size of an all-None block row/column")
    filled = [
        [
            blk if blk is not None else np.zeros((heights[i], widths[j]))
            for j, blk in enumerate(row)
        ]
        for i, row in enumerate(grid)
    ]
    if all(isinstance(b, np.ndarray) for row in filled for b in row):
        return np.block(filled)
    return cp.bmat(filled)


def quad_form_blocks(rows: Sequence, mid: Sequence[Sequence]):
    """Blockwise quadratic form ``sum_ij rows[i]^T mid[i][j] rows[j]``.

    ``rows`` are the row blocks of the stacked outer factor, ``mid`` the
    blocks of the symmetric middle matrix (``None`` = zero).  Products are
    skipped when the middle block is zero, which is what keeps forms with
    variable-bearing stacks affine; a surviving product of two non-constant
    factors is a structural error and raises.
    """
    k = len(rows)
    if len(mid) != k or any(len(r) != k for r in mid):
        raise ValueError("mid must be a square block structure matching rows")
    width = _cols_of(rows[0])
    if any(_cols_of(r) != width for r in rows):
        raise ValueError("row blocks must share a common width")
    total = None
    for i in range(k):
        for j in range(k):
            M = mid[i][j]
            if M is None:
                continue
            if isinstance(M, np.ndarray) and not np.any(M):
                continue
            nonconst = (not _is_const(rows[i])) + (not _is_const(rows[j])) + (not _is_const(M))
            if nonconst > 1:
                raise ValueError(
                    f"block product ({i},{j}) multiplies two variable factors; "
                    "the resulting form would not be affine"
                )
            term = rows[i].T @ M @ rows[j]
            total = term if total is None else total + term
    if total is None:
        total = np.zeros((width, width))
    if isinstance(total, np.ndarray):
        return matops.sym(total)
    return (total + total.T) / 2


def ls_form(Xouter, Pmid, stacked):
    """Sandwich form ``stacked^T blkdiag(Xouter, Pmid) stacked``.

    ``stacked`` is the known row-stacked data ``[I 0; A B; C D]`` pattern;
    ``Xouter`` and ``Pmid`` may be variables or data.  ``Pmid=None`` drops
    the performance rows entirely.
    """
    stacked = matops.as_matrix(stacked, "stacked") if not isinstance(
        stacked, cp.expressions.expression.Expression
    ) else stacked
    nx = _rows_of(Xouter)
    npmid = 0 if Pmid is None else _rows_of(Pmid)
    if _rows_of(stacked) != nx + npmid:
        raise ValueError(
            f"stacked has {_rows_of(stacked)} rows, expected {nx + npmid} "
            "to match blkdiag(Xouter, Pmid)"
        )
    S1 = stacked[:nx, :]
    expr = S1.T @ Xouter @ S1
    if Pmid is not None:
        S2 = stacked[nx:, :]
        expr = expr + S2.T @ Pmid @ S2
    if isinstance(expr, np.ndarray):
        return matops.sym(expr)
    return (expr + expr.T) / 2


def gamma_embed(M, N, g):
    """Schur embedding of ``M - (1/g) N^T N`` with ``g = gamma^2``.

    Returns ``[M N^T; N gI]``; positive definiteness of the embedding is
    equivalent to ``M - N^T g^{-1} N > 0`` together with ``g > 0``, which is
    how inverse performance blocks become affine in g.
    """
    N = matops.as_matrix(N, "N")
    if _cols_of(M) != N.shape[1]:
        raise ValueError("N must have as many columns as M")
    corner = g * np.eye(N.shape[0]) if isinstance(g, cp.expressions.expression.Expression) else float(g) * np.eye(N.shape[0])
    return bmat([[M, N.T], [N, corner]])


@dataclasses.dataclass
class LmiConstraint:
    expr: object
    sense: str  # "neg" or "pos"
    margin: float | None  # None -> scaled default at solve time


class LmiProblem:
    """Collection of matrix variables, definiteness constraints, objective."""

    def __init__(self) -> None:
        self.variables: dict[str, cp.Variable] = {}
        self.constraints: list[LmiConstraint] = []
        self.objective: cp.Expression | None = None

    def _register(self, name: str, var: cp.Variable) -> cp.Variable:
        if name in self.variables:
            raise ValueError(f"variable {name!r} already declared")
        self.variables[name] = var
        return var

    def symmetric(self, name: str, dim: int) -> cp.Variable:
        if dim == 0:
            return self._register(name, cp.Variable((0, 0), name=name))
        return self._register(name, cp.Variable((dim, dim), symmetric=True, name=name))

    def rectangular(self, name: str, rows: int, cols: int) -> cp.Variable:
        return self._register(name, cp.Variable((rows, cols), name=name))

    def scalar(self, name: str, nonneg: bool = False) -> cp.Variable:
        return self._register(name, cp.Variable(name=name, nonneg=nonneg))

    def require_negdef(self, expr, margin: float | None = None) -> None:
        """Constrain expr < 0 (strictness via margin, default scaled eps)."""
        self.constraints.append(LmiConstraint(expr, "neg", margin))

    def require_posdef(self, expr, margin: float | None = None) -> None:
        self.constraints.append(LmiConstraint(expr, "pos", margin))

    def require_semidef(self, expr, sense: str) -> None:
        """Non-strict version; sense is 'neg' or 'pos'."""
        self.constraints.append(LmiConstraint(expr, sense, 0.0))

    def minimize(self, expr) -> None:
        self.objective = expr


@dataclasses.dataclass
class LmiSolution:
    status: str  # optimal | feasible | infeasible | numerical_failure
    values: dict[str, np.ndarray | float]
    objective_value: float | None
    worst_residual: float = np.inf
    solver: str | None = None

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "feasible")


def _constant_part(expr) -> np.ndarray:
    if isinstance(expr, np.ndarray):
        return expr
    saved = [(v, v.value) for v in expr.variables()]
    try:
        for v, _ in saved:
            v.value = np.zeros(v.shape)
        val = expr.value
    finally:
        for v, old in saved:
            v.value = old
    return np.atleast_2d(np.asarray(val, float))


def _materialize(con: LmiConstraint, eps_feas: float) -> cp.constraints.constraint.Constraint:
    expr = con.expr
    if isinstance(expr, np.ndarray):
        expr = cp.Constant(matops.sym(expr))
    else:
        expr = (expr + expr.T) / 2
    margin = con.margin
    if margin is None:
        margin = eps_feas * (1.0 + abs(float(np.trace(_constant_part(expr)))))
    eye = np.eye(expr.shape[0])
    if con.sense == "neg":
        return expr << -margin * eye
    if con.sense == "pos":
        return expr >> margin * eye
    raise ValueError(f"unknown sense {con.sense!r}")


def _check_residuals(problem: LmiProblem) -> tuple[bool, float]:
    worst = 0.0
    for con in problem.constraints:
        expr = con.expr
        val = expr if isinstance(expr, np.ndarray) else np.atleast_2d(np.asarray(expr.value, float))
        if val.size == 0:
            continue
        val = matops.sym(val)
        eigs = np.linalg.eigvalsh(val)
        scale = 1.0 + float(np.max(np.abs(val)))
        viol = (eigs[-1] if con.sense == "neg" else -eigs[0]) / scale
        worst = max(worst, viol)
    return worst <= RESIDUAL_RTOL, worst


_SOLVER_OPTS = {
    "CLARABEL": {},
    "SCS": {"eps": 1e-9, "max_iters": 200_000},
    "CVXOPT": {},
}


def solve(
    problem: LmiProblem,
    eps_feas: float = 1e-7,
    solver: str | None = None,
    verbose: bool = False,
) -> LmiSolution:
    """Solve an LmiProblem, trying backends in order until one verifies.

    Status semantics: ``optimal`` for a solved minimization, ``feasible``
    for a solved feasibility problem, ``infeasible`` when a solver proves
    infeasibility, ``numerical_failure`` when every backend breaks down.
    Accepted solutions are substituted back into all constraints; a
    definiteness violation beyond ``RESIDUAL_RTOL`` (relative) sends the
    problem to the next backend.
    """
    cons = [_materialize(c, eps_feas) for c in problem.constraints]
    objective = cp.Minimize(problem.objective if problem.objective is not None else 0)
    prob = cp.Problem(objective, cons)
    chain = (solver,) if solver else SOLVER_CHAIN
    saw_infeasible_inaccurate = False
    for name in chain:
        if name not in cp.installed_solvers():
            continue
        try:
            prob.solve(solver=name, verbose=verbose, **_SOLVER_OPTS.get(name, {}))
        except Exception:
            continue
        if prob.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            ok, worst = _check_residuals(problem)
            if not ok:
                continue
            values: dict[str, np.ndarray | float] = {}
            for vname, var in problem.variables.items():
                if var.value is None:
                    values[vname] = 0.0 if var.shape == () else np.zeros(var.shape)
                elif var.shape == ():
                    values[vname] = float(var.value)
                else:
                    values[vname] = matops.sym(np.asarray(var.value, float)) if (
                        var.attributes.get("symmetric") or var.attributes.get("PSD")
                    ) else np.asarray(var.value, float)
            status = "optimal" if problem.objective is not None else "feasible"
            obj = float(prob.value) if problem.objective is not None else None
            return LmiSolution(status, values, obj, worst, name)
        if prob.status == cp.INFEASIBLE:
            return LmiSolution("infeasible", {}, None, np.inf, name)
        if prob.status == cp.INFEASIBLE_INACCURATE:
            saw_infeasible_inaccurate = True
    if saw_infeasible_inaccurate:
        return LmiSolution("infeasible", {}, None, np.inf, None)
    return LmiSolution("numerical_failure", {}, None, np.inf, None)
