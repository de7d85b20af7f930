"""LTI system and LFR plant data model, interconnections and oracles.

Plants are stored in a four-row form (state, uncertainty output z,
performance output e, measurement y) against four columns (state,
uncertainty input w, disturbance d, control u); nominal plants are the
special case without the (z, w) channel.  The module also houses the
independent verification oracles (Hamiltonian-bisection H-infinity norm,
Gramian-based energy-to-peak norm) the LMI-based routines are tested
against.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np

from . import matops

__all__ = [
    "StateSpace",
    "LfrPlant",
    "NominalView",
    "Controller",
    "LmiRegion",
    "load_plant",
    "save_plant",
    "load_compleib",
    "close_loop",
    "dualize_plant",
    "hinf_norm",
    "gh2_norm",
    "frozen_delta_close",
]


def _shaped(M, rows: int, cols: int, name: str) -> np.ndarray:
    """Coerce a block to shape (rows, cols); None means a zero block."""
    if M is None:
        return np.zeros((rows, cols))
    A = np.asarray(M, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    elif A.ndim == 1:
        # a flat vector is ambiguous unless one target dimension is 1
        if rows == 1:
            A = A.reshape(1, -1)
        elif cols == 1:
            A = A.reshape(-1, 1)
        else:
            raise ValueError(f"block {name}: expected shape {(rows, cols)}, got 1-d data")
    if A.shape != (rows, cols):
        raise ValueError(f"block {name}: expected shape {(rows, cols)}, got {A.shape}")
    if A.size and not np.all(np.isfinite(A)):
        raise ValueError(f"block {name}: contains NaN or Inf entries")
    return A


def _with_rows(M, rows: int, name: str) -> np.ndarray:
    """Coerce to a 2-d block with a fixed row count, free column count."""
    A = np.asarray(M, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    elif A.ndim == 1:
        if A.size == 0:
            A = np.zeros((rows, 0))
        elif rows and A.size % rows == 0:
            A = A.reshape(rows, -1)
    if A.ndim != 2 or A.shape[0] != rows:
        raise ValueError(f"block {name}: expected {rows} rows, got shape {np.asarray(M).shape}")
    if A.size and not np.all(np.isfinite(A)):
        raise ValueError(f"block {name}: contains NaN or Inf entries")
    return A


def _with_cols(M, cols: int, name: str) -> np.ndarray:
    return _with_rows(np.transpose(np.asarray(M, dtype=float)), cols, name).T


@dataclasses.dataclass(frozen=True, eq=False)
class StateSpace:
    """Continuous-time realization (A, B, C, D)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim == 0:
            A = A.reshape(1, 1)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {np.asarray(self.A).shape}")
        if A.size and not np.all(np.isfinite(A)):
            raise ValueError("block A: contains NaN or Inf entries")
        n = A.shape[0]
        B = _with_rows(self.B, n, "B")
        C = _with_cols(self.C, n, "C")
        D = _shaped(self.D, C.shape[0], B.shape[1], "D")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_in(self) -> int:
        return self.B.shape[1]

    @property
    def n_out(self) -> int:
        return self.C.shape[0]

    def freq(self, s: complex) -> np.ndarray:
        """Transfer matrix C (sI - A)^{-1} B + D at one complex point."""
        if self.n == 0:
            return self.D.astype(complex)
        return self.C @ np.linalg.solve(s * np.eye(self.n) - self.A, self.B) + self.D

    def is_hurwitz(self) -> bool:
        if self.n == 0:
            return True
        return bool(np.max(np.linalg.eigvals(self.A).real) < 0)


@dataclasses.dataclass(frozen=True, eq=False)
class NominalView:
    """Two-channel naming (disturbance/control, performance/measurement)."""

    A: np.ndarray
    B1: np.ndarray  # disturbance input
    B2: np.ndarray  # control input
    C1: np.ndarray  # performance output
    C2: np.ndarray  # measurement output
    D11: np.ndarray
    D12: np.ndarray
    D21: np.ndarray


BLOCK_LAYOUT = (
    # (name, row dim key, col dim key)
    ("A", "n", "n"), ("B1", "n", "q"), ("B2", "n", "m_d"), ("B3", "n", "m_u"),
    ("C1", "p", "n"), ("D11", "p", "q"), ("D12", "p", "m_d"), ("D13", "p", "m_u"),
    ("C2", "k_e", "n"), ("D21", "k_e", "q"), ("D22", "k_e", "m_d"), ("D23", "k_e", "m_u"),
    ("C3", "k_y", "n"), ("D31", "k_y", "q"), ("D32", "k_y", "m_d"),
)


class LfrPlant:
    """Plant with rows (state, z, e, y) against columns (state, w, d, u).

    The uncertainty channel is w = Delta(t) z with Delta taking values in a
    compact set of q x p matrices; nominal plants carry p = q = 0.  The
    feedthrough from u to y is identically zero by construction.
    """

    def __init__(self, *, A, B2, B3, C2, C3, B1=None, C1=None,
                 D11=None, D12=None, D13=None, D21=None, D22=None, D23=None,
                 D31=None, D32=None, p: int | None = None, q: int | None = None):
        A = matops.as_matrix(A, "A")
        n = A.shape[0]
        if A.shape[1] != n:
            raise ValueError(f"block A: must be square, got {A.shape}")
        if p is None:
            p = _with_cols(C1, n, "C1").shape[0] if C1 is not None else 0
        if q is None:
            q = _with_rows(B1, n, "B1").shape[1] if B1 is not None else 0
        B2 = _with_rows(B2 if B2 is not None else np.zeros((n, 0)), n, "B2")
        B3 = _with_rows(B3 if B3 is not None else np.zeros((n, 0)), n, "B3")
        C2 = _with_cols(C2 if C2 is not None else np.zeros((0, n)), n, "C2")
        C3 = _with_cols(C3 if C3 is not None else np.zeros((0, n)), n, "C3")
        dims = {
            "n": n, "p": p, "q": q,
            "m_d": B2.shape[1], "m_u": B3.shape[1],
            "k_e": C2.shape[0], "k_y": C3.shape[0],
        }
        given = {
            "A": A, "B1": B1, "B2": B2, "B3": B3,
            "C1": C1, "D11": D11, "D12": D12, "D13": D13,
            "C2": C2, "D21": D21, "D22": D22, "D23": D23,
            "C3": C3, "D31": D31, "D32": D32,
        }
        for name, rkey, ckey in BLOCK_LAYOUT:
            setattr(self, name, _shaped(given[name], dims[rkey], dims[ckey], name))
        self.dims = dims

    @classmethod
    def from_nominal(cls, A, B1, B2, C1, C2, D11=None, D12=None, D21=None) -> "LfrPlant":
        """Build a nominal plant from two-channel naming.

        Arguments follow the disturbance/control convention: B1 and C1 are
        the disturbance input and performance output, B2 and C2 the control
        input and measurement output.
        """
        return cls(A=A, B2=B1, B3=B2, C2=C1, C3=C2,
                   D22=D11, D23=D12, D32=D21, p=0, q=0)

    @property
    def is_nominal(self) -> bool:
        return self.dims["p"] == 0 and self.dims["q"] == 0

    @property
    def nominal(self) -> NominalView:
        if not self.is_nominal:
            raise ValueError("plant has an uncertainty channel; not a nominal plant")
        return NominalView(A=self.A, B1=self.B2, B2=self.B3, C1=self.C2, C2=self.C3,
                           D11=self.D22, D12=self.D23, D21=self.D32)

    def block_matrix(self) -> np.ndarray:
        """Full row-stacked plant matrix including the zero y<-u block."""
        d = self.dims
        return np.block([
            [self.A, self.B1, self.B2, self.B3],
            [self.C1, self.D11, self.D12, self.D13],
            [self.C2, self.D21, self.D22, self.D23],
            [self.C3, self.D31, self.D32, np.zeros((d["k_y"], d["m_u"]))],
        ])

    def performance_channel(self) -> StateSpace:
        """The d -> e subsystem (exact for nominal plants)."""
        return StateSpace(self.A, self.B2, self.C2, self.D22)


@dataclasses.dataclass(frozen=True, eq=False)
class Controller:
    """One of the four controller structures closed by close_loop.

    kind "static" carries K (u = K y); "dynamic" carries (Ac, Bc, Cc, Dc);
    "full_information" carries F acting on the stacked plant inputs other
    than u; "full_actuation" carries E injecting y into every equation
    other than the y-row.
    """

    kind: str
    K: np.ndarray | None = None
    Ac: np.ndarray | None = None
    Bc: np.ndarray | None = None
    Cc: np.ndarray | None = None
    Dc: np.ndarray | None = None
    F: np.ndarray | None = None
    E: np.ndarray | None = None

    @classmethod
    def static(cls, K) -> "Controller":
        return cls(kind="static", K=matops.as_matrix(K, "K"))

    @classmethod
    def dynamic(cls, Ac, Bc, Cc, Dc) -> "Controller":
        return cls(kind="dynamic", Ac=matops.as_matrix(Ac, "Ac"),
                   Bc=matops.as_matrix(Bc, "Bc"), Cc=matops.as_matrix(Cc, "Cc"),
                   Dc=matops.as_matrix(Dc, "Dc"))

    @classmethod
    def full_information(cls, F) -> "Controller":
        return cls(kind="full_information", F=matops.as_matrix(F, "F"))

    @classmethod
    def full_actuation(cls, E) -> "Controller":
        return cls(kind="full_actuation", E=matops.as_matrix(E, "E"))


class LmiRegion:
    """Complex region {s : [I; sI]^* [Q S; S^T R] [I; sI] < 0}.

    R must be positive semidefinite (convexity of the region).  Synthesis
    additionally requires the region to lie in the open left half-plane;
    that containment cannot be decided from (Q, S, R) alone, so it is
    checked by sampling and recorded in ``left_half_plane``.  Passing
    ``left_half_plane=True`` asserts containment and raises if sampling
    refutes it; ``None`` records the sampling verdict.
    """

    def __init__(self, Q, S, R, left_half_plane: bool | None = None):
        self.Q = matops.as_symmetric(Q, "Q")
        d = self.Q.shape[0]
        S = np.asarray(S, dtype=float)
        if S.ndim == 0:
            S = S.reshape(1, 1)
        self.S = _shaped(S, d, d, "S")
        self.R = matops.as_symmetric(R, "R")
        if self.R.shape != (d, d):
            raise ValueError(f"R must match Q's dimension {d}")
        if d and np.min(np.linalg.eigvalsh(self.R)) < -1e-10 * (1 + np.max(np.abs(self.R))):
            raise ValueError("R must be positive semidefinite")
        refuted = self._sample_refutes_left_half_plane()
        if left_half_plane is True and refuted:
            raise ValueError(
                "region asserted inside the open left half-plane, but a "
                "sampled point with nonnegative real part belongs to it"
            )
        self.left_half_plane = (not refuted) if left_half_plane is None else left_half_plane

    @property
    def d(self) -> int:
        return self.Q.shape[0]

    def contains(self, s: complex, margin: float = 0.0) -> bool:
        if self.d == 0:
            return True
        H = self.Q + s * self.S + np.conj(s) * self.S.T + (abs(s) ** 2) * self.R
        return bool(np.max(np.linalg.eigvalsh(H)) < -margin)

    def _sample_refutes_left_half_plane(self) -> bool:
        scale = 1.0 + max(np.max(np.abs(self.Q)) if self.Q.size else 0.0, 1.0)
        radii = np.concatenate([[0.0], np.geomspace(1e-3, 1e3, 25) * scale])
        angles = np.linspace(-np.pi / 2, np.pi / 2, 21)
        for r in radii:
            for a in angles:
                s = r * np.exp(1j * a)
                if s.real >= 0 and self.contains(s):
                    return True
        return False


# --- serialization ---------------------------------------------------------

DIM_KEYS = ("n", "p", "q", "m_d", "m_u", "k_e", "k_y")


def load_plant(source) -> LfrPlant:
    """Load an LfrPlant from a JSON file path, JSON text, or parsed dict.

    The document carries a "dims" object and one key per block; uncertainty
    blocks may be absent when p = q = 0.  A nonzero "D33" is rejected.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = source
        try:
            if "\n" not in str(source) and not str(source).lstrip().startswith("{"):
                with open(source, "r", encoding="utf-8") as fh:
                    text = fh.read()
        except OSError as exc:
            raise ValueError(f"cannot read plant file {source!r}: {exc}") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"plant document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError("plant document must be a JSON object")
    if "dims" not in doc or not isinstance(doc["dims"], dict):
        raise ValueError('field "dims": missing or not an object')
    dims = {}
    for key in DIM_KEYS:
        if key not in doc["dims"]:
            raise ValueError(f'field "dims.{key}": missing')
        val = doc["dims"][key]
        if isinstance(val, bool) or not isinstance(val, int) or val < 0:
            raise ValueError(f'field "dims.{key}": must be a nonnegative integer')
        dims[key] = val
    if "D33" in doc:
        d33 = np.asarray(doc["D33"], dtype=float)
        if d33.size and np.any(d33):
            raise ValueError('field "D33": must be zero (no measurement feedthrough from control)')
    blocks = {}
    for name, rkey, ckey in BLOCK_LAYOUT:
        r, c = dims[rkey], dims[ckey]
        if name not in doc or doc[name] is None:
            if r and c:
                raise ValueError(f'field "{name}": missing (dims require shape {(r, c)})')
            blocks[name] = None
            continue
        try:
            arr = np.asarray(doc[name], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValueError(f'field "{name}": not a numeric array ({exc})') from exc
        if arr.size == 0:
            blocks[name] = None
            continue
        try:
            blocks[name] = _shaped(arr, r, c, name)
        except ValueError as exc:
            raise ValueError(f'field "{name}": {exc}') from exc
    return LfrPlant(p=dims["p"], q=dims["q"], **blocks)


def save_plant(plant: LfrPlant, path=None) -> str:
    """Serialize a plant to the JSON document format; returns the text."""
    doc = {"dims": dict(plant.dims)}
    for name, rkey, ckey in BLOCK_LAYOUT:
        M = getattr(plant, name)
        if M.size:
            doc[name] = M.tolist()
    text = json.dumps(doc, indent=1)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def load_compleib(source) -> LfrPlant:
    """Convert a document in (A, B1, B, C1, C, D11, D12, D21) naming.

    This is the conventional benchmark-library naming: B is the control
    input, C the measurement; the result is a nominal plant.
    """
    if isinstance(source, dict):
        doc = source
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    needed = ("A", "B1", "B", "C1", "C")
    for key in needed:
        if key not in doc:
            raise ValueError(f'field "{key}": missing')
    A = np.asarray(doc["A"], dtype=float)
    n = A.shape[0]
    B1 = np.asarray(doc["B1"], dtype=float).reshape(n, -1)
    B = np.asarray(doc["B"], dtype=float).reshape(n, -1)
    C1 = np.asarray(doc["C1"], dtype=float).reshape(-1, n)
    C = np.asarray(doc["C"], dtype=float).reshape(-1, n)
    D11 = doc.get("D11")
    D12 = doc.get("D12")
    D21 = doc.get("D21")
    return LfrPlant.from_nominal(A, B1, B, C1, C, D11=D11, D12=D12, D21=D21)


# --- interconnections ------------------------------------------------------

def _close_blocks(plant: LfrPlant, L: np.ndarray, theta: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Closed loop as open blocks plus L theta R on the (x, w, d) columns."""
    M0 = np.block([
        [plant.A, plant.B1, plant.B2],
        [plant.C1, plant.D11, plant.D12],
        [plant.C2, plant.D21, plant.D22],
    ])
    return M0 + L @ theta @ R


def _as_lfr_or_ss(M: np.ndarray, n: int, p: int, q: int, k_e: int, m_d: int):
    A = M[:n, :n]
    B1, B2 = M[:n, n:n + q], M[:n, n + q:]
    C1, D11, D12 = M[n:n + p, :n], M[n:n + p, n:n + q], M[n:n + p, n + q:]
    C2, D21, D22 = M[n + p:, :n], M[n + p:, n:n + q], M[n + p:, n + q:]
    if p == 0 and q == 0:
        return StateSpace(A, B2, C2, D22)
    return LfrPlant(A=A, B1=B1, B2=B2, B3=np.zeros((n, 0)),
                    C1=C1, D11=D11, D12=D12,
                    C2=C2, D21=D21, D22=D22,
                    C3=np.zeros((0, n)), p=p, q=q)


def close_loop(plant: LfrPlant, c: Controller):
    """Close a plant with one of the four controller structures.

    Returns a StateSpace for nominal plants and an LfrPlant retaining the
    uncertainty channel otherwise.  Dynamic controllers stack the state as
    (x, x_c).
    """
    d = plant.dims
    n, p, q = d["n"], d["p"], d["q"]
    m_d, m_u, k_e, k_y = d["m_d"], d["m_u"], d["k_e"], d["k_y"]

    if c.kind == "static":
        if c.K.shape != (m_u, k_y):
            raise ValueError(f"static gain must be {(m_u, k_y)}, got {c.K.shape}")
        L = np.vstack([plant.B3, plant.D13, plant.D23])
        R = np.hstack([plant.C3, plant.D31, plant.D32])
        M = _close_blocks(plant, L, c.K, R)
        return _as_lfr_or_ss(M, n, p, q, k_e, m_d)

    if c.kind == "dynamic":
        nc = c.Ac.shape[0]
        if c.Ac.shape != (nc, nc) or c.Bc.shape != (nc, k_y) or \
                c.Cc.shape != (m_u, nc) or c.Dc.shape != (m_u, k_y):
            raise ValueError("dynamic controller blocks do not match plant channels")
        # static closure with Dc, then append controller dynamics
        A_s = plant.A + plant.B3 @ c.Dc @ plant.C3
        Acl = np.block([[A_s, plant.B3 @ c.Cc], [c.Bc @ plant.C3, c.Ac]])
        B1cl = np.vstack([plant.B1 + plant.B3 @ c.Dc @ plant.D31, c.Bc @ plant.D31])
        B2cl = np.vstack([plant.B2 + plant.B3 @ c.Dc @ plant.D32, c.Bc @ plant.D32])
        C1cl = np.hstack([plant.C1 + plant.D13 @ c.Dc @ plant.C3, plant.D13 @ c.Cc])
        C2cl = np.hstack([plant.C2 + plant.D23 @ c.Dc @ plant.C3, plant.D23 @ c.Cc])
        D11cl = plant.D11 + plant.D13 @ c.Dc @ plant.D31
        D12cl = plant.D12 + plant.D13 @ c.Dc @ plant.D32
        D21cl = plant.D21 + plant.D23 @ c.Dc @ plant.D31
        D22cl = plant.D22 + plant.D23 @ c.Dc @ plant.D32
        M = np.block([[Acl, B1cl, B2cl],
                      [C1cl, D11cl, D12cl],
                      [C2cl, D21cl, D22cl]])
        return _as_lfr_or_ss(M, n + nc, p, q, k_e, m_d)

    if c.kind == "full_information":
        if c.F.shape != (m_u, n + q + m_d):
            raise ValueError(
                f"full-information gain must be {(m_u, n + q + m_d)}, got {c.F.shape}"
            )
        L = np.vstack([plant.B3, plant.D13, plant.D23])
        M = _close_blocks(plant, L, c.F, np.eye(n + q + m_d))
        return _as_lfr_or_ss(M, n, p, q, k_e, m_d)

    if c.kind == "full_actuation":
        if c.E.shape != (n + p + k_e, k_y):
            raise ValueError(
                f"full-actuation gain must be {(n + p + k_e, k_y)}, got {c.E.shape}"
            )
        R = np.hstack([plant.C3, plant.D31, plant.D32])
        M = _close_blocks(plant, np.eye(n + p + k_e), c.E, R)
        return _as_lfr_or_ss(M, n, p, q, k_e, m_d)

    raise ValueError(f"unknown controller kind {c.kind!r}")


def dualize_plant(ss: StateSpace) -> StateSpace:
    """Adjoint realization (-A^T, C^T, -B^T, D^T) used by the dual LMIs.

    The transfer matrix satisfies G*(s) = G(-s)^T; applying the map twice
    returns a realization of the original transfer matrix.
    """
    return StateSpace(-ss.A.T, ss.C.T, -ss.B.T, ss.D.T)


# --- oracles ---------------------------------------------------------------

def hinf_norm(ss: StateSpace, rtol: float = 1e-6) -> float:
    """H-infinity norm by Hamiltonian imaginary-axis bisection.

    Standard two-sided refinement: a candidate level is no upper bound iff
    the associated Hamiltonian matrix has imaginary-axis eigenvalues, in
    which case singular values at midpoint frequencies push the lower bound
    up.  Terminates at relative accuracy ``rtol``.
    """
    if not ss.is_hurwitz():
        raise ValueError("A must be Hurwitz to compute an H-infinity norm")
    A, B, C, D = ss.A, ss.B, ss.C, ss.D
    n, m, k = ss.n, ss.n_in, ss.n_out
    if m == 0 or k == 0:
        return 0.0
    if n == 0 or not np.any(B) or not np.any(C):
        return float(np.linalg.norm(D, 2))

    def sval(w: float) -> float:
        return float(np.linalg.norm(ss.freq(1j * w), 2))

    # initial lower bound: D gain, dc gain, and gains near pole frequencies
    eigs = np.linalg.eigvals(A)
    test_freqs = [0.0]
    for lam in eigs:
        if abs(lam.imag) > 1e-12:
            test_freqs.append(abs(lam.imag))
        test_freqs.append(abs(lam))
    lower = max(float(np.linalg.norm(D, 2)), max(sval(w) for w in test_freqs))
    if lower == 0.0:
        return 0.0

    for _ in range(100):
        gamma = (1.0 + 2.0 * rtol) * lower
        R = gamma ** 2 * np.eye(m) - D.T @ D
        Rinv = np.linalg.inv(R)
        H11 = A + B @ Rinv @ D.T @ C
        H = np.block([
            [H11, B @ Rinv @ B.T],
            [-C.T @ (np.eye(k) + D @ Rinv @ D.T) @ C, -H11.T],
        ])
        heigs = np.linalg.eigvals(H)
        scale = max(1.0, float(np.max(np.abs(heigs))))
        on_axis = sorted(
            lam.imag for lam in heigs
            if abs(lam.real) <= 1e-8 * scale and lam.imag > 1e-12 * scale
        )
        if not on_axis:
            return lower * (1.0 + rtol)
        mids = [(a + b) / 2.0 for a, b in zip(on_axis[:-1], on_axis[1:])] or on_axis
        new_lower = max(sval(w) for w in mids)
        if new_lower <= lower * (1.0 + 1e-14):
            # stalled on numerically coincident crossings; fall back to the
            # crossings themselves
            new_lower = max(max(sval(w) for w in on_axis), new_lower)
            if new_lower <= lower * (1.0 + 1e-14):
                return lower * (1.0 + rtol)
        lower = new_lower
    raise ValueError("H-infinity bisection failed to converge")


def gh2_norm(ss: StateSpace) -> float:
    """Energy-to-peak gain sqrt(lambda_max(C W C^T)), W the controllability
    Gramian.  Defined only for strictly proper systems."""
    if np.any(ss.D):
        raise ValueError("energy-to-peak gain undefined for D != 0")
    if not ss.is_hurwitz():
        raise ValueError("A must be Hurwitz to compute an energy-to-peak norm")
    if ss.n == 0 or ss.n_in == 0 or ss.n_out == 0:
        return 0.0
    W = matops.solve_lyapunov(ss.A, ss.B @ ss.B.T)
    val = float(np.max(np.linalg.eigvalsh(matops.sym(ss.C @ W @ ss.C.T))))
    return float(np.sqrt(max(val, 0.0)))


def frozen_delta_close(closed: LfrPlant, Delta) -> StateSpace:
    """Eliminate the uncertainty channel of a closed loop at constant Delta.

    Requires a plant without open control/measurement channels and
    well-posedness of I - Delta D11.
    """
    d = closed.dims
    if d["m_u"] or d["k_y"]:
        raise ValueError("frozen-uncertainty closure expects a closed loop (no u/y channels)")
    p, q = d["p"], d["q"]
    Delta = _shaped(Delta, q, p, "Delta")
    M = np.eye(q) - Delta @ closed.D11
    if q:
        sv = np.linalg.svd(M, compute_uv=False)
        if sv[-1] < 1e-10 * max(1.0, sv[0]):
            raise ValueError("loop is ill-posed at the given Delta (I - Delta D11 singular)")
        gain = np.linalg.solve(M, Delta)  # (I - Delta D11)^{-1} Delta
    else:
        gain = np.zeros((0, 0))
    A_f = closed.A + closed.B1 @ gain @ closed.C1
    B_f = closed.B2 + closed.B1 @ gain @ closed.D12
    C_f = closed.C2 + closed.D21 @ gain @ closed.C1
    D_f = closed.D22 + closed.D21 @ gain @ closed.D12
    return StateSpace(A_f, B_f, C_f, D_f)
