"""Zero-curvature (AKNS) machinery for the NLS hierarchy.

U(x, lam) = [[-i lam/2, sk psi2], [sk psi1, i lam/2]] with sk = sqrt(kappa)
(1 for kappa = 1 and i for kappa = -1).  Transition matrices solve
dT/dx = U T with T(y, y) = I; later points multiply on the left.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .diffpoly import DiffPoly
from .errors import GridMismatchError, ToleranceError
from .grid import GridFunction, PeriodicGrid, _derivative_values, shifted_samples
from .hierarchy import HierarchyTable, itilde

__all__ = [
    "LaxContext",
    "TransitionMatrix",
    "u_matrix",
    "v_matrix",
    "transition",
    "transition_nodes",
    "monodromy",
    "monodromy_trace",
    "quasimomentum",
    "quasimomentum_sweep",
    "asymptotic_residual",
    "matrix_wn_crosscheck",
    "zero_curvature_residual",
    "rmatrix_residual",
    "rmatrix_sides",
    "involution_residual",
    "normalization_residual",
    "SIGMA1",
    "SIGMA2",
    "SIGMA3",
]

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)

_GAUSS = (0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6)


def sqrt_kappa(kappa: int) -> complex:
    if kappa == 1:
        return 1.0 + 0j
    if kappa == -1:
        return 1j
    raise ValueError(f"kappa must be +1 or -1, got {kappa}")


@dataclass(frozen=True)
class LaxContext:
    psi1: GridFunction
    psi2: GridFunction
    kappa: int
    lam: complex

    def __post_init__(self):
        if self.psi1.grid != self.psi2.grid:
            raise GridMismatchError(f"{self.psi1.grid} != {self.psi2.grid}")
        sqrt_kappa(self.kappa)

    @property
    def grid(self) -> PeriodicGrid:
        return self.psi1.grid

    @property
    def sk(self) -> complex:
        return sqrt_kappa(self.kappa)

    def with_lambda(self, lam) -> "LaxContext":
        return LaxContext(self.psi1, self.psi2, self.kappa, lam)

    @classmethod
    def from_phi(cls, phi: GridFunction, kappa: int, lam) -> "LaxContext":
        return cls(phi, phi.conj(), kappa, lam)


@dataclass(frozen=True)
class TransitionMatrix:
    entries: np.ndarray
    x_from: float
    x_to: float
    lam: complex

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.entries))

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.entries))


def _u_field(lam, sk, p1, p2) -> np.ndarray:
    """Stack of U matrices, shape (..., 2, 2), for field samples p1, p2."""
    p1 = np.asarray(p1)
    out = np.empty(p1.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = -0.5j * lam
    out[..., 1, 1] = 0.5j * lam
    out[..., 0, 1] = sk * np.asarray(p2)
    out[..., 1, 0] = sk * p1
    return out


def u_matrix(ctx: LaxContext, x_index: int) -> np.ndarray:
    j = x_index % ctx.grid.N
    return _u_field(ctx.lam, ctx.sk, ctx.psi1.values[j], ctx.psi2.values[j])


def _v_field(lam, kappa, sk, p1, p2, dp1, dp2) -> np.ndarray:
    p1 = np.asarray(p1)
    out = np.empty(p1.shape + (2, 2), dtype=complex)
    prod = sk * p1 * p2
    # V0 = i sk [[sk p1 p2, -d p2], [d p1, -sk p1 p2]], V1 = -U0, V2 = -U1
    out[..., 0, 0] = 1j * sk * prod + 0.5j * lam ** 2
    out[..., 1, 1] = -1j * sk * prod - 0.5j * lam ** 2
    out[..., 0, 1] = -1j * sk * dp2 - lam * sk * p2
    out[..., 1, 0] = 1j * sk * dp1 - lam * sk * p1
    return out


def v_matrix(ctx: LaxContext, x_index: int) -> np.ndarray:
    g = ctx.grid
    j = x_index % g.N
    dp1 = _derivative_values(ctx.psi1.values, g, 1)[j]
    dp2 = _derivative_values(ctx.psi2.values, g, 1)[j]
    return _v_field(ctx.lam, ctx.kappa, ctx.sk, ctx.psi1.values[j], ctx.psi2.values[j], dp1, dp2)


def _expm_traceless(A: np.ndarray) -> np.ndarray:
    """exp of a stack of traceless 2x2 matrices: cosh(s) I + sinh(s)/s A, s^2 = -det A."""
    s2 = A[..., 0, 0] ** 2 + A[..., 0, 1] * A[..., 1, 0]
    s = np.sqrt(s2)
    small = np.abs(s) < 1e-6
    safe = np.where(small, 1.0, s)
    shc = np.where(small, 1.0 + s2 / 6.0 + s2 ** 2 / 120.0, np.sinh(safe) / safe)
    out = A * shc[..., None, None]
    ch = np.cosh(s)
    out[..., 0, 0] += ch
    out[..., 1, 1] += ch
    return out


def _step_propagators(ctx: LaxContext, substeps: int, method: str) -> Tuple[np.ndarray, float]:
    """One-step propagators over each of the N*substeps sub-intervals (fine order)."""
    g = ctx.grid
    h = g.dx / substeps
    lam, sk = ctx.lam, ctx.sk

    def samples(offset):
        a = shifted_samples(ctx.psi1, offset)
        b = shifted_samples(ctx.psi2, offset)
        return _u_field(lam, sk, a, b)

    steps = np.empty((g.N, substeps, 2, 2), dtype=complex)
    if method == "magnus4":
        c = np.sqrt(3) / 12
        for s in range(substeps):
            A1 = samples(h * (s + _GAUSS[0]))
            A2 = samples(h * (s + _GAUSS[1]))
            comm = A2 @ A1 - A1 @ A2
            steps[:, s] = _expm_traceless(0.5 * h * (A1 + A2) + c * h * h * comm)
    elif method == "rk4":
        I = np.eye(2, dtype=complex)
        for s in range(substeps):
            A0 = samples(h * s)
            Am = samples(h * (s + 0.5))
            A1 = samples(h * (s + 1))
            k1 = A0
            k2 = Am @ (I + 0.5 * h * k1)
            k3 = Am @ (I + 0.5 * h * k2)
            k4 = A1 @ (I + h * k3)
            steps[:, s] = I + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    else:
        raise ValueError(f"unknown transition method {method!r}")
    return steps.reshape(g.N * substeps, 2, 2), h


def transition_nodes(ctx: LaxContext, substeps: int = 4, method: str = "magnus4") -> Tuple[np.ndarray, np.ndarray]:
    """T(z_m, -L) at every sub-step node z_m = -L + m h, m = 0..N*substeps."""
    steps, h = _step_propagators(ctx, substeps, method)
    out = np.empty((steps.shape[0] + 1, 2, 2), dtype=complex)
    out[0] = np.eye(2)
    acc = np.eye(2, dtype=complex)
    for m in range(steps.shape[0]):
        acc = steps[m] @ acc
        out[m + 1] = acc
    if not np.all(np.isfinite(out)):
        raise ToleranceError("transition matrix has nonfinite entries")
    z = -ctx.grid.L + h * np.arange(out.shape[0])
    return z, out


def transition(ctx: LaxContext, y_index: int, x_index: int, substeps: int = 4,
               method: str = "magnus4") -> TransitionMatrix:
    """T(x_{x_index}, x_{y_index}); indices run over 0..N (N is the point x = L)."""
    g = ctx.grid
    if not 0 <= y_index <= g.N or not 0 <= x_index <= g.N:
        raise ValueError("grid indices must lie in [0, N]")
    lo, hi = sorted((y_index, x_index))
    steps, h = _step_propagators(ctx, substeps, method)
    acc = np.eye(2, dtype=complex)
    for m in range(lo * substeps, hi * substeps):
        acc = steps[m] @ acc
    if not np.all(np.isfinite(acc)):
        raise ToleranceError("transition matrix has nonfinite entries")
    if x_index < y_index:
        # unimodular inverse
        acc = np.array([[acc[1, 1], -acc[0, 1]], [-acc[1, 0], acc[0, 0]]])
    x = g.x
    xs = np.append(x, g.L)
    return TransitionMatrix(acc, float(xs[y_index]), float(xs[x_index]), ctx.lam)


def _product(steps: np.ndarray) -> np.ndarray:
    # pairwise reduction keeps the rounding growth logarithmic
    M = steps
    while M.shape[0] > 1:
        if M.shape[0] % 2:
            M = np.concatenate([M[:-2], (M[-1] @ M[-2])[None]])
        else:
            M = M[1::2] @ M[0::2]
    return M[0]


def monodromy(ctx: LaxContext, substeps: int = 4, method: str = "magnus4") -> TransitionMatrix:
    steps, _ = _step_propagators(ctx, substeps, method)
    M = _product(steps)
    if not np.all(np.isfinite(M)):
        raise ToleranceError("monodromy matrix has nonfinite entries")
    return TransitionMatrix(M, -ctx.grid.L, ctx.grid.L, ctx.lam)


def monodromy_trace(ctx: LaxContext, substeps: int = 4, method: str = "magnus4") -> complex:
    return monodromy(ctx, substeps, method).trace


# -- reality structure -------------------------------------------------------

def involution_residual(ctx: LaxContext, substeps: int = 4) -> float:
    """max |sigma T(conj lam) sigma - conj(T'(lam))| with T' built from (conj psi2, conj psi1)."""
    sigma = SIGMA1 if ctx.kappa == 1 else SIGMA2
    left = sigma @ monodromy(ctx.with_lambda(np.conj(ctx.lam)), substeps).entries @ sigma
    swapped = LaxContext(ctx.psi2.conj(), ctx.psi1.conj(), ctx.kappa, ctx.lam)
    right = monodromy(swapped, substeps).entries.conj()
    return float(np.max(np.abs(left - right)))


def normalization_residual(ctx: LaxContext, substeps: int = 4) -> float:
    """max over sub-step nodes of | |a|^2 - sgn(kappa) |b|^2 - 1 | for real lam, psi2 = conj psi1."""
    _, T = transition_nodes(ctx, substeps)
    a, b = T[:, 0, 0], T[:, 1, 0]
    return float(np.max(np.abs(a * a.conj() - ctx.kappa * b * b.conj() - 1.0)))


# -- quasi-momentum ------------------------------------------------------------

BRANCH_GUARD = 1e-6


def _branch(F: complex, target: float) -> complex:
    half = F / 2.0
    if min(abs(half - 1.0), abs(half + 1.0)) < BRANCH_GUARD:
        raise ToleranceError(f"monodromy half-trace {half} is within {BRANCH_GUARD} of a branch point")
    p0 = complex(np.arccos(complex(half)))
    best = None
    for sign in (1.0, -1.0):
        base = sign * p0
        j = np.round((target - base.real) / (2 * np.pi))
        for jj in (j - 1, j, j + 1):
            cand = base + 2 * np.pi * jj
            if best is None or abs(cand.real - target) < abs(best.real - target):
                best = cand
    return best


def quasimomentum(ctx: LaxContext, target: Optional[float] = None, substeps: int = 4) -> complex:
    """arccos(F/2) on the branch nearest ``target`` (default -Re(lam) L)."""
    F = monodromy_trace(ctx, substeps)
    if target is None:
        target = -float(np.real(ctx.lam)) * ctx.grid.L
    return _branch(F, target)


def quasimomentum_sweep(ctx: LaxContext, lams: Sequence[float], substeps: int = 4) -> List[complex]:
    """Quasi-momenta along a real lambda sweep, continued from the largest lambda."""
    L = ctx.grid.L
    order = np.argsort(lams)[::-1]
    out: Dict[int, complex] = {}
    prev_lam = prev_p = None
    for idx in order:
        lam = float(lams[idx])
        target = -lam * L if prev_p is None else prev_p.real + (prev_lam - lam) * L
        p = quasimomentum(ctx.with_lambda(lam), target, substeps)
        out[int(idx)] = p
        prev_lam, prev_p = lam, p
    return [out[i] for i in range(len(lams))]


def asymptotic_residual(ctx: LaxContext, lams: Sequence[float], table: HierarchyTable,
                        K: int, substeps: int = 4) -> List[Tuple[float, float]]:
    """|p(lam) + lam L - kappa sum_{k<=K} Itilde_k / lam^k| over a sweep of large real lam."""
    if K > table.n_max:
        raise ValueError(f"K={K} exceeds the table range {table.n_max}")
    if any(abs(l) < 10 for l in lams):
        raise ValueError("asymptotic residuals need |lambda| >= 10")
    coeffs = [itilde(table, k, ctx.psi1, ctx.psi2) for k in range(1, K + 1)]
    ps = quasimomentum_sweep(ctx, lams, substeps)
    L = ctx.grid.L
    rows = []
    for lam, p in zip(lams, ps):
        series = sum(c / lam ** (k + 1) for k, c in enumerate(coeffs))
        rows.append((float(lam), float(abs(p + lam * L - ctx.kappa * series))))
    return rows


# -- matrix coefficient recursion ---------------------------------------------

def _mat_mul(A, B):
    return [[A[i][0] * B[0][j] + A[i][1] * B[1][j] for j in range(2)] for i in range(2)]


def _mat_add(A, B):
    return [[A[i][j] + B[i][j] for j in range(2)] for i in range(2)]


def _isigma3(A):
    # i sigma3 A
    return [[A[0][0] * 1j, A[0][1] * 1j], [A[1][0] * -1j, A[1][1] * -1j]]


def matrix_wn_crosscheck(table: HierarchyTable, n_max: int):
    """Build W_1..W_{n_max} and compare their (2,1) entries with the w_n table.

    Returns (list of W_n as 2x2 nested lists of DiffPoly, True).  Raises
    ToleranceError on any symbolic mismatch or nonzero diagonal entry.
    """
    if n_max > table.n_max:
        raise ValueError(f"n_max={n_max} exceeds the table range {table.n_max}")
    sk = sqrt_kappa(table.kappa)
    zero = DiffPoly()
    U0 = [[zero, DiffPoly.v() * sk], [DiffPoly.u() * sk, zero]]
    W = [None, [[zero, DiffPoly.v() * (-1j * sk)], [DiffPoly.u() * (1j * sk), zero]]]
    for n in range(1, n_max):
        acc = [[P.d_dx() for P in row] for row in W[n]]
        for k in range(1, n):
            acc = _mat_add(acc, _mat_mul(_mat_mul(W[k], U0), W[n - k]))
        W.append(_isigma3(acc))
    for n in range(1, n_max + 1):
        Wn = W[n]
        if Wn[0][0] or Wn[1][1]:
            raise ToleranceError(f"W_{n} has a nonzero diagonal")
        if Wn[1][0] * (1 / (1j * sk)) != table.w[n]:
            raise ToleranceError(f"(2,1) entry of W_{n} does not reproduce w_{n}")
    return W[1:], True


# -- zero curvature -----------------------------------------------------------

def zero_curvature_residual(traj, lam, max_snapshot_dt: float = 1e-2) -> List[Tuple[float, float]]:
    """sup_x |d_t U - d_x V + [U, V]| at interior snapshots of an n=3 trajectory."""
    if traj.n != 3:
        raise ValueError("zero-curvature check is defined for the n=3 flow")
    if len(traj.states) < 3:
        raise ValueError("need at least three snapshots for a centered time difference")
    tau = traj.snapshot_dt
    if tau > max_snapshot_dt:
        raise ValueError(f"snapshot spacing {tau} too coarse for the time difference")
    g = traj.grid
    kappa = traj.kappa
    sk = sqrt_kappa(kappa)

    def fields(phi):
        p1, p2 = phi.values, phi.values.conj()
        return p1, p2

    def U_of(phi):
        p1, p2 = fields(phi)
        return _u_field(lam, sk, p1, p2)

    rows = []
    for i in range(1, len(traj.states) - 1):
        Ut = (U_of(traj.states[i + 1]) - U_of(traj.states[i - 1])) / (2 * tau)
        p1, p2 = fields(traj.states[i])
        d1 = _derivative_values(p1, g, 1)
        d2 = _derivative_values(p2, g, 1)
        V = _v_field(lam, kappa, sk, p1, p2, d1, d2)
        Vx = np.empty_like(V)
        for a in range(2):
            for b in range(2):
                Vx[:, a, b] = _derivative_values(V[:, a, b], g, 1)
        U = _u_field(lam, sk, p1, p2)
        R = Ut - Vx + (U @ V - V @ U)
        rows.append((traj.times[i], float(np.max(np.abs(R)))))
    return rows


# -- fundamental Poisson bracket ------------------------------------------------

def _simpson_weights(m: int, h: float) -> np.ndarray:
    if m % 2:
        raise ValueError("Simpson's rule needs an even number of intervals")
    w = np.ones(m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def _inv2(T):
    out = np.empty_like(T)
    out[..., 0, 0] = T[..., 1, 1]
    out[..., 1, 1] = T[..., 0, 0]
    out[..., 0, 1] = -T[..., 0, 1]
    out[..., 1, 0] = -T[..., 1, 0]
    return out / (T[..., 0, 0] * T[..., 1, 1] - T[..., 0, 1] * T[..., 1, 0])[..., None, None]


PERMUTATION = np.eye(4)[[0, 2, 1, 3]].astype(complex)


def rmatrix_sides(ctx: LaxContext, mu, substeps: int = 4) -> Tuple[np.ndarray, np.ndarray, float]:
    """(LHS, RHS, size) of {T(L,-L,lam) (x) T(L,-L,mu)} = -[r(lam - mu), T_lam (x) T_mu].

    ``size`` is the magnitude of the two products inside the commutator.
    """
    lam = ctx.lam
    if lam == mu:
        raise ValueError("the r-matrix identity needs lambda != mu")
    kappa = ctx.kappa
    pieces = {}
    for key, l in (("l", lam), ("m", mu)):
        z, Tz = transition_nodes(ctx.with_lambda(l), substeps)
        M = Tz[-1]
        Txz = M @ _inv2(Tz)
        pieces[key] = (M, Txz @ SIGMA_MINUS @ Tz, Txz @ SIGMA_PLUS @ Tz)
    h = z[1] - z[0]
    w = _simpson_weights(z.size - 1, h)
    Ml, Aml, Apl = pieces["l"]
    Mm, Amm, Apm = pieces["m"]

    def kron_sum(A, B):
        return np.einsum("m,mab,mcd->acbd", w, A, B).reshape(4, 4)

    lhs = -1j * kappa * (kron_sum(Aml, Apm) - kron_sum(Apl, Amm))
    r = -kappa * PERMUTATION / (lam - mu)
    TT = np.kron(Ml, Mm)
    rhs = -(r @ TT - TT @ r)
    return lhs, rhs, float(np.max(np.abs(r @ TT)) + np.max(np.abs(TT @ r)))


def rmatrix_residual(ctx: LaxContext, mu, substeps: int = 4) -> float:
    """sup |LHS - RHS| relative to sup |LHS + RHS| plus the commutator term sizes.

    The extra terms keep the ratio meaningful when both sides vanish, which
    happens e.g. for psi = 0 whenever (lam - mu) L is a multiple of 2 pi.
    """
    lhs, rhs, size = rmatrix_sides(ctx, mu, substeps)
    return float(np.max(np.abs(lhs - rhs)) / (np.max(np.abs(lhs + rhs)) + size))
