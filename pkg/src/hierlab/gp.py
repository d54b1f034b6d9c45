"""Finite-k Gross-Pitaevskii checks on factorized and mixed states.

Kernels are stored with axes ordered (x_1..x_k, x'_1..x'_k).  Two-particle
kernels live on a coarser sub-grid (default N = 64) obtained by spectral
truncation, since a k = 2 kernel has N^4 samples.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import ToleranceError
from .grid import GridFunction, PeriodicGrid, integrate, resample
from .hierarchy import HierarchyTable, i_bn, ink, invariant

__all__ = [
    "DensityKernel",
    "factorized_kernel",
    "factorized_energy",
    "mixed_energy",
    "contract_plus",
    "contract_minus",
    "gp3_residual",
    "gp4_residual",
    "w3_spot_check",
    "w4_spot_check",
    "xhn_kernel",
    "xhn_kernel_from_table",
    "xhn_factorized_residual",
    "SymTensor",
    "symmetrize",
    "sym_rank1_decompose",
    "reconstruct",
    "DEFAULT_SUBGRID",
]

DEFAULT_SUBGRID = 64


@dataclass(frozen=True, eq=False)
class DensityKernel:
    k: int
    grid: PeriodicGrid
    samples: np.ndarray
    self_adjoint: bool = False
    bosonic: bool = False

    def adjoint_defect(self) -> float:
        k = self.k
        perm = tuple(range(k, 2 * k)) + tuple(range(k))
        return float(np.max(np.abs(self.samples - np.transpose(self.samples, perm).conj())))

    def bosonic_defect(self) -> float:
        if self.k < 2:
            return 0.0
        s = self.samples
        return float(max(np.max(np.abs(s - s.transpose(1, 0, 2, 3))),
                         np.max(np.abs(s - s.transpose(0, 1, 3, 2)))))

    def trace(self) -> complex:
        """Quadrature of the diagonal x = x'."""
        w = self.grid.dx
        if self.k == 1:
            return complex(np.trace(self.samples) * w)
        return complex(np.einsum("abab->", self.samples) * w * w)


def _check_k(k):
    if k not in (1, 2):
        raise ValueError(f"kernels are limited to k <= 2 (memory guard), got k={k}")


def _outer_kernel(left: List[np.ndarray], right: List[np.ndarray]) -> np.ndarray:
    out = left[0]
    for f in left[1:] + [r.conj() for r in right]:
        out = np.multiply.outer(out, f)
    return out


def factorized_kernel(phi: GridFunction, k: int) -> DensityKernel:
    _check_k(k)
    v = phi.values
    return DensityKernel(k, phi.grid, _outer_kernel([v] * k, [v] * k), True, True)


def factorized_energy(table: HierarchyTable, n: int, phi: GridFunction) -> float:
    phibar = phi.conj()
    total = sum(ink(table, n, k, phi, phibar) for k in range(1, table.k_max(n) + 1))
    ref = invariant(table, n, phi)
    if abs(total - ref) > 1e-10 * max(abs(ref), 1e-300) and abs(total - ref) > 1e-13:
        raise ToleranceError(f"sum_k I_{n}^(k) = {total} differs from I_{n} = {ref}")
    return float(total.real)


def mixed_energy(table: HierarchyTable, n: int, phi1: GridFunction, phi2: GridFunction) -> float:
    total = 0j
    for k in range(1, table.k_max(n) + 1):
        total += 0.5 * (ink(table, n, k, phi1, phi2.conj()) + ink(table, n, k, phi2, phi1.conj()))
    ref = i_bn(table, n, phi1, phi2)
    if abs(total - ref) > 1e-10 * max(abs(ref), 1e-300) and abs(total - ref) > 1e-13:
        raise ToleranceError(f"mixed energy {total} differs from I_b,{n} = {ref}")
    return float(total.real)


# -- contractions and kernel calculus ---------------------------------------

def contract_plus(g2: np.ndarray) -> np.ndarray:
    """B^+(g2)(x; x') = g2(x, x; x', x)."""
    return np.einsum("aaba->ab", g2)


def contract_minus(g2: np.ndarray) -> np.ndarray:
    """B^-(g2)(x; x') = g2(x, x'; x', x')."""
    return np.einsum("abbb->ab", g2)


def _axis_derivative(a: np.ndarray, grid: PeriodicGrid, axis: int, order: int) -> np.ndarray:
    sym = (1j * grid.wavenumbers) ** order
    if order % 2:
        sym[grid.N // 2] = 0.0
    shape = [1] * a.ndim
    shape[axis] = grid.N
    return np.fft.ifft(np.fft.fft(a, axis=axis) * sym.reshape(shape), axis=axis)


def _sub(phi: GridFunction, sub_N: int) -> GridFunction:
    return phi if phi.grid.N == sub_N else resample(phi, sub_N)


def _time_triplets(traj, sub_N, max_snapshot_dt):
    if len(traj.states) < 3:
        raise ValueError("need at least three snapshots for a centered time difference")
    tau = traj.snapshot_dt
    if tau > max_snapshot_dt:
        raise ValueError(f"snapshot spacing {tau} too coarse for the time difference")
    for i in range(1, len(traj.states) - 1):
        yield traj.times[i], tau, [_sub(traj.states[j], sub_N) for j in (i - 1, i, i + 1)]


def gp3_residual(traj, k: int = 1, sub_N: int = DEFAULT_SUBGRID,
                 max_snapshot_dt: float = 1e-2, every: int = 1) -> List[Tuple[float, float]]:
    """sup |i d_t g1 + [Delta, g1] - 2 kappa (B+ - B-)(g2)| on factorized kernels of an n=3 flow."""
    if traj.n != 3:
        raise ValueError("gp3_residual needs an n=3 trajectory")
    if k != 1:
        raise ValueError("only the first equation of the hierarchy (k=1) is assembled")
    kappa = traj.kappa
    rows = []
    for idx, (t, tau, (pm, p0, pp)) in enumerate(_time_triplets(traj, sub_N, max_snapshot_dt)):
        if idx % every:
            continue
        g = p0.grid
        g1 = factorized_kernel(p0, 1).samples
        dt_g1 = (factorized_kernel(pp, 1).samples - factorized_kernel(pm, 1).samples) / (2 * tau)
        lap = _axis_derivative(g1, g, 0, 2) - _axis_derivative(g1, g, 1, 2)
        g2 = factorized_kernel(p0, 2).samples
        inter = contract_plus(g2) - contract_minus(g2)
        del g2
        R = 1j * dt_g1 + lap - 2 * kappa * inter
        rows.append((t, float(np.max(np.abs(R)))))
    return rows


def gp4_residual(traj, ell: int = 1, sub_N: int = DEFAULT_SUBGRID,
                 max_snapshot_dt: float = 1e-2, every: int = 1) -> List[Tuple[float, float]]:
    """sup |d_t g1 - (d_x^3 + d_x'^3) g1 + 6 kappa (B+(d_x1 g2) + B-(d_x'1 g2))| for an n=4 flow."""
    if traj.n != 4:
        raise ValueError("gp4_residual needs an n=4 trajectory")
    if ell != 1:
        raise ValueError("only the first equation of the hierarchy (ell=1) is assembled")
    kappa = traj.kappa
    rows = []
    for idx, (t, tau, (pm, p0, pp)) in enumerate(_time_triplets(traj, sub_N, max_snapshot_dt)):
        if idx % every:
            continue
        g = p0.grid
        g1 = factorized_kernel(p0, 1).samples
        dt_g1 = (factorized_kernel(pp, 1).samples - factorized_kernel(pm, 1).samples) / (2 * tau)
        disp = _axis_derivative(g1, g, 0, 3) + _axis_derivative(g1, g, 1, 3)
        g2 = factorized_kernel(p0, 2).samples
        inter = contract_plus(_axis_derivative(g2, g, 0, 1)) + contract_minus(_axis_derivative(g2, g, 2, 1))
        del g2
        R = dt_g1 - disp + 6 * kappa * inter
        rows.append((t, float(np.max(np.abs(R)))))
    return rows


def w3_spot_check(table: HierarchyTable, phi: GridFunction, sub_N: int = DEFAULT_SUBGRID) -> Tuple[complex, complex]:
    """(kappa * int g2(x,x;x,x) dx, I_3^(2)) for the factorized g2 of phi on the sub-grid."""
    p = _sub(phi, sub_N)
    g2 = factorized_kernel(p, 2).samples
    diag = GridFunction(p.grid, np.einsum("aaaa->a", g2))
    return table.kappa * integrate(diag), ink(table, 3, 2, p, p.conj())


def w4_spot_check(table: HierarchyTable, phi: GridFunction, sub_N: int = DEFAULT_SUBGRID) -> Tuple[complex, complex]:
    """((3 kappa/2) int [(-i d_x1 - i d_x2) g2]|_{x2 = x1 = x' = x} dx, I_4^(2))."""
    p = _sub(phi, sub_N)
    g = p.grid
    g2 = factorized_kernel(p, 2).samples
    dg = _axis_derivative(g2, g, 0, 1) + _axis_derivative(g2, g, 1, 1)
    diag = GridFunction(g, -1j * np.einsum("aaaa->a", dg))
    return 1.5 * table.kappa * integrate(diag), ink(table, 4, 2, p, p.conj())


# -- Hamiltonian vector field on factorized states ----------------------------

def xhn_kernel(phi: GridFunction, slot: np.ndarray, k: int, slot_bar: np.ndarray = None) -> np.ndarray:
    """sum_alpha |phi..slot..phi><phi^k| + |phi^k><phi..slot_bar..phi| (slot_bar defaults to slot)."""
    _check_k(k)
    v = phi.values
    sb = slot if slot_bar is None else slot_bar
    out = 0
    for a in range(k):
        left = [v] * k
        left[a] = slot
        out = out + _outer_kernel(left, [v] * k)
        right = [v] * k
        right[a] = sb
        out = out + _outer_kernel([v] * k, right)
    return out


def xhn_kernel_from_table(table: HierarchyTable, n: int, k: int, phi: GridFunction) -> np.ndarray:
    """Per-slot kernel -(i/2)[(g2 + conj g1)(x) conj(phi)(x') - phi(x) (conj g2 + g1)(x')].

    g1, g2 are the Euler derivatives of the n-th density at (phi, conj phi);
    the slot is written symmetrically in both so that no identity between
    them is assumed.
    """
    from .hierarchy import euler_eval
    pb = phi.conj()
    g1 = euler_eval(table, n, "u", phi, pb).values
    g2 = euler_eval(table, n, "v", phi, pb).values
    ket = -0.5j * (g2 + g1.conj())
    # <slot| carries conj(slot); conj(ket) = (i/2)(conj g2 + g1)
    return xhn_kernel(phi, ket, k)


def xhn_factorized_residual(table: HierarchyTable, n: int, k: int, phi: GridFunction,
                            rhs_phi: GridFunction) -> float:
    """sup |slot-sum kernel - d/de factorized_kernel(phi + e rhs_phi)|_{e=0}|.

    The derivative is extracted exactly: the factorized kernel is a polynomial
    of degree 2k <= 4 in real e, for which the five-point stencil is exact.
    """
    _check_k(k)
    table._check_n(n)
    direct = xhn_kernel(phi, rhs_phi.values, k)

    def K(e):
        return factorized_kernel(phi + rhs_phi * e, k).samples

    h = 1.0
    leibniz = (8 * (K(h) - K(-h)) - (K(2 * h) - K(-2 * h))) / (12 * h)
    return float(np.max(np.abs(direct - leibniz)))


# -- symmetric tensors ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SymTensor:
    entries: np.ndarray

    @property
    def d(self) -> int:
        return self.entries.shape[0] if self.entries.ndim else 0

    @property
    def n(self) -> int:
        return self.entries.ndim


def _as_array(T) -> np.ndarray:
    return np.asarray(T.entries if isinstance(T, SymTensor) else T, dtype=complex)


def symmetrize(T) -> SymTensor:
    a = _as_array(T)
    if a.size > 10 ** 4:
        raise ValueError(f"tensor with {a.size} entries exceeds the 1e4 size guard")
    if len(set(a.shape)) > 1:
        raise ValueError(f"all tensor axes must have equal length, got {a.shape}")
    perms = list(itertools.permutations(range(a.ndim)))
    out = sum(np.transpose(a, p) for p in perms) / len(perms)
    return SymTensor(np.asarray(out))


def reconstruct(terms, d: int, n: int) -> np.ndarray:
    out = np.zeros((d,) * n, dtype=complex)
    for coeff, vec in terms:
        t = np.asarray(vec, dtype=complex)
        p = t
        for _ in range(n - 1):
            p = np.multiply.outer(p, t)
        out = out + coeff * p
    return out


def sym_rank1_decompose(T, seed: int = 0, max_reseeds: int = 5,
                        cond_limit: float = 1e8) -> List[Tuple[complex, np.ndarray]]:
    """Write a symmetric tensor as sum_j a_j beta_j^{(x) n}.

    One generic point beta_j per monomial of degree n in d variables; the
    coefficients solve the linear system matching monomial coefficients of
    the associated homogeneous polynomial (multinomial factors cancel).
    """
    a = _as_array(T)
    n = a.ndim
    d = a.shape[0] if n else 1
    if d > 4 or n > 4:
        raise ValueError(f"decomposition supported for d <= 4, n <= 4, got d={d}, n={n}")
    if np.max(np.abs(a - symmetrize(a).entries), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(a))):
        raise ValueError("tensor is not symmetric")
    basis = list(itertools.combinations_with_replacement(range(d), n))
    rhs = np.array([a[idx] for idx in basis])
    rng = np.random.default_rng(seed)
    for _ in range(max_reseeds + 1):
        beta = (rng.standard_normal((len(basis), d)) + 1j * rng.standard_normal((len(basis), d))) / math.sqrt(2)
        A = np.array([[np.prod(b[list(idx)]) for b in beta] for idx in basis])
        if np.linalg.cond(A) <= cond_limit:
            coeffs = np.linalg.solve(A, rhs)
            return [(complex(c), b) for c, b in zip(coeffs, beta)]
    raise ToleranceError(f"no well-conditioned point set after {max_reseeds} reseeds")
