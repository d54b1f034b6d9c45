"""Time integration of the n-th NLS equation d/dt phi = grad_s I_n(phi)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np

from .diffpoly import DiffPoly
from .errors import BlowUpError, ToleranceError
from .grid import GridFunction, PeriodicGrid
from .hierarchy import HierarchyTable, grad_s, invariant, linear_symbol_exponent

__all__ = ["Trajectory", "rhs", "evolve", "conservation_report", "linear_symbol", "BLOWUP_FACTOR"]

BLOWUP_FACTOR = 1e3


@dataclass
class Trajectory:
    grid: PeriodicGrid
    n: int
    kappa: int
    scheme: str
    dt: float
    stride: int
    times: List[float] = field(default_factory=list)
    states: List[GridFunction] = field(default_factory=list, repr=False)

    def __len__(self):
        return len(self.states)

    @property
    def snapshot_dt(self) -> float:
        return self.dt * self.stride


def rhs(table: HierarchyTable, n: int, phi: GridFunction) -> GridFunction:
    return grad_s(table, n, phi)


def linear_symbol(table: HierarchyTable, n: int, grid: PeriodicGrid) -> np.ndarray:
    """Fourier multiplier of the linear part of grad_s I_n on ``grid``.

    The coefficient is read off the symbolic table and must equal -i, giving
    the multiplier -i k^{n-1}.
    """
    c = linear_symbol_exponent(table, n)
    if abs(c - (-1j)) > 1e-14:
        raise ToleranceError(f"linear symbol of flow {n} is {c} k^{n - 1}, expected -i k^{n - 1}")
    k = grid.wavenumbers
    sym = c * k ** (n - 1)
    if (n - 1) % 2:
        sym[grid.N // 2] = 0.0
    return sym


def _nonlinear_part(table: HierarchyTable, n: int) -> DiffPoly:
    P = table.grad2bar[n]
    lin = P.filter(lambda mono: mono.k == 1 and mono.j == 0)
    return (P - lin) * (-1j)


def evolve(table: HierarchyTable, n: int, phi0: GridFunction, dt: float, steps: int,
           scheme: str = "ifrk4", stride: int = 10) -> Trajectory:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if steps < 0 or stride < 1 or steps % stride:
        raise ValueError("steps must be a nonnegative multiple of stride")
    if scheme not in ("strang", "ifrk4"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if scheme == "strang" and n != 3:
        raise ValueError("strang splitting is only available for the n=3 flow")
    table._check_n(n)

    grid = phi0.grid
    kappa = table.kappa
    sym = linear_symbol(table, n, grid)
    nl = _nonlinear_part(table, n)
    E = np.exp(sym * dt)
    E2 = np.exp(sym * dt / 2)
    fft, ifft = np.fft.fft, np.fft.ifft

    def N_hat(uh):
        u = GridFunction(grid, ifft(uh))
        return fft(nl.evaluate(u, u.conj()).values)

    def step_strang(u):
        u = ifft(E2 * fft(u))
        u = u * np.exp(-2j * kappa * np.abs(u) ** 2 * dt)
        return ifft(E2 * fft(u))

    def step_ifrk4(u):
        uh = fft(u)
        k1 = N_hat(uh)
        k2 = N_hat(E2 * (uh + 0.5 * dt * k1))
        k3 = N_hat(E2 * uh + 0.5 * dt * k2)
        k4 = N_hat(E * uh + dt * E2 * k3)
        uh = E * uh + dt / 6.0 * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)
        return ifft(uh)

    step = step_strang if scheme == "strang" else step_ifrk4
    traj = Trajectory(grid, n, kappa, scheme, dt, stride, [0.0], [phi0])
    limit = BLOWUP_FACTOR * max(phi0.sup(), 1e-300)
    u = np.array(phi0.values)
    for s in range(1, steps + 1):
        u = step(u)
        if s % stride == 0:
            peak = np.max(np.abs(u))
            if not np.isfinite(peak) or peak > limit:
                raise BlowUpError(f"sup|phi| = {peak:.3e} at step {s} (limit {limit:.3e})")
            traj.times.append(s * dt)
            traj.states.append(GridFunction(grid, u))
    return traj


def conservation_report(table: HierarchyTable, traj: Trajectory, n_list) -> list:
    """Rows (time, n, value, drift) with drift = |I_n(t) - I_n(0)| / (1 + |I_n(0)|)."""
    for n in n_list:
        table._check_n(n)
    rows = []
    base = {n: invariant(table, n, traj.states[0]) for n in n_list}
    for t, phi in zip(traj.times, traj.states):
        for n in n_list:
            val = invariant(table, n, phi)
            rows.append((t, n, val, abs(val - base[n]) / (1.0 + abs(base[n]))))
    return rows
