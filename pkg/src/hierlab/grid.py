"""Uniform periodic grids on [-L, L] and complex samples living on them.

Transform normalization: the forward transform carries the 1/N factor, so
``coefficients(f)[m]`` multiplies ``exp(i k_m (x + L))`` with ``k_m = pi m / L``.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from numbers import Number

import numpy as np

from .errors import GridMismatchError

__all__ = [
    "PeriodicGrid",
    "GridFunction",
    "spectral_derivative",
    "integrate",
    "inner",
    "omega_L2",
    "l2_norm",
    "random_band_limited",
    "plane_wave",
    "coefficients",
    "shifted_samples",
    "resample",
    "read_state",
    "write_state",
    "state_to_dict",
    "state_from_dict",
]


@dataclass(frozen=True)
class PeriodicGrid:
    L: float
    N: int

    def __post_init__(self):
        if self.N < 8 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"half-period L must be positive, got {self.L}")

    @property
    def x(self) -> np.ndarray:
        return -self.L + 2.0 * self.L * np.arange(self.N) / self.N

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def modes(self) -> np.ndarray:
        """Integer mode numbers in FFT order; the Nyquist mode is +N/2."""
        m = np.fft.fftfreq(self.N, 1.0 / self.N)
        m[self.N // 2] = self.N // 2
        return m

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.pi * self.modes / self.L

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.N, dtype=complex))

    def from_callable(self, f) -> "GridFunction":
        return GridFunction(self, np.asarray(f(self.x), dtype=complex) * np.ones(self.N))


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: PeriodicGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} samples, got shape {vals.shape}")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise GridMismatchError(f"{self.grid} != {other.grid}")
            return other.values
        if isinstance(other, Number):
            return other
        return NotImplemented

    def __add__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return GridFunction(self.grid, self.values + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return GridFunction(self.grid, self.values - o)

    def __rsub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return GridFunction(self.grid, o - self.values)

    def __mul__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return GridFunction(self.grid, self.values * o)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Number):
            return NotImplemented
        return GridFunction(self.grid, self.values / other)

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def conj(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.conj())

    def sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def __len__(self):
        return self.grid.N


def _check_same(f: GridFunction, g: GridFunction):
    if f.grid != g.grid:
        raise GridMismatchError(f"{f.grid} != {g.grid}")


def coefficients(f: GridFunction) -> np.ndarray:
    return np.fft.fft(f.values) / f.grid.N


def _derivative_values(values: np.ndarray, grid: PeriodicGrid, order: int) -> np.ndarray:
    if order == 0:
        return np.array(values, dtype=complex)
    symbol = (1j * grid.wavenumbers) ** order
    if order % 2:
        symbol[grid.N // 2] = 0.0
    return np.fft.ifft(symbol * np.fft.fft(values))


def spectral_derivative(f: GridFunction, order: int = 1) -> GridFunction:
    if order < 0:
        raise ValueError("derivative order must be nonnegative")
    return GridFunction(f.grid, _derivative_values(f.values, f.grid, order))


def integrate(f: GridFunction) -> complex:
    """Rectangle rule over one period (spectrally exact for band-limited f)."""
    return complex(2.0 * f.grid.L * np.mean(f.values))


def inner(f: GridFunction, g: GridFunction) -> complex:
    """Integral of conj(f) * g."""
    _check_same(f, g)
    return complex(2.0 * f.grid.L * np.mean(f.values.conj() * g.values))


def l2_norm(f: GridFunction) -> float:
    return float(np.sqrt(2.0 * f.grid.L * np.mean(np.abs(f.values) ** 2)))


def omega_L2(f: GridFunction, g: GridFunction) -> float:
    return 2.0 * inner(f, g).imag


def random_band_limited(grid: PeriodicGrid, cutoff: int, seed: int,
                        amplitude: float = 1.0) -> GridFunction:
    """Pseudo-random complex trigonometric polynomial with modes |m| <= cutoff.

    The result is rescaled so that its sup-norm on the grid equals ``amplitude``.
    """
    if cutoff < 0 or cutoff > grid.N // 8:
        raise ValueError(f"cutoff must lie in [0, N/8] = [0, {grid.N // 8}], got {cutoff}")
    rng = np.random.default_rng(seed)
    m = np.arange(-cutoff, cutoff + 1)
    c = rng.standard_normal(m.size) + 1j * rng.standard_normal(m.size)
    vals = np.exp(1j * np.pi * np.outer(grid.x, m) / grid.L) @ c
    vals *= amplitude / np.max(np.abs(vals))
    return GridFunction(grid, vals)


def plane_wave(grid: PeriodicGrid, amplitude: complex = 1.0, mode: int = 1) -> GridFunction:
    """``amplitude * exp(i k_mode x)``."""
    return GridFunction(grid, amplitude * np.exp(1j * np.pi * mode * grid.x / grid.L))


def shifted_samples(f: GridFunction, offset: float) -> np.ndarray:
    """Trigonometric interpolant of f evaluated at ``x_j + offset``."""
    grid = f.grid
    fh = np.fft.fft(f.values)
    phase = np.exp(1j * grid.wavenumbers * offset)
    # the Nyquist mode has no unique real-shift interpolant; split it symmetrically
    phase[grid.N // 2] = np.cos(grid.wavenumbers[grid.N // 2] * offset)
    return np.fft.ifft(fh * phase)


def resample(f: GridFunction, N: int) -> GridFunction:
    """Spectral truncation (or zero padding) onto an N-point grid with the same L."""
    new = PeriodicGrid(f.grid.L, N)
    c = coefficients(f)
    m_old = f.grid.modes.astype(int)
    out = np.zeros(N, dtype=complex)
    keep = np.abs(m_old) < N // 2
    out[m_old[keep] % N] = c[keep]
    # x_0 = -L on both grids, so coefficients transfer directly
    return GridFunction(new, np.fft.ifft(out) * N)


def state_to_dict(f: GridFunction) -> dict:
    return {
        "grid": {"N": f.grid.N, "L": f.grid.L},
        "re": [float(v) for v in f.values.real],
        "im": [float(v) for v in f.values.imag],
    }


def state_from_dict(data: dict) -> GridFunction:
    try:
        grid = PeriodicGrid(float(data["grid"]["L"]), int(data["grid"]["N"]))
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data["im"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed state: missing or invalid field ({exc})") from exc
    if re.shape != (grid.N,) or im.shape != (grid.N,):
        raise ValueError(f"state arrays must have length N={grid.N}")
    return GridFunction(grid, re + 1j * im)


def read_state(path) -> GridFunction:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON ({exc})") from exc
    return state_from_dict(data)


def write_state(path, f: GridFunction) -> None:
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(state_to_dict(f), fh)
    os.replace(tmp, path)
