"""Tables of w_n^{(k)} and the conserved functionals built from them.

Conventions: u stands for psi_1 (or phi), v for psi_2 (or conj(phi)).  The
density of the n-th functional is ``v * w_n``; ``grad1`` and ``grad2bar`` are
its Euler derivatives in the u- and v-class.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .diffpoly import DiffPoly
from .errors import GridMismatchError, ToleranceError
from .grid import GridFunction, integrate

N_MAX_CAP = 10

__all__ = [
    "HierarchyTable",
    "build",
    "structure_violations",
    "w_eval",
    "itilde",
    "invariant",
    "ink",
    "grad_s",
    "euler_eval",
    "i_bn",
    "dump_tables",
    "write_tables",
    "linear_symbol_exponent",
]


@dataclass(frozen=True)
class HierarchyTable:
    n_max: int
    kappa: int
    wk: Dict[Tuple[int, int], DiffPoly] = field(repr=False)
    w: Dict[int, DiffPoly] = field(repr=False)
    grad1: Dict[int, DiffPoly] = field(repr=False)
    grad2bar: Dict[int, DiffPoly] = field(repr=False)

    def k_max(self, n: int) -> int:
        """Largest k with w_n^{(k)} possibly nonzero."""
        return (n + 1) // 2

    def component(self, n: int, k: int) -> DiffPoly:
        self._check_n(n)
        return self.wk.get((n, k), DiffPoly())

    def _check_n(self, n: int):
        if not 1 <= n <= self.n_max:
            raise ValueError(f"n={n} outside the table range [1, {self.n_max}]")


def _check_kappa(kappa):
    if kappa not in (1, -1):
        raise ValueError(f"kappa must be +1 or -1, got {kappa}")


def build(n_max: int, kappa: int = 1) -> HierarchyTable:
    if not 1 <= n_max <= N_MAX_CAP:
        raise ValueError(f"n_max must lie in [1, {N_MAX_CAP}], got {n_max}")
    _check_kappa(kappa)
    V = DiffPoly.v()
    wk: Dict[Tuple[int, int], DiffPoly] = {(1, 1): DiffPoly.u()}
    for n in range(1, n_max):
        for k in range(1, n + 2):
            acc = wk.get((n, k), DiffPoly()).d_dx() * (-1j)
            for m in range(1, n):
                for l in range(1, k):
                    a = wk.get((m, l))
                    b = wk.get((n - m, k - l))
                    if a and b:
                        acc = acc + V * a * b * kappa
            if acc:
                wk[(n + 1, k)] = acc

    w: Dict[int, DiffPoly] = {}
    for n in range(1, n_max + 1):
        total = DiffPoly()
        for k in range(1, n + 1):
            total = total + wk.get((n, k), DiffPoly())
        w[n] = total

    # the collapsed recursion must reproduce the summed graded tables
    prev = {1: DiffPoly.u()}
    for n in range(1, n_max):
        acc = prev[n].d_dx() * (-1j)
        for m in range(1, n):
            acc = acc + V * prev[m] * prev[n - m] * kappa
        prev[n + 1] = acc
        if acc != w[n + 1]:
            raise ToleranceError(f"collapsed recursion disagrees with graded tables at n={n + 1}")

    grad1 = {n: (V * w[n]).euler_derivative("u") for n in w}
    grad2bar = {n: (V * w[n]).euler_derivative("v") for n in w}
    return HierarchyTable(n_max, kappa, wk, w, grad1, grad2bar)


def structure_violations(table: HierarchyTable) -> List[str]:
    """Empty list iff vanishing thresholds, degree/order bookkeeping and parity hold."""
    bad = []
    if table.wk.get((1, 1)) != DiffPoly.u():
        bad.append("w_1^(1) != u")
    for (n, k), P in table.wk.items():
        cap = (n + 1) // 2 if n % 2 else n // 2
        if k > cap and P:
            bad.append(f"w_{n}^({k}) nonzero above cutoff {cap}")
        for (uo, vo), c in P:
            if len(uo) != k or len(vo) != k - 1:
                bad.append(f"w_{n}^({k}) slot counts ({len(uo)},{len(vo)})")
            if sum(uo) + sum(vo) != n - 1 - 2 * (k - 1):
                bad.append(f"w_{n}^({k}) derivative order {sum(uo) + sum(vo)}")
            if n % 2 and c.imag != 0:
                bad.append(f"w_{n}^({k}) coefficient {c} not real")
            if not n % 2 and c.real != 0:
                bad.append(f"w_{n}^({k}) coefficient {c} not imaginary")
    return bad


def linear_symbol_exponent(table: HierarchyTable, n: int) -> complex:
    """Fourier symbol coefficient c with grad_s I_n linear part = c * k^{n-1}.

    Read off the single linear monomial of grad2bar; the derivative order is
    n-1, so the symbol of -i * coeff * d^{n-1} is -i * coeff * (ik)^{n-1}.
    """
    table._check_n(n)
    lin = [(uo, c) for (uo, vo), c in table.grad2bar[n] if len(uo) == 1 and not vo]
    if len(lin) != 1 or lin[0][0] != (n - 1,):
        raise ToleranceError(f"unexpected linear part of grad_s I_{n}: {lin}")
    return -1j * lin[0][1] * (1j) ** (n - 1)


def _pair(psi1: GridFunction, psi2: GridFunction):
    if psi1.grid != psi2.grid:
        raise GridMismatchError(f"{psi1.grid} != {psi2.grid}")


def w_eval(table: HierarchyTable, n: int, psi1: GridFunction, psi2: GridFunction) -> GridFunction:
    table._check_n(n)
    _pair(psi1, psi2)
    return table.w[n].evaluate(psi1, psi2)


def itilde(table: HierarchyTable, n: int, psi1: GridFunction, psi2: GridFunction) -> complex:
    return integrate(psi2 * w_eval(table, n, psi1, psi2))


def _real_or_raise(z: complex, what: str) -> float:
    if abs(z.imag) > 1e-9 * (1 + abs(z.real)):
        raise ToleranceError(f"{what} has imaginary part {z.imag:.3e} (real part {z.real:.6e})")
    return float(z.real)


def invariant(table: HierarchyTable, n: int, phi: GridFunction) -> float:
    return _real_or_raise(itilde(table, n, phi, phi.conj()), f"I_{n}")


def ink(table: HierarchyTable, n: int, k: int, phi_u: GridFunction, phi_v: GridFunction) -> complex:
    table._check_n(n)
    _pair(phi_u, phi_v)
    P = table.wk.get((n, k))
    if not P:
        return 0j
    return integrate(phi_v * P.evaluate(phi_u, phi_v))


def euler_eval(table: HierarchyTable, n: int, cls: str, u: GridFunction, v: GridFunction) -> GridFunction:
    """Euler derivative of the n-th density in class ``cls`` evaluated at (u, v)."""
    table._check_n(n)
    _pair(u, v)
    P = table.grad1[n] if cls == "u" else table.grad2bar[n]
    return P.evaluate(u, v)


def grad_s(table: HierarchyTable, n: int, phi: GridFunction) -> GridFunction:
    phibar = phi.conj()
    via_u = euler_eval(table, n, "u", phi, phibar).conj() * (-1j)
    via_v = euler_eval(table, n, "v", phi, phibar) * (-1j)
    diff = np.max(np.abs(via_u.values - via_v.values))
    scale = max(np.max(np.abs(via_v.values)), 1e-300)
    if diff > 1e-9 * scale and diff > 1e-13:
        raise ToleranceError(f"grad_s I_{n}: class-u and class-v formulas differ by {diff:.3e}")
    return via_v


def i_bn(table: HierarchyTable, n: int, phi1: GridFunction, phi2: GridFunction) -> float:
    z = 0.5 * (itilde(table, n, phi1, phi2.conj()) + itilde(table, n, phi2, phi1.conj()))
    return _real_or_raise(z, f"I_b,{n}")


def dump_tables(table: HierarchyTable) -> list:
    return [
        {"n": n, "k": k, "terms": table.wk[(n, k)].to_json()}
        for (n, k) in sorted(table.wk)
    ]


def write_tables(path, table: HierarchyTable) -> None:
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(dump_tables(table), fh, indent=1)
    os.replace(tmp, path)
