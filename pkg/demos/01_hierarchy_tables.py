"""The recursion for the conserved densities, printed term by term.

Builds w_1..w_6 for the defocusing sign, shows the first few as
differential polynomials in (u, v) = (phi, conj phi), then evaluates the
invariants I_1..I_6 on a plane wave, where they are known in closed form.
"""
import numpy as np

from hierlab.grid import PeriodicGrid, plane_wave
from hierlab.hierarchy import build, invariant, structure_violations


def show(P):
    parts = []
    for (uo, vo), c in sorted(P.terms.items()):
        mono = " ".join([f"u{o}" for o in uo] + [f"v{o}" for o in vo])
        c = complex(c)
        coef = f"{c.real:g}" if c.imag == 0 else f"{c.imag:g}i" if c.real == 0 else f"({c.real:g}{c.imag:+g}i)"
        parts.append(f"{coef} {mono}")
    return " + ".join(parts)


table = build(6, kappa=1)
print("structure violations:", structure_violations(table) or "none")
for n in range(1, 5):
    print(f"w_{n} =", show(table.w[n]))
print("(uK / vK denote the K-th derivative of u / v)")

grid = PeriodicGrid(np.pi, 256)
A, m = 0.5, 2
phi = plane_wave(grid, A, m)
print(f"\nplane wave A={A}, m={m}:")
for n in range(1, 7):
    print(f"  I_{n} = {invariant(table, n, phi): .6f}")
print(f"  I_1 closed form 2 pi A^2 = {2 * np.pi * A ** 2:.6f}")
print(f"  I_3 closed form 2 pi (m^2 A^2 + A^4) = {2 * np.pi * (m ** 2 * A ** 2 + A ** 4):.6f}")
