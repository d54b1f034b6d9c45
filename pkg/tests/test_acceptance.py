"""Acceptance suite: one test per criterion, each covering both signs of kappa.

Run directly (``python tests/test_acceptance.py``) or through pytest; either
way one PASS/FAIL line per criterion is printed at the end.
"""
import itertools

import numpy as np
import pytest

from hierlab.diffpoly import DiffPoly
from hierlab.flows import conservation_report, evolve
from hierlab.gp import (factorized_energy, gp3_residual, gp4_residual, mixed_energy, reconstruct,
                        sym_rank1_decompose, symmetrize, w3_spot_check, w4_spot_check,
                        xhn_factorized_residual)
from hierlab.grid import (PeriodicGrid, omega_L2, plane_wave, random_band_limited, resample,
                          spectral_derivative)
from hierlab.hierarchy import build, grad_s, i_bn, invariant, structure_violations
from hierlab.lax import (LaxContext, asymptotic_residual, involution_residual, matrix_wn_crosscheck,
                         monodromy, monodromy_trace, normalization_residual, rmatrix_residual,
                         zero_curvature_residual)
from hierlab.poisson import bracket_L2, bracket_L2_V, fd_directional

KAPPAS = (1, -1)
G = PeriodicGrid(np.pi, 256)
U, V = DiffPoly.u, DiffPoly.v

# small-data regime used for the long-time flow checks
FLOW_CUTOFF, FLOW_AMPLITUDE = 6, 0.25
# GP checks: the interaction term must dominate the time-difference error
GP_CUTOFF, GP_AMPLITUDE, GP_SUB_N = 3, 0.5, 64


def _rand(seed, cutoff=12, amplitude=1.0, grid=G):
    return random_band_limited(grid, cutoff, seed, amplitude)


def test_criterion_1_structure():
    for kappa in KAPPAS:
        t = build(8, kappa)
        assert structure_violations(t) == []
        assert t.w[3] == U(2, -1) + U() * U() * V() * kappa
        assert t.w[4] == U(3, 1j) + U() * U() * V(1) * (-1j * kappa) + U() * U(1) * V() * (-4j * kappa)


def test_criterion_2_gradient():
    for kappa in KAPPAS:
        t = build(6, kappa)
        for trial in range(10):
            phi, delta = _rand(2 * trial), _rand(2 * trial + 1)
            for n in range(1, 7):
                fd = fd_directional(lambda f: invariant(t, n, f), phi, delta, 1e-4).real
                sy = omega_L2(grad_s(t, n, phi), delta)
                assert abs(fd - sy) <= 1e-6 * (1 + abs(invariant(t, n, phi)))
        phi = _rand(99)
        d = lambda k: spectral_derivative(phi, k).values
        mod2 = np.abs(phi.values) ** 2
        g3 = 1j * d(2) - 2j * kappa * mod2 * phi.values
        g4 = d(3) - 6 * kappa * mod2 * d(1)
        assert np.max(np.abs(grad_s(t, 3, phi).values - g3)) <= 1e-9 * np.max(np.abs(g3))
        assert np.max(np.abs(grad_s(t, 4, phi).values - g4)) <= 1e-9 * np.max(np.abs(g4))


def test_criterion_3_involution():
    worst = 0.0
    for kappa in KAPPAS:
        t = build(6, kappa)
        for trial in range(10):
            phi, phi1, phi2 = _rand(trial), _rand(100 + trial), _rand(200 + trial)
            for n, m in itertools.combinations(range(1, 7), 2):
                worst = max(worst, bracket_L2(t, n, m, phi).normalized,
                            bracket_L2_V(t, n, m, phi1, phi2).normalized)
    assert worst <= 1e-6


def test_criterion_4_conservation():
    for kappa in KAPPAS:
        t = build(6, kappa)
        for seed in range(2):
            phi = _rand(seed, FLOW_CUTOFF, FLOW_AMPLITUDE)
            tr = evolve(t, 3, phi, 1e-3, 1000, "strang", 100)
            assert max(r[3] for r in conservation_report(t, tr, range(1, 7))) <= 1e-6
            tr = evolve(t, 4, phi, 2e-4, 1250, "ifrk4", 125)
            assert max(r[3] for r in conservation_report(t, tr, range(1, 7))) <= 1e-5
        A, m = 0.7, 2
        pw = plane_wave(G, A, m)
        tr = evolve(t, 3, pw, 1e-3, 1000, "strang", 1000)
        exact = pw.values * np.exp(-1j * (m ** 2 + 2 * kappa * A ** 2))
        assert np.max(np.abs(tr.states[-1].values - exact)) <= 1e-6 * A


def test_criterion_5_lax():
    for kappa in KAPPAS:
        t = build(6, kappa)
        phi = _rand(1)
        for lam in (0.7, 2.0, 5.0, 3.0 + 0.5j):
            ctx = LaxContext.from_phi(phi, kappa, lam)
            assert abs(monodromy(ctx).det - 1) <= 1e-8
            assert involution_residual(ctx) <= 1e-8
            if np.isreal(lam):
                assert normalization_residual(ctx) <= 1e-8

        # trace conservation along the NLS flow
        tr = evolve(t, 3, _rand(2, FLOW_CUTOFF, FLOW_AMPLITUDE), 1e-3, 1000, "strang", 100)
        F = [monodromy_trace(LaxContext.from_phi(s, kappa, 5.0)) for s in tr.states]
        assert max(abs(f - F[0]) for f in F) <= 1e-5 * max(1.0, abs(F[0]))

        # zero curvature, second order in the snapshot spacing
        phi_zc = _rand(3, 3, 0.5)
        res = []
        for dt in (1e-3, 5e-4):
            trz = evolve(t, 3, phi_zc, dt, 20, "strang", 1)
            res.append(max(v for _, v in zero_curvature_residual(trz, 3.0)))
        assert res[1] <= 1e-4 and res[0] / res[1] >= 3.5

        # asymptotics, on a period avoiding the arccos branch points at these
        # lambdas; low-bandwidth data so that 20 is already in the asymptotic range
        g3 = PeriodicGrid(3.0, 256)
        for seed in range(5):
            ctx = LaxContext.from_phi(random_band_limited(g3, 1, seed, 0.1), kappa, 20.0)
            rows = asymptotic_residual(ctx, [20.0, 40.0, 80.0], t, 3)
            slope = np.polyfit(np.log([r[0] for r in rows]), np.log([r[1] for r in rows]), 1)[0]
            assert slope <= -3.5, (seed, slope)

        assert matrix_wn_crosscheck(t, 6)[1]
        assert rmatrix_residual(LaxContext.from_phi(_rand(5), kappa, 2.0), 5.0) <= 1e-5


def test_criterion_6_gp():
    for kappa in KAPPAS:
        t = build(6, kappa)
        phi = _rand(1, GP_CUTOFF, GP_AMPLITUDE)
        phi2 = _rand(2, GP_CUTOFF, GP_AMPLITUDE)
        for n in range(1, 7):
            ref = invariant(t, n, phi)
            assert abs(factorized_energy(t, n, phi) - ref) <= 1e-10 * abs(ref)
            ref = i_bn(t, n, phi, phi2)
            assert abs(mixed_energy(t, n, phi, phi2) - ref) <= 1e-10 * abs(ref)
        for fn in (w3_spot_check, w4_spot_check):
            a, b = fn(t, phi, GP_SUB_N)
            assert abs(a - b) <= 1e-8 * abs(b)
        ps = resample(phi, GP_SUB_N)
        for n in (3, 4):
            for k in (1, 2):
                assert xhn_factorized_residual(t, n, k, ps, grad_s(t, n, ps)) <= 1e-10
        # step pairs: the n=4 flow needs a finer step for the 1e-3 bound
        for n, scheme, dts, fn, tol in ((3, "strang", (1e-3, 5e-4), gp3_residual, 1e-4),
                                        (4, "ifrk4", (2.5e-4, 1.25e-4), gp4_residual, 1e-3)):
            res = []
            for dt in dts:
                tr = evolve(t, n, phi, dt, 4, scheme, 1)
                res.append(max(v for _, v in fn(tr, sub_N=GP_SUB_N, every=2)))
            assert max(res) <= tol
            assert res[0] / res[1] >= 3.5


def test_criterion_7_tensors():
    rng = np.random.default_rng(7)
    for i in range(50):
        d, n = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        T = symmetrize(rng.standard_normal((d,) * n) + 1j * rng.standard_normal((d,) * n)).entries
        R = reconstruct(sym_rank1_decompose(T, seed=i), d, n)
        assert np.max(np.abs(R - T)) <= 1e-8 * np.max(np.abs(T))
    A = rng.standard_normal((3, 3))
    A = A + A.T
    w, Q = np.linalg.eigh(A)
    assert np.allclose(reconstruct([(w[j], Q[:, j]) for j in range(3)], 3, 2), A, atol=1e-12)
    R = reconstruct(sym_rank1_decompose(A), 3, 2)
    assert np.max(np.abs(R - A)) <= 1e-8 * np.max(np.abs(A))


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
