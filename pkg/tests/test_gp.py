import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hierlab.errors import ToleranceError
from hierlab.flows import evolve, rhs
from hierlab.gp import (SymTensor, contract_minus, contract_plus, factorized_energy, factorized_kernel,
                        gp3_residual, gp4_residual, mixed_energy, reconstruct, sym_rank1_decompose,
                        symmetrize, w3_spot_check, w4_spot_check, xhn_factorized_residual, xhn_kernel,
                        xhn_kernel_from_table)
from hierlab.grid import PeriodicGrid, integrate, l2_norm, plane_wave, random_band_limited
from hierlab.hierarchy import invariant


@pytest.fixture
def small():
    return PeriodicGrid(np.pi, 32)


def test_kernel_examples(small):
    phi = plane_wave(small, 0.5, 1)
    g1 = factorized_kernel(phi, 1)
    assert g1.samples.shape == (32, 32)
    assert np.allclose(g1.samples, np.outer(phi.values, phi.values.conj()))
    assert g1.trace() == pytest.approx(l2_norm(phi) ** 2)
    g2 = factorized_kernel(phi, 2)
    assert g2.samples.shape == (32,) * 4
    assert g2.trace() == pytest.approx(l2_norm(phi) ** 4)
    assert g2.adjoint_defect() <= 1e-15 and g2.bosonic_defect() <= 1e-15
    with pytest.raises(ValueError):
        factorized_kernel(phi, 3)


def test_contractions(small):
    phi = random_band_limited(small, 3, 0)
    v = phi.values
    g2 = factorized_kernel(phi, 2).samples
    dens = np.abs(v) ** 2
    assert np.allclose(contract_plus(g2), np.outer(dens * v, v.conj()))
    assert np.allclose(contract_minus(g2), np.outer(v, dens * v.conj()))


def test_energies(table, rand):
    phi = rand(1, cutoff=6)
    for n in range(1, 9):
        e = factorized_energy(table, n, phi)
        assert e == pytest.approx(invariant(table, n, phi).real, rel=1e-10, abs=1e-12)
        assert mixed_energy(table, n, phi, phi) == pytest.approx(e, rel=1e-10, abs=1e-12)
    mixed_energy(table, 4, phi, rand(2, cutoff=6))


def test_spot_checks(table, rand):
    phi = rand(3, cutoff=3, amplitude=0.5)
    a, b = w3_spot_check(table, phi)
    assert abs(a - b) <= 1e-10 * max(1.0, abs(b))
    a, b = w4_spot_check(table, phi)
    assert abs(a - b) <= 1e-10 * max(1.0, abs(b))


def test_xhn_examples(small):
    phi = plane_wave(small, 0.5, 1)
    zero = np.zeros(32, dtype=complex)
    assert np.max(np.abs(xhn_kernel(phi, zero, 1))) == 0
    slot = phi.values * 1j
    K = xhn_kernel(phi, slot, 1)
    assert np.allclose(K, 1j * np.outer(phi.values, phi.values.conj()) - 1j * np.outer(phi.values, phi.values.conj()))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("k", [1, 2])
def test_xhn_factorized(table, n, k):
    g = PeriodicGrid(np.pi, 32)
    phi = random_band_limited(g, 3, 4, amplitude=0.5)
    assert xhn_factorized_residual(table, n, k, phi, rhs(table, n, phi)) <= 1e-10
    direct = xhn_kernel(phi, rhs(table, n, phi).values, k)
    assert np.max(np.abs(xhn_kernel_from_table(table, n, k, phi) - direct)) <= 1e-10


def test_gp3_and_gp4(table, rand):
    phi = rand(5, cutoff=3, amplitude=0.5)
    tr3 = evolve(table, 3, phi, 1e-3, 4, "strang", 1)
    assert max(v for _, v in gp3_residual(tr3, sub_N=32)) <= 1e-3
    tr4 = evolve(table, 4, phi, 2.5e-4, 4, "ifrk4", 1)
    assert max(v for _, v in gp4_residual(tr4, sub_N=32)) <= 1e-2
    with pytest.raises(ValueError):
        gp3_residual(tr4)
    with pytest.raises(ValueError):
        gp4_residual(tr3)
    with pytest.raises(ValueError):
        gp3_residual(tr3, k=2)


def test_symmetrize_examples():
    T = np.array([[0, 1], [0, 0]])
    assert np.allclose(symmetrize(T).entries, [[0, 0.5], [0.5, 0]])
    S = symmetrize(np.arange(8).reshape(2, 2, 2))
    assert S.d == 2 and S.n == 3
    with pytest.raises(ValueError):
        symmetrize(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        symmetrize(np.zeros((11,) * 4))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10 ** 6), d=st.integers(1, 3), n=st.integers(1, 4))
def test_symmetrize_idempotent_and_decompose(seed, d, n):
    rng = np.random.default_rng(seed)
    T = rng.standard_normal((d,) * n) + 1j * rng.standard_normal((d,) * n)
    S = symmetrize(T)
    assert np.allclose(symmetrize(S).entries, S.entries, atol=1e-13)
    terms = sym_rank1_decompose(S, seed)
    R = reconstruct(terms, d, n)
    assert np.max(np.abs(R - S.entries)) <= 1e-8 * max(1.0, np.max(np.abs(S.entries)))


def test_polarization_identity():
    # 4 x1 x2 = (x1 + x2)^2 - (x1 - x2)^2
    T = reconstruct([(1, [1, 1]), (-1, [1, -1])], 2, 2)
    assert np.allclose(T, [[0, 2], [2, 0]])
    R = reconstruct(sym_rank1_decompose(T), 2, 2)
    assert np.allclose(R, T, atol=1e-10)


def test_matrix_case_matches_eigendecomposition():
    rng = np.random.default_rng(11)
    A = rng.standard_normal((3, 3))
    A = A + A.T
    w, V = np.linalg.eigh(A)
    oracle = reconstruct([(w[i], V[:, i]) for i in range(3)], 3, 2)
    assert np.allclose(oracle, A)
    assert np.allclose(reconstruct(sym_rank1_decompose(SymTensor(A), 3), 3, 2), A, atol=1e-10)


def test_decompose_rejects_bad_input():
    with pytest.raises(ValueError):
        sym_rank1_decompose(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        sym_rank1_decompose(np.zeros((5, 5)))
    with pytest.raises(ToleranceError):
        sym_rank1_decompose(np.eye(3), cond_limit=1.0)
