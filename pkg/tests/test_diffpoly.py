import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hierlab.diffpoly import DiffMonomial, DiffPoly, add, d_dx, euler_derivative, evaluate, mul
from hierlab.errors import GridMismatchError
from hierlab.grid import PeriodicGrid, integrate, l2_norm, plane_wave, random_band_limited

U, V = DiffPoly.u, DiffPoly.v

orders = st.lists(st.integers(0, 3), max_size=3)
coeffs = st.complex_numbers(min_magnitude=0.1, max_magnitude=3, allow_nan=False, allow_infinity=False)
# small integer coefficients keep symbolic identities exact in floating point
int_coeffs = st.builds(complex, st.integers(-5, 5), st.integers(-5, 5)).filter(lambda c: c != 0)


def polys(coefficient=int_coeffs, max_terms=5):
    term = st.tuples(orders, orders, coefficient)
    return st.lists(term, min_size=1, max_size=max_terms).map(
        lambda ts: DiffPoly({(tuple(u), tuple(v)): c for u, v, c in ts}))


def test_add_examples():
    P = U() + V(1) * 2j
    assert add(P, DiffPoly()) == P
    assert add(U(), U() * -1) == DiffPoly()
    assert not add(U(), U() * -1)
    Q = add(U(), U(1, 1j))
    assert Q.terms == {((0,), ()): 1, ((1,), ()): 1j}


def test_mul_examples():
    uv = mul(U(), V())
    assert uv.terms == {((0,), (0,)): 1}
    assert mul(U(), U(1, -1j)).terms == {((0, 1), ()): -1j}


def test_d_dx_examples():
    assert d_dx(U() * V()) == U(1) * V() + U() * V(1)
    assert d_dx(DiffPoly()) == DiffPoly()
    assert d_dx(U() * U()).terms == {((0, 1), ()): 2}


def test_canonical_keys_and_monomials():
    P = DiffPoly({((2, 0), (1,)): 3, ((0, 2), (1,)): -1})
    assert P.terms == {((0, 2), (1,)): 2}
    (m,) = P.monomials()
    assert isinstance(m, DiffMonomial) and (m.k, m.j, m.order) == (2, 1, 3)
    with pytest.raises(ValueError):
        DiffPoly({((-1,), ()): 1})


def test_euler_examples():
    assert euler_derivative(V() * U(1), "u") == V(1) * -1
    assert euler_derivative(V() * U(), "v") == U()
    assert euler_derivative(U() * V(), "u") == V()
    with pytest.raises(ValueError):
        euler_derivative(U(), "w")


def test_evaluate_examples():
    g = PeriodicGrid(np.pi, 64)
    e3 = plane_wave(g, 1.0, 3)
    assert np.allclose(evaluate(U(), e3, e3.conj()).values, e3.values)
    e1 = plane_wave(g, 1.0, 1)
    assert np.allclose(evaluate(U(1, -1j), e1, e1.conj()).values, e1.values)
    A, m = 0.8 - 0.3j, 2
    phi = plane_wave(g, A, m)
    for kappa in (1, -1):
        P = U() * U() * V() * kappa
        assert np.allclose(evaluate(P, phi, phi.conj()).values, kappa * abs(A) ** 2 * phi.values)


def test_evaluate_grid_mismatch():
    with pytest.raises(GridMismatchError):
        evaluate(U(), PeriodicGrid(np.pi, 64).zeros(), PeriodicGrid(np.pi, 32).zeros())


def test_json_roundtrip():
    P = U(2) * V() * 3 + U() * (-2j)
    assert DiffPoly.from_json(P.to_json()) == P


@settings(max_examples=60, deadline=None)
@given(P=polys(), Q=polys())
def test_mul_commutes_and_leibniz(P, Q):
    assert mul(P, Q) == mul(Q, P)
    assert d_dx(mul(P, Q)) == add(mul(d_dx(P), Q), mul(P, d_dx(Q)))


@settings(max_examples=40, deadline=None)
@given(P=polys())
def test_additive_inverse(P):
    assert P + (-P) == DiffPoly()


_G = PeriodicGrid(np.pi, 256)


@settings(max_examples=30, deadline=None)
@given(P=polys(coeffs), seed=st.integers(0, 10 ** 6))
def test_null_integral(P, seed):
    u = random_band_limited(_G, 8, seed)
    v = random_band_limited(_G, 8, seed + 1)
    dens = evaluate(d_dx(P), u, v)
    assert abs(integrate(dens)) <= 1e-10 * max(1.0, l2_norm(dens))


@settings(max_examples=30, deadline=None)
@given(P=polys(coeffs, 4), seed=st.integers(0, 10 ** 6), cls=st.sampled_from(["u", "v"]))
def test_variational_consistency(P, seed, cls):
    u = random_band_limited(_G, 8, seed)
    v = random_band_limited(_G, 8, seed + 1)
    delta = random_band_limited(_G, 8, seed + 2)
    h = 1e-4

    def F(eps):
        if cls == "u":
            return integrate(evaluate(P, u + delta * eps, v))
        return integrate(evaluate(P, u, v + delta * eps))

    fd = (F(h) - F(-h)) / (2 * h)
    an = integrate(delta * evaluate(euler_derivative(P, cls), u, v))
    assert abs(fd - an) <= 1e-6 * max(1.0, abs(an))


@settings(max_examples=30, deadline=None)
@given(k=st.integers(0, 3), seed=st.integers(0, 10 ** 6), s=coeffs)
def test_homogeneity(k, seed, s):
    rng = np.random.default_rng(seed)
    P = DiffPoly()
    for _ in range(3):
        P = P + DiffPoly.monomial(complex(*rng.integers(1, 4, 2)), rng.integers(0, 3, k), rng.integers(0, 3, 2))
    u = random_band_limited(_G, 6, seed)
    v = random_band_limited(_G, 6, seed + 1)
    lhs = evaluate(P, u * s, v).values
    rhs = s ** k * evaluate(P, u, v).values
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-10 * np.max(np.abs(rhs), initial=1.0))
