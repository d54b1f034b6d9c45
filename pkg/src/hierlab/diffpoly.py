"""Differential polynomials in two function slots ``u`` and ``v``.

A monomial ``c * prod_a d^a u * prod_b d^b v`` is stored as the key
``(u_orders, v_orders)`` of sorted derivative-order tuples mapped to ``c``.
All evaluation is class-diagonal: every u-slot receives the same function and
every v-slot receives the same function.
"""
from __future__ import annotations

from collections import Counter
from typing import Dict, Iterable, Mapping, Tuple

import numpy as np

from .errors import GridMismatchError
from .grid import GridFunction, _derivative_values

Key = Tuple[Tuple[int, ...], Tuple[int, ...]]

__all__ = ["DiffPoly", "DiffMonomial", "add", "mul", "d_dx", "evaluate", "euler_derivative"]


def _key(u_orders: Iterable[int], v_orders: Iterable[int]) -> Key:
    u = tuple(sorted(int(a) for a in u_orders))
    v = tuple(sorted(int(b) for b in v_orders))
    if any(a < 0 for a in u + v):
        raise ValueError("derivative orders must be nonnegative")
    return u, v


class DiffMonomial:
    """A single term; mostly a convenience view over a DiffPoly entry."""

    __slots__ = ("coeff", "u_orders", "v_orders")

    def __init__(self, coeff: complex, u_orders=(), v_orders=()):
        self.u_orders, self.v_orders = _key(u_orders, v_orders)
        self.coeff = complex(coeff)

    @property
    def k(self) -> int:
        return len(self.u_orders)

    @property
    def j(self) -> int:
        return len(self.v_orders)

    @property
    def order(self) -> int:
        return sum(self.u_orders) + sum(self.v_orders)

    def __repr__(self):
        return f"DiffMonomial({self.coeff!r}, u={self.u_orders}, v={self.v_orders})"


class DiffPoly:
    """Immutable sparse differential polynomial with complex coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Key, complex] | None = None):
        merged: Dict[Key, complex] = {}
        for (u, v), c in (terms or {}).items():
            key = _key(u, v)
            merged[key] = merged.get(key, 0j) + complex(c)
        self._terms = {k: c for k, c in merged.items() if c != 0}
        self._hash = None

    # -- constructors -------------------------------------------------
    @classmethod
    def u(cls, order: int = 0, coeff: complex = 1) -> "DiffPoly":
        return cls({((order,), ()): coeff})

    @classmethod
    def v(cls, order: int = 0, coeff: complex = 1) -> "DiffPoly":
        return cls({((), (order,)): coeff})

    @classmethod
    def constant(cls, c: complex) -> "DiffPoly":
        return cls({((), ()): c})

    @classmethod
    def monomial(cls, coeff: complex, u_orders=(), v_orders=()) -> "DiffPoly":
        return cls({(tuple(u_orders), tuple(v_orders)): coeff})

    # -- mapping-ish access -------------------------------------------
    @property
    def terms(self) -> Dict[Key, complex]:
        return dict(self._terms)

    def monomials(self):
        return [DiffMonomial(c, u, v) for (u, v), c in sorted(self._terms.items())]

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __iter__(self):
        return iter(sorted(self._terms.items()))

    def coeff(self, u_orders=(), v_orders=()) -> complex:
        return self._terms.get(_key(u_orders, v_orders), 0j)

    def __eq__(self, other):
        if not isinstance(other, DiffPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self):
        if not self._terms:
            return "DiffPoly(0)"
        parts = []
        for (u, v), c in sorted(self._terms.items()):
            factors = [f"d{a}u" if a else "u" for a in u] + [f"d{b}v" if b else "v" for b in v]
            parts.append(f"({c:g})" + ("*" + "*".join(factors) if factors else ""))
        return "DiffPoly(" + " + ".join(parts) + ")"

    # -- algebra ------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, DiffPoly):
            return NotImplemented
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0j) + c
        return DiffPoly._from_canonical(out)

    def __neg__(self):
        return DiffPoly._from_canonical({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, DiffPoly):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return DiffPoly._from_canonical({k: c * other for k, c in self._terms.items()})
        if not isinstance(other, DiffPoly):
            return NotImplemented
        out: Dict[Key, complex] = {}
        for (u1, v1), c1 in self._terms.items():
            for (u2, v2), c2 in other._terms.items():
                k = (tuple(sorted(u1 + u2)), tuple(sorted(v1 + v2)))
                out[k] = out.get(k, 0j) + c1 * c2
        return DiffPoly._from_canonical(out)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self * other
        return NotImplemented

    @classmethod
    def _from_canonical(cls, terms: Dict[Key, complex]) -> "DiffPoly":
        obj = cls.__new__(cls)
        obj._terms = {k: c for k, c in terms.items() if c != 0}
        obj._hash = None
        return obj

    # -- calculus -----------------------------------------------------
    def d_dx(self) -> "DiffPoly":
        out: Dict[Key, complex] = {}
        for (u, v), c in self._terms.items():
            for i, a in enumerate(u):
                k = (tuple(sorted(u[:i] + (a + 1,) + u[i + 1:])), v)
                out[k] = out.get(k, 0j) + c
            for i, b in enumerate(v):
                k = (u, tuple(sorted(v[:i] + (b + 1,) + v[i + 1:])))
                out[k] = out.get(k, 0j) + c
        return DiffPoly._from_canonical(out)

    def euler_derivative(self, cls: str) -> "DiffPoly":
        """Variational derivative with respect to the u- or v-class.

        ``sum over slots of the class of (-d)^a applied to the cofactor``.
        """
        if cls not in ("u", "v"):
            raise ValueError("class must be 'u' or 'v'")
        # group cofactors by the derivative order they get hit with
        by_order: Dict[int, Dict[Key, complex]] = {}
        for (u, v), c in self._terms.items():
            slots = u if cls == "u" else v
            for a, mult in Counter(slots).items():
                rest = list(slots)
                rest.remove(a)
                key = (tuple(rest), v) if cls == "u" else (u, tuple(rest))
                bucket = by_order.setdefault(a, {})
                bucket[key] = bucket.get(key, 0j) + c * mult
        out = DiffPoly()
        for a, terms in by_order.items():
            p = DiffPoly._from_canonical(terms)
            for _ in range(a):
                p = p.d_dx()
            out = out + (p * (-1) ** a)
        return out

    # -- bookkeeping helpers -------------------------------------------
    def degrees(self) -> set:
        """Set of (k, j) slot counts present."""
        return {(len(u), len(v)) for (u, v) in self._terms}

    def max_order(self) -> int:
        return max((max(u + v, default=0) for (u, v) in self._terms), default=0)

    def filter(self, predicate) -> "DiffPoly":
        return DiffPoly._from_canonical(
            {k: c for k, c in self._terms.items() if predicate(DiffMonomial(c, *k))})

    # -- numerics -----------------------------------------------------
    def evaluate(self, u: GridFunction, v: GridFunction) -> GridFunction:
        if u.grid != v.grid:
            raise GridMismatchError(f"{u.grid} != {v.grid}")
        grid = u.grid
        du: Dict[int, np.ndarray] = {}
        dv: Dict[int, np.ndarray] = {}

        def get(cache, vals, a):
            if a not in cache:
                cache[a] = _derivative_values(vals, grid, a)
            return cache[a]

        out = np.zeros(grid.N, dtype=complex)
        for (uo, vo), c in self._terms.items():
            term = np.full(grid.N, c, dtype=complex)
            for a in uo:
                term *= get(du, u.values, a)
            for b in vo:
                term *= get(dv, v.values, b)
            out += term
        return GridFunction(grid, out)

    def to_json(self) -> list:
        return [
            {"coeff_re": c.real, "coeff_im": c.imag, "u_orders": list(u), "v_orders": list(v)}
            for (u, v), c in sorted(self._terms.items())
        ]

    @classmethod
    def from_json(cls, items: list) -> "DiffPoly":
        return cls({(tuple(t["u_orders"]), tuple(t["v_orders"])):
                    complex(t["coeff_re"], t["coeff_im"]) for t in items})


def add(P: DiffPoly, Q: DiffPoly) -> DiffPoly:
    return P + Q


def mul(P: DiffPoly, Q: DiffPoly) -> DiffPoly:
    return P * Q


def d_dx(P: DiffPoly) -> DiffPoly:
    return P.d_dx()


def evaluate(P: DiffPoly, u: GridFunction, v: GridFunction) -> GridFunction:
    return P.evaluate(u, v)


def euler_derivative(P: DiffPoly, cls: str) -> DiffPoly:
    return P.euler_derivative(cls)
