"""Closed-form test functions for manufactured-solution checks.

Each edge function is a finite sum of terms ``c * x**p * exp(s*x)``, so
values and derivatives of any order are exact.  ``random_domain_state``
draws states that satisfy vertex continuity of ``u`` and ``v`` and the
damped transmission condition exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import AlphaLike, GraphFunction, StateVector, TadpoleGeometry, as_damping


@dataclass(frozen=True)
class ExpSum:
    """``f(x) = sum_j c_j x**p_j exp(s_j x)``."""

    terms: tuple[tuple[complex, int, complex], ...] = ()

    def __call__(self, x, order: int = 0):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for c, p, s in self.terms:
            e = np.exp(s * x)
            # Leibniz rule for d^k [x^p e^{sx}]
            for j in range(min(order, p) + 1):
                falling = math.perm(p, j)
                xp = x ** (p - j) if p - j > 0 else 1.0
                out = out + c * math.comb(order, j) * falling * xp * s ** (order - j) * e
        return out

    def __add__(self, other: "ExpSum") -> "ExpSum":
        return ExpSum(self.terms + other.terms)

    def scaled(self, k: complex) -> "ExpSum":
        return ExpSum(tuple((k * c, p, s) for c, p, s in self.terms))

    @classmethod
    def affine(cls, a: complex, b: complex) -> "ExpSum":
        return cls(((a, 0, 0j), (b, 1, 0j)))

    def derivative(self) -> "ExpSum":
        out = []
        for c, p, s in self.terms:
            if s != 0:
                out.append((c * s, p, s))
            if p > 0:
                out.append((c * p, p - 1, s))
        return ExpSum(tuple(out))


def random_expsum(rng: np.random.Generator, n_terms: int, decay: tuple[float, float] | None, freq: float) -> ExpSum:
    """Random combination; ``decay=(lo, hi)`` forces ``-hi <= Re s <= -lo``."""
    terms = []
    for _ in range(n_terms):
        c = complex(rng.normal(), rng.normal())
        if decay is None:
            re = rng.uniform(-1.0, 1.0)
        else:
            re = -rng.uniform(*decay)
        s = complex(re, rng.uniform(-freq, freq))
        terms.append((c, int(rng.integers(0, 2)), s))
    return ExpSum(tuple(terms))


def _closing_affine(f_loop: ExpSum, target: complex, L: float) -> ExpSum:
    """Affine correction making ``f_loop(0) = f_loop(L) = target``."""
    f0 = complex(f_loop(0.0))
    fL = complex(f_loop(L))
    a = target - f0
    b = (target - fL - a) / L
    return ExpSum.affine(a, b)


@dataclass(frozen=True)
class ManufacturedState:
    """A state ``(u, v)`` whose four edge functions are known in closed form."""

    u1: ExpSum
    u2: ExpSum
    v1: ExpSum
    v2: ExpSum

    def state(self, geometry: TadpoleGeometry) -> StateVector:
        x1, x2 = geometry.x1, geometry.x2
        u = GraphFunction(geometry, self.u1(x1), self.u2(x2), self.u1(x1, 1), self.u2(x2, 1))
        v = GraphFunction(geometry, self.v1(x1), self.v2(x2), self.v1(x1, 1), self.v2(x2, 1))
        return StateVector(u, v)

    def shifted_generator(self, z: complex, geometry: TadpoleGeometry) -> StateVector:
        """Exact samples of ``(A - z)(u, v) = (v - z u, u'' - z v)``."""
        x1, x2 = geometry.x1, geometry.x2
        f = GraphFunction(
            geometry,
            self.v1(x1) - z * self.u1(x1),
            self.v2(x2) - z * self.u2(x2),
            self.v1(x1, 1) - z * self.u1(x1, 1),
            self.v2(x2, 1) - z * self.u2(x2, 1),
        )
        h = GraphFunction(
            geometry,
            self.u1(x1, 2) - z * self.v1(x1),
            self.u2(x2, 2) - z * self.v2(x2),
            self.u1(x1, 3) - z * self.v1(x1, 1),
            self.u2(x2, 3) - z * self.v2(x2, 1),
        )
        return StateVector(f, h)

    def transmission_defect(self, alpha: AlphaLike, L: float) -> complex:
        a = as_damping(alpha).alpha
        return complex(self.u1(0.0, 1) + self.u2(0.0, 1) - self.u2(L, 1) - a * self.v1(0.0))


def random_vertex_function(rng: np.random.Generator, L: float, *, n_terms: int = 3,
                           decay=(1.0, 3.0), freq: float = 3.0) -> tuple[ExpSum, ExpSum]:
    """Random ``(f1, f2)`` with ``f1(0) = f2(0) = f2(L)``; ``f1`` decays."""
    f1 = random_expsum(rng, n_terms, decay, freq)
    f2 = random_expsum(rng, n_terms, None, freq)
    f2 = f2 + _closing_affine(f2, complex(f1(0.0)), L)
    return f1, f2


def random_domain_state(rng: np.random.Generator, alpha: AlphaLike, L: float, **kw) -> ManufacturedState:
    """Random smooth state in the domain of ``A_alpha``.

    Continuity is imposed with affine corrections on the loop; the
    transmission condition with a ``d * x * exp(-x)`` term on the half-line,
    which leaves ``u1(0)`` unchanged and shifts ``u1'(0)`` by ``d``.
    """
    u1, u2 = random_vertex_function(rng, L, **kw)
    v1, v2 = random_vertex_function(rng, L, **kw)
    ms = ManufacturedState(u1, u2, v1, v2)
    d = -ms.transmission_defect(alpha, L)
    return ManufacturedState(u1 + ExpSum(((d, 1, -1.0 + 0j),)), u2, v1, v2)


def superpose(parts: Sequence[tuple[complex, StateVector]]) -> StateVector:
    it = iter(parts)
    c, s = next(it)
    out = c * s
    for c, s in it:
        out = out + c * s
    return out
