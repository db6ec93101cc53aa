"""Gram matrices of damped eigenfunctions, frame bounds and basis expansions.

For damped eigenvalues ``z_n = -w + i t_n`` the raw eigenfunction has
squared energy norm ``|z_n|^2 (1 + K) / w``, where

    K = ((3-a)/4)^2 (e^{2wL} - 1) + ((1+a)/4)^2 (1 - e^{-2wL}),

and two normalized eigenfunctions have inner product

    <Psi_n, Psi_m> = C_n C_m (1 + K) z_n conj(z_m) / (w - i (t_n - t_m) / 2).

Both hold in either damped regime.  The matrix entries used everywhere are
computed by quadrature; the closed forms serve as cross-checks.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .core import AlphaLike, Regime, StateVector, TadpoleGeometry, as_damping, inner_product_H, norm_H
from .errors import ConditioningError, ParameterError, ValidationError
from .spectrum import (
    Eigenfunction,
    damped_eigenvalue,
    default_geometry,
    eigenfunction_damped,
    eigenfunction_embedded,
    spectral_abscissa,
)

log = logging.getLogger(__name__)

__all__ = [
    "k_constant",
    "normalization_closed_form",
    "normalization_alt_form",
    "gram_closed_form",
    "gram_alt_form",
    "gram_entry",
    "GramMatrix",
    "gram_matrix",
    "jacobi_eigenvalues",
    "frame_bounds",
    "Expansion",
    "expand_in_basis",
    "project_onto_Hp",
    "embedded_basis",
]

DEFAULT_ORDER = 16
DEFAULT_H = 1e-3


def _decay(alpha: AlphaLike, L: float) -> float:
    s = spectral_abscissa(alpha, L)
    if s is None:
        raise ParameterError(f"alpha = {as_damping(alpha).alpha} has no damped spectrum")
    return -s


def k_constant(alpha: AlphaLike, L: float, *, allow_high: bool = False) -> float:
    """The loop-energy constant ``K``.

    Defined for ``1 < alpha < 3``; ``allow_high=True`` also accepts
    ``alpha > 3``, where the same expression holds with ``w = -Re z``.
    """
    a = as_damping(alpha)
    if a.regime is not Regime.LOW and not (allow_high and a.regime is Regime.HIGH):
        raise ParameterError(f"K is defined for 1 < alpha < 3 (got {a.alpha})")
    w = _decay(a, L)
    p = (3.0 - a.alpha) / 4.0
    q = (1.0 + a.alpha) / 4.0
    return p * p * math.expm1(2.0 * w * L) - q * q * math.expm1(-2.0 * w * L)


def normalization_closed_form(n: int, alpha: AlphaLike, L: float) -> float:
    """``C_n = (|z_n|^2 (1 + K) / w)^{-1/2}``."""
    w = _decay(alpha, L)
    z = damped_eigenvalue(alpha, L, n)
    K = k_constant(alpha, L, allow_high=True)
    return 1.0 / math.sqrt(abs(z) ** 2 * (1.0 + K) / w)


def normalization_alt_form(n: int, alpha: AlphaLike, L: float) -> float:
    """The alternative ``C_n^{-2} = (w + (2 pi / (L w))^2 n^2)(1 + K)``, kept for comparison."""
    w = _decay(alpha, L)
    nu = 2.0 * math.pi / L
    K = k_constant(alpha, L)
    return 1.0 / math.sqrt((w + (nu / w) ** 2 * n * n) * (1.0 + K))


def gram_closed_form(n: int, m: int, alpha: AlphaLike, L: float) -> complex:
    w = _decay(alpha, L)
    zn = damped_eigenvalue(alpha, L, n)
    zm = damped_eigenvalue(alpha, L, m)
    K = k_constant(alpha, L, allow_high=True)
    cn = normalization_closed_form(n, alpha, L)
    cm = normalization_closed_form(m, alpha, L)
    return cn * cm * (1.0 + K) * zn * zm.conjugate() / (w - 0.5j * (zn.imag - zm.imag))


def gram_alt_form(n: int, m: int, alpha: AlphaLike, L: float) -> complex:
    """Alternative two-case expression (with its own normalization), for diagnostics only."""
    a = as_damping(alpha).alpha
    w = _decay(alpha, L)
    nu = 2.0 * math.pi / L
    K = k_constant(alpha, L)
    zn = damped_eigenvalue(alpha, L, n)
    zm = damped_eigenvalue(alpha, L, m)
    cn = normalization_alt_form(n, alpha, L)
    cm = normalization_alt_form(m, alpha, L)
    if n != -m:
        return (1.0 + K) * cn * cm * zn * zm.conjugate() / (w + 1j * (n - m) * nu)
    return (1.0 + K - (1.0 + a) * (3.0 - a) * L / 8.0) * cn * cn * abs(zn) ** 2 / (w + 1j * nu)


def _geometry_for(alpha: AlphaLike, L: float, geometry: Optional[TadpoleGeometry], h: float) -> TadpoleGeometry:
    return default_geometry(alpha, L, h) if geometry is None else geometry


def gram_entry(
    n: int,
    m: int,
    alpha: AlphaLike,
    L: float,
    geometry: Optional[TadpoleGeometry] = None,
    *,
    h: float = DEFAULT_H,
) -> complex:
    """``<Psi_n, Psi_m>_H`` by quadrature.

    In the low regime the alternative closed form is also evaluated and its
    deviation from the quadrature value logged.
    """
    a = as_damping(alpha)
    if not a.has_damped_spectrum:
        raise ParameterError(f"alpha = {a.alpha} has no damped spectrum")
    geo = _geometry_for(a, L, geometry, h)
    psi_n = eigenfunction_damped(n, a, L, geo)
    psi_m = eigenfunction_damped(m, a, L, geo)
    val = inner_product_H(psi_n.state, psi_m.state)
    if a.regime is Regime.LOW:
        dev = abs(val - gram_alt_form(n, m, a, L))
        log.info("gram(%d, %d): quadrature %s, alternative closed form deviates by %.3e", n, m, val, dev)
    return val


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Gram matrix over indices ``-N..N``; ``entries[i, j] = <Psi_{n_i}, Psi_{n_j}>``."""

    order: int
    entries: np.ndarray
    alpha: float
    L: float
    K_const: float

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.order, self.order + 1)


def _energy_matrix(a_states: Sequence[StateVector], b_states: Sequence[StateVector]) -> np.ndarray:
    """``M[i, j] = <a_i, b_j>_H`` for states on one geometry, vectorized."""
    geo = a_states[0].geometry
    w1 = np.full(geo.halfline_points, geo.h1)
    w1[0] = w1[-1] = 0.5 * geo.h1
    w2 = np.full(geo.loop_points, geo.h2)
    w2[0] = w2[-1] = 0.5 * geo.h2

    def stack(states):
        rows1, rows2 = [], []
        for s in states:
            d1, d2 = s.u.derivative()
            rows1.append(np.concatenate([d1, s.v.halfline]))
            rows2.append(np.concatenate([d2, s.v.loop]))
        return np.array(rows1), np.array(rows2)

    a1, a2 = stack(a_states)
    b1, b2 = stack(b_states)
    W1 = np.concatenate([w1, w1])
    W2 = np.concatenate([w2, w2])
    return (a1 * W1) @ b1.conj().T + (a2 * W2) @ b2.conj().T


def damped_basis(alpha: AlphaLike, L: float, N: int, geometry: TadpoleGeometry) -> list[Eigenfunction]:
    return [eigenfunction_damped(n, alpha, L, geometry) for n in range(-N, N + 1)]


def embedded_basis(L: float, N: int, geometry: TadpoleGeometry) -> list[Eigenfunction]:
    return [eigenfunction_embedded(m, L, geometry) for m in range(-N, N + 1) if m != 0]


def gram_matrix(
    alpha: AlphaLike,
    L: float,
    N: int = DEFAULT_ORDER,
    geometry: Optional[TadpoleGeometry] = None,
    *,
    h: float = DEFAULT_H,
) -> GramMatrix:
    """Quadrature Gram matrix of the normalized damped eigenfunctions ``|n| <= N``."""
    a = as_damping(alpha)
    if not a.has_damped_spectrum:
        raise ParameterError(f"alpha = {a.alpha} has no damped spectrum")
    if N < 0:
        raise ParameterError("order must be >= 0")
    geo = _geometry_for(a, L, geometry, h)
    states = [e.state for e in damped_basis(a, L, N, geo)]
    G = _energy_matrix(states, states)
    return GramMatrix(N, G, a.alpha, L, k_constant(a, L, allow_high=True))


# -- eigenvalues -----------------------------------------------------------


def jacobi_eigenvalues(S: np.ndarray, *, tol: float = 1e-14, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations, ascending."""
    A = np.array(S, dtype=float)
    n = A.shape[0]
    if n == 1:
        return A.reshape(1).copy()
    scale = max(np.linalg.norm(A), 1e-300)
    for _ in range(max_sweeps):
        off = math.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # rotate columns p, q then rows p, q
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
    return np.sort(np.diag(A))


def hermitian_eigenvalues(H: np.ndarray) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix via the real embedding ``[[Re, -Im], [Im, Re]]``.

    Every eigenvalue appears twice in the embedding; one copy of each pair is kept.
    """
    Re, Im = H.real, H.imag
    S = np.block([[Re, -Im], [Im, Re]])
    ev = jacobi_eigenvalues(0.5 * (S + S.T))
    return ev[::2]


def _require_hermitian(M: np.ndarray, tol: float = 1e-12):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError("Gram matrix must be square")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.conj().T)) > tol * scale:
        raise ValidationError("Gram matrix is not Hermitian")


def frame_bounds(G) -> tuple[float, float]:
    """``(lambda_min, lambda_max)`` of a Hermitian Gram matrix."""
    M = G.entries if isinstance(G, GramMatrix) else np.asarray(G, dtype=complex)
    _require_hermitian(M)
    ev = hermitian_eigenvalues(M)
    return float(ev[0]), float(ev[-1])


# -- expansions ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Expansion:
    indices: np.ndarray
    coefficients: np.ndarray
    residual: float

    def coefficient(self, n: int) -> complex:
        return complex(self.coefficients[int(np.flatnonzero(self.indices == n)[0])])


def expand_in_basis(state: StateVector, alpha: AlphaLike, L: float, N: int = DEFAULT_ORDER) -> Expansion:
    """Least-squares coefficients of ``state`` on ``Psi_{-N..N}`` in the energy norm.

    Solves the normal equations ``G^T c = b`` with ``b_n = <state, Psi_n>``.
    """
    a = as_damping(alpha)
    geo = state.geometry
    basis = [e.state for e in damped_basis(a, L, N, geo)]
    G = _energy_matrix(basis, basis)
    b = _energy_matrix([state], basis)[0]
    lam = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
    if lam[0] <= 1e-12 * lam[-1]:
        raise ConditioningError(f"Gram matrix is numerically singular (lambda_min = {lam[0]:.3e})", float(lam[0]))
    try:
        c = scipy.linalg.cho_solve(scipy.linalg.cho_factor(G.T), b)
    except np.linalg.LinAlgError as err:
        raise ConditioningError(f"Gram solve failed: {err}", float(lam[0])) from err
    approx = basis[0] * c[0]
    for ci, s in zip(c[1:], basis[1:]):
        approx = approx + ci * s
    return Expansion(np.arange(-N, N + 1), c, norm_H(state - approx))


def project_onto_Hp(state: StateVector, L: float, N_embedded: int) -> StateVector:
    """Orthogonal projection onto the loop sine modes with ``0 < |m| <= N_embedded``."""
    geo = state.geometry
    if N_embedded < 1:
        return StateVector.zeros(geo)
    basis = [e.state for e in embedded_basis(L, N_embedded, geo)]
    coeffs = _energy_matrix([state], basis)[0]
    out = StateVector.zeros(geo)
    for c, s in zip(coeffs, basis):
        out = out + c * s
    return out
