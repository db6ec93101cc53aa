"""Point spectrum of the damped generator on the tadpole.

Embedded eigenvalues ``2 pi i n / L`` (``n != 0``) carry loop sine modes that
vanish at the vertex.  Damped eigenvalues solve ``e^{zL} = (3-a)/(1+a)`` and
exist only for ``a in (1, 3)`` or ``a > 3``; they share one real part, the
spectral abscissa.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import beta as beta_fn

from .core import (
    AlphaLike,
    GraphFunction,
    Regime,
    StateVector,
    TadpoleGeometry,
    apply_generator,
    as_damping,
    inner_product_H,
    norm_H,
)
from .errors import NoDampedSpectrumError, ParameterError, TruncationError
from .roots import Rectangle, find_zeros

__all__ = [
    "Kind",
    "Eigenvalue",
    "Eigenfunction",
    "Rectangle",
    "embedded_eigenvalues",
    "damped_eigenvalue",
    "damped_eigenvalues",
    "spectral_abscissa",
    "char_matrix_minus",
    "char_matrix_plus",
    "char_adjugate_minus",
    "char_det_minus",
    "char_det_plus",
    "find_roots",
    "default_halfline_length",
    "default_geometry",
    "eigenfunction_embedded",
    "eigenfunction_damped",
    "weyl_quasimode",
    "WeylQuasimode",
]


class Kind(enum.Enum):
    EMBEDDED = "embedded"
    DAMPED = "damped"


@dataclass(frozen=True)
class Eigenvalue:
    z: complex
    kind: Kind
    n: int


@dataclass(frozen=True, eq=False)
class Eigenfunction:
    """Normalized eigenvector; ``normalization`` is the factor applied to the raw formula."""

    eigenvalue: Eigenvalue
    state: StateVector
    normalization: float
    alpha: float

    @property
    def z(self) -> complex:
        return self.eigenvalue.z


def _check_length(L: float):
    if not (isinstance(L, (int, float, np.floating, np.integer)) and L > 0 and math.isfinite(L)):
        raise ParameterError(f"loop length must be finite and > 0, got {L!r}")


# -- closed forms ----------------------------------------------------------


def embedded_eigenvalues(L: float, n_min: int, n_max: int) -> list[Eigenvalue]:
    _check_length(L)
    if n_min > n_max:
        raise ParameterError("empty index range")
    return [
        Eigenvalue(complex(0.0, 2.0 * math.pi * n / L), Kind.EMBEDDED, n)
        for n in range(n_min, n_max + 1)
        if n != 0
    ]


def _damped_real_part(alpha: float, L: float) -> float:
    return math.log(abs(3.0 - alpha) / (1.0 + alpha)) / L


def damped_eigenvalue(alpha: AlphaLike, L: float, n: int) -> complex:
    a = as_damping(alpha)
    _check_length(L)
    if a.regime is Regime.NO_DAMPED_SPECTRUM:
        raise NoDampedSpectrumError(f"alpha = {a.alpha} has no damped eigenvalues")
    re = _damped_real_part(a.alpha, L)
    if a.regime is Regime.LOW:
        return complex(re, 2.0 * math.pi * n / L)
    return complex(re, (2 * n + 1) * math.pi / L)


def damped_eigenvalues(alpha: AlphaLike, L: float, n_min: int, n_max: int) -> list[Eigenvalue]:
    a = as_damping(alpha)
    _check_length(L)
    if n_min > n_max:
        raise ParameterError("empty index range")
    if not a.has_damped_spectrum:
        return []
    return [Eigenvalue(damped_eigenvalue(a, L, n), Kind.DAMPED, n) for n in range(n_min, n_max + 1)]


def spectral_abscissa(alpha: AlphaLike, L: float) -> Optional[float]:
    """Common real part of the damped eigenvalues, or ``None`` if there are none."""
    a = as_damping(alpha)
    _check_length(L)
    if not a.has_damped_spectrum:
        return None
    return _damped_real_part(a.alpha, L)


# -- characteristic determinants -------------------------------------------


def char_matrix_minus(z, alpha: AlphaLike, L: float) -> np.ndarray:
    """Coefficient matrix of the left half-plane eigen/resolvent system.

    Unknowns are the amplitudes of ``e^{zx}`` on the half-line and of
    ``e^{zx}``, ``e^{-zx}`` on the loop.  Accepts arrays; the matrix axes are last.
    """
    a = as_damping(alpha).alpha
    z = np.asarray(z, dtype=complex)
    ep = np.exp(z * L)
    em = np.exp(-z * L)
    one = np.ones_like(ep)
    return np.stack(
        [
            np.stack([one, -one, -one], -1),
            np.stack([one, -ep, -em], -1),
            np.stack([(1.0 - a) * one, 1.0 - ep, em - 1.0], -1),
        ],
        -2,
    )


def char_matrix_plus(z, alpha: AlphaLike, L: float) -> np.ndarray:
    """Matrix of the right half-plane system (half-line amplitude of ``e^{-zx}``)."""
    a = as_damping(alpha).alpha
    z = np.asarray(z, dtype=complex)
    ep = np.exp(z * L)
    em = np.exp(-z * L)
    one = np.ones_like(ep)
    return np.stack(
        [
            np.stack([one, one, -one], -1),
            np.stack([em, ep, -one], -1),
            np.stack([em - 1.0, 1.0 - ep, -(1.0 + a) * one], -1),
        ],
        -2,
    )


def char_adjugate_minus(z: complex, alpha: AlphaLike, L: float) -> np.ndarray:
    """Closed-form adjugate of :func:`char_matrix_minus` (inverse times determinant)."""
    a = as_damping(alpha).alpha
    ep = complex(np.exp(z * L))
    em = complex(np.exp(-z * L))
    return np.array(
        [
            [ep + em - 2.0, ep + em - 2.0, em - ep],
            [1.0 - em * (2.0 - a), em - a, em - 1.0],
            [1.0 - a * ep, ep + a - 2.0, 1.0 - ep],
        ],
        dtype=complex,
    )


def _det3(m: np.ndarray) -> np.ndarray:
    """Cofactor expansion along the first row."""
    return (
        m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1])
        - m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 0])
        + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0])
    )


def _scalar_or_array(x):
    x = np.asarray(x)
    return complex(x) if x.ndim == 0 else x


def char_det_minus(z, alpha: AlphaLike, L: float, *, form: str = "factored"):
    """Left half-plane characteristic function.

    ``form="factored"`` gives ``(e^{zL}-1)((a+1)e^{zL}-(3-a))``;
    ``form="matrix"`` the determinant of :func:`char_matrix_minus`, which
    equals ``e^{-zL}`` times the factored form.
    """
    a = as_damping(alpha).alpha
    _check_length(L)
    z = np.asarray(z, dtype=complex)
    if form == "factored":
        ep = np.exp(z * L)
        return _scalar_or_array((ep - 1.0) * ((a + 1.0) * ep - (3.0 - a)))
    if form == "matrix":
        return _scalar_or_array(_det3(char_matrix_minus(z, a, L)))
    raise ValueError(f"unknown form {form!r}")


def char_det_plus(z, alpha: AlphaLike, L: float, *, form: str = "factored"):
    """Right half-plane characteristic function.

    ``form="factored"`` gives ``(e^{zL}-1)((a+3)e^{zL}-(1-a))``; the matrix
    determinant equals ``-e^{-zL}`` times it.
    """
    a = as_damping(alpha).alpha
    _check_length(L)
    z = np.asarray(z, dtype=complex)
    if form == "factored":
        ep = np.exp(z * L)
        return _scalar_or_array((ep - 1.0) * ((a + 3.0) * ep - (1.0 - a)))
    if form == "matrix":
        return _scalar_or_array(_det3(char_matrix_plus(z, a, L)))
    raise ValueError(f"unknown form {form!r}")


def _secular(alpha: float, L: float):
    """``det M(z) = (a+1)e^{zL} + (3-a)e^{-zL} - 4`` and its z-derivative."""

    def f(z):
        ep = np.exp(z * L)
        return (alpha + 1.0) * ep + (3.0 - alpha) / ep - 4.0

    def df(z):
        ep = np.exp(z * L)
        return L * ((alpha + 1.0) * ep - (3.0 - alpha) / ep)

    return f, df


# jitter factors tried when a padded contour passes too close to a zero
_PAD_FACTORS = (1.0, 0.618, 1.37, 0.29)


def find_roots(alpha: AlphaLike, L: float, region: Rectangle, tol: float = 1e-12) -> list[complex]:
    """Zeros of the left half-plane determinant inside the closed ``region``.

    The region must lie in ``Re z < 0``.  The contour is pushed slightly
    outward so zeros on the boundary are counted, then results are filtered
    back to the closed region.
    """
    a = as_damping(alpha).alpha
    _check_length(L)
    if region.re_max >= 0:
        raise ParameterError("region must lie in the open left half-plane (re_max < 0)")
    f, df = _secular(a, L)
    # zeros are spaced 2 pi / L apart vertically and share one real part,
    # so a pad well below that spacing cannot pull in an outside zero
    base_pad = min(0.05 * math.pi / L, 0.25 * abs(region.re_max), 0.05 * region.width)
    last_err = None
    for k in _PAD_FACTORS:
        box = region.padded(base_pad * k)
        try:
            zs = find_zeros(f, df, box, tol=tol)
        except ValueError as err:
            last_err = err
            continue
        slack = 1e-9 * max(1.0, abs(region.im_min), abs(region.im_max))
        return [w for w in zs if region.contains(w, slack)]
    raise ValueError(f"argument principle failed for every contour placement: {last_err}")


# -- eigenfunctions --------------------------------------------------------


def _cexp(z: complex, x: np.ndarray) -> np.ndarray:
    """``exp(z x)`` built so that ``_cexp(conj z, x) == conj(_cexp(z, x))`` bitwise."""
    mag = np.exp(z.real * x)
    return mag * np.cos(z.imag * x) + 1j * (mag * np.sin(z.imag * x))


def default_halfline_length(alpha: AlphaLike, L: float, tail: float = 1e-12) -> float:
    """Truncation ``R_max = max(2L, ln(tail) / (2 Re z))``.

    With this choice the damped modes keep a tail mass ``e^{2 Re z R_max}``
    below ``tail``.  Without damped spectrum the minimum ``2L`` is used.
    """
    s = spectral_abscissa(alpha, L)
    if s is None:
        return 2.0 * L
    return max(2.0 * L, math.log(tail) / (2.0 * s))


def default_geometry(alpha: AlphaLike, L: float, h: float, tail: float = 1e-12) -> TadpoleGeometry:
    return TadpoleGeometry.uniform(L, default_halfline_length(alpha, L, tail), h)


def _normalized(ev: Eigenvalue, u: GraphFunction, alpha: float) -> Eigenfunction:
    z = ev.z
    raw = StateVector(u, z * u)
    norm = norm_H(raw)
    c = 1.0 / norm
    return Eigenfunction(ev, c * raw, c, alpha)


def eigenfunction_embedded(n: int, L: float, geometry: TadpoleGeometry, alpha: AlphaLike = 0.0) -> Eigenfunction:
    """Loop sine mode ``(0, sin(2 pi n x / L))`` with velocity ``z_n u``."""
    _check_length(L)
    if n == 0:
        raise ParameterError("embedded eigenfunctions need n != 0")
    if abs(geometry.L - L) > 1e-12 * L:
        raise ParameterError("geometry loop length differs from L")
    a = as_damping(alpha).alpha
    k = 2.0 * math.pi * n / L
    x1, x2 = geometry.x1, geometry.x2
    u = GraphFunction(
        geometry,
        np.zeros_like(x1),
        np.sin(k * x2),
        np.zeros_like(x1),
        k * np.cos(k * x2),
    )
    # the sine is not exactly zero at x = L in floating point
    u.loop[-1] = 0.0
    ev = Eigenvalue(complex(0.0, k), Kind.EMBEDDED, n)
    return _normalized(ev, u, a)


def eigenfunction_damped(n: int, alpha: AlphaLike, L: float, geometry: TadpoleGeometry) -> Eigenfunction:
    """``u1 = e^{zx}``, ``u2 = (3-a)/4 e^{-zx} + (1+a)/4 e^{zx}``, ``v = z u``.

    The normalization is taken from quadrature of the energy norm.
    """
    a = as_damping(alpha)
    if abs(geometry.L - L) > 1e-12 * L:
        raise ParameterError("geometry loop length differs from L")
    z = damped_eigenvalue(a, L, n)
    p = (3.0 - a.alpha) / 4.0
    q = (1.0 + a.alpha) / 4.0
    x1, x2 = geometry.x1, geometry.x2
    e1 = _cexp(z, x1)
    ep = _cexp(z, x2)
    em = _cexp(-z, x2)
    u = GraphFunction(
        geometry,
        e1,
        p * em + q * ep,
        z * e1,
        z * (q * ep - p * em),
    )
    return _normalized(Eigenvalue(z, Kind.DAMPED, n), u, a.alpha)


# -- Weyl sequence ---------------------------------------------------------

_BUMP_C = 1.0 / math.sqrt(beta_fn(9.0, 9.0))


def _bump(s: np.ndarray, order: int = 0) -> np.ndarray:
    """``c((s-1)(2-s))^4`` on ``[1, 2]``, zero elsewhere, unit L2 norm."""
    t = s - 1.0
    inside = (t > 0) & (t < 1)
    p = np.polynomial.Polynomial([0.0, 1.0, -1.0]) ** 4 * _BUMP_C  # (t(1-t))^4
    p = p.deriv(order) if order else p
    out = np.where(inside, p(t), 0.0)
    return out


@dataclass(frozen=True, eq=False)
class WeylQuasimode:
    state: StateVector
    residual: float
    norm_squared: float


def weyl_quasimode(lam: float, j: int, geometry: TadpoleGeometry, alpha: AlphaLike = 0.0) -> WeylQuasimode:
    """Approximate eigenvector for ``i lam`` supported on ``[j, 2j]`` of the half-line.

    ``u = e^{i lam x} chi(x/j)/sqrt(j)``, ``v = i lam u``.  ``residual`` is
    ``||(A - i lam) U||_H^2`` with the generator applied by finite differences.
    """
    if lam == 0:
        raise ParameterError("lambda must be nonzero")
    if j < 1:
        raise ParameterError("j must be >= 1")
    if geometry.R_max < 2 * j:
        raise TruncationError(f"need R_max >= {2 * j}, have {geometry.R_max}")
    x1 = geometry.x1
    s = x1 / j
    phase = np.exp(1j * lam * x1)
    chi = _bump(s)
    dchi = _bump(s, 1) / j
    amp = 1.0 / math.sqrt(j)
    u1 = amp * phase * chi
    du1 = amp * phase * (1j * lam * chi + dchi)
    zeros = np.zeros(geometry.loop_points, complex)
    u = GraphFunction(geometry, u1, zeros, du1, zeros)
    z = 1j * lam
    U = StateVector(u, z * u)
    AU = apply_generator(U, alpha)
    res = AU - z * U
    r2 = inner_product_H(res, res).real
    return WeylQuasimode(U, float(r2), float(inner_product_H(U, U).real))
