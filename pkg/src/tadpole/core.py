"""Functions on the tadpole graph and the damped wave generator.

The graph is a half-line ``[0, R_max]`` (edge 1, truncated) glued at ``x = 0``
to a loop ``[0, L]`` (edge 2) whose two ends are the same vertex.  A graph
function is stored as two arrays of samples on uniform grids.  Derivatives
are taken from exact samples when a constructor supplied them, otherwise
from second-order finite differences.

The energy space is ``H = Ĥ¹ × L²`` with

    <(f, u), (g, v)>_H = sum_k  <f_k', g_k'> + <u_k, v_k>,

so an additive constant on the position component is invisible.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np

from .errors import DomainError, GeometryError, ParameterError

ANALYTIC_TOL = 1e-10


class Regime(enum.Enum):
    NO_DAMPED_SPECTRUM = "no_damped_spectrum"  # alpha in [0, 1] or alpha == 3
    LOW = "low"  # 1 < alpha < 3
    HIGH = "high"  # alpha > 3


@dataclass(frozen=True)
class DampingParameter:
    """Vertex damping coefficient ``alpha >= 0``."""

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not math.isfinite(a) or a < 0:
            raise ParameterError(f"damping must be finite and >= 0, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def regime(self) -> Regime:
        a = self.alpha
        if a <= 1.0 or a == 3.0:
            return Regime.NO_DAMPED_SPECTRUM
        if a < 3.0:
            return Regime.LOW
        return Regime.HIGH

    @property
    def has_damped_spectrum(self) -> bool:
        return self.regime is not Regime.NO_DAMPED_SPECTRUM

    def __float__(self):
        return self.alpha


AlphaLike = Union[float, int, DampingParameter]


def as_damping(alpha: AlphaLike) -> DampingParameter:
    if isinstance(alpha, DampingParameter):
        return alpha
    return DampingParameter(alpha)


@dataclass(frozen=True)
class TadpoleGeometry:
    """Loop length, half-line truncation and grid sizes.

    ``halfline_points`` samples ``[0, R_max]`` and ``loop_points`` samples
    ``[0, L]``; both grids include their end points.
    """

    loop_length: float
    halfline_truncation: float
    loop_points: int
    halfline_points: int

    def __post_init__(self):
        if not self.loop_length > 0:
            raise ParameterError("loop length must be > 0")
        if not self.halfline_truncation > 0:
            raise ParameterError("half-line truncation must be > 0")
        if self.loop_points < 4 or self.halfline_points < 4:
            # four points are needed for the one-sided second difference
            raise ParameterError("need at least 4 points per edge")
        object.__setattr__(self, "loop_points", int(self.loop_points))
        object.__setattr__(self, "halfline_points", int(self.halfline_points))

    @classmethod
    def uniform(cls, loop_length: float, halfline_truncation: float, h: float) -> "TadpoleGeometry":
        """Grids with one spacing ``<= h`` on both edges.

        ``R_max`` is rounded up to a multiple of the loop spacing so the
        explicit scheme sees a single mesh size.
        """
        if not h > 0:
            raise ParameterError("grid spacing must be > 0")
        n2 = max(4, int(math.ceil(loop_length / h - 1e-9)) + 1)
        h2 = loop_length / (n2 - 1)
        n1 = max(4, int(math.ceil(halfline_truncation / h2 - 1e-9)) + 1)
        return cls(loop_length, h2 * (n1 - 1), n2, n1)

    @property
    def L(self) -> float:
        return self.loop_length

    @property
    def R_max(self) -> float:
        return self.halfline_truncation

    @property
    def h1(self) -> float:
        return self.halfline_truncation / (self.halfline_points - 1)

    @property
    def h2(self) -> float:
        return self.loop_length / (self.loop_points - 1)

    @cached_property
    def x1(self) -> np.ndarray:
        return np.linspace(0.0, self.halfline_truncation, self.halfline_points)

    @cached_property
    def x2(self) -> np.ndarray:
        return np.linspace(0.0, self.loop_length, self.loop_points)

    def refined(self, factor: int = 2) -> "TadpoleGeometry":
        """Same domain with every grid spacing divided by ``factor``."""
        return TadpoleGeometry(
            self.loop_length,
            self.halfline_truncation,
            (self.loop_points - 1) * factor + 1,
            (self.halfline_points - 1) * factor + 1,
        )


# -- grid calculus ---------------------------------------------------------


def trapezoid(values: np.ndarray, h: float) -> complex:
    """Composite trapezoid rule on a uniform grid."""
    return np.trapezoid(values, dx=h)


def fd_first(values: np.ndarray, h: float) -> np.ndarray:
    """Central differences inside, 3-point one-sided at both ends."""
    return np.gradient(values, h, edge_order=2)


def fd_second(values: np.ndarray, h: float) -> np.ndarray:
    """Second differences, 4-point one-sided (second order) at both ends."""
    f = values
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h**2
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h**2
    out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h**2
    return out


def _left_slope(f: np.ndarray, h: float) -> complex:
    return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)


def _right_slope(f: np.ndarray, h: float) -> complex:
    return (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)


# -- graph functions -------------------------------------------------------


def _opt_combine(a, b, op):
    if a is None or b is None:
        return None
    return op(a, b)


@dataclass(frozen=True, eq=False)
class GraphFunction:
    """Samples of ``f = (f1, f2)`` on the half-line and the loop.

    ``halfline_deriv``/``loop_deriv`` optionally hold exact samples of the
    first derivative; they are carried through linear combinations.
    """

    geometry: TadpoleGeometry
    halfline: np.ndarray
    loop: np.ndarray
    halfline_deriv: Optional[np.ndarray] = None
    loop_deriv: Optional[np.ndarray] = None

    def __post_init__(self):
        g = self.geometry
        h1 = np.asarray(self.halfline, dtype=complex)
        h2 = np.asarray(self.loop, dtype=complex)
        if h1.shape != (g.halfline_points,) or h2.shape != (g.loop_points,):
            raise GeometryError("sample arrays do not match the geometry")
        object.__setattr__(self, "halfline", h1)
        object.__setattr__(self, "loop", h2)
        for name, n in (("halfline_deriv", g.halfline_points), ("loop_deriv", g.loop_points)):
            d = getattr(self, name)
            if d is not None:
                d = np.asarray(d, dtype=complex)
                if d.shape != (n,):
                    raise GeometryError(f"{name} does not match the geometry")
                object.__setattr__(self, name, d)
        if (self.halfline_deriv is None) != (self.loop_deriv is None):
            object.__setattr__(self, "halfline_deriv", None)
            object.__setattr__(self, "loop_deriv", None)

    @classmethod
    def zeros(cls, geometry: TadpoleGeometry) -> "GraphFunction":
        return cls(
            geometry,
            np.zeros(geometry.halfline_points, complex),
            np.zeros(geometry.loop_points, complex),
            np.zeros(geometry.halfline_points, complex),
            np.zeros(geometry.loop_points, complex),
        )

    @classmethod
    def from_callables(
        cls,
        geometry: TadpoleGeometry,
        f1: Callable[[np.ndarray], np.ndarray],
        f2: Callable[[np.ndarray], np.ndarray],
        df1: Optional[Callable] = None,
        df2: Optional[Callable] = None,
    ) -> "GraphFunction":
        x1, x2 = geometry.x1, geometry.x2
        d1 = None if df1 is None else df1(x1)
        d2 = None if df2 is None else df2(x2)
        return cls(geometry, f1(x1), f2(x2), d1, d2)

    @property
    def has_exact_derivative(self) -> bool:
        return self.halfline_deriv is not None

    def derivative(self) -> tuple[np.ndarray, np.ndarray]:
        if self.has_exact_derivative:
            return self.halfline_deriv, self.loop_deriv
        g = self.geometry
        return fd_first(self.halfline, g.h1), fd_first(self.loop, g.h2)

    def second_derivative(self) -> tuple[np.ndarray, np.ndarray]:
        g = self.geometry
        return fd_second(self.halfline, g.h1), fd_second(self.loop, g.h2)

    def boundary_slopes(self) -> tuple[complex, complex, complex]:
        """``(f1'(0+), f2'(0+), f2'(L-))`` from exact samples or one-sided stencils."""
        if self.has_exact_derivative:
            return self.halfline_deriv[0], self.loop_deriv[0], self.loop_deriv[-1]
        g = self.geometry
        return (
            _left_slope(self.halfline, g.h1),
            _left_slope(self.loop, g.h2),
            _right_slope(self.loop, g.h2),
        )

    def vertex_values(self) -> tuple[complex, complex, complex]:
        """``(f1(0), f2(0), f2(L))``."""
        return self.halfline[0], self.loop[0], self.loop[-1]

    def continuity_defect(self) -> float:
        a, b, c = self.vertex_values()
        return max(abs(a - b), abs(b - c))

    def is_continuous(self, tol: float = ANALYTIC_TOL) -> bool:
        return self.continuity_defect() <= tol

    def pinned(self) -> "GraphFunction":
        """Representative with vertex value ``f1(0)`` subtracted."""
        c = self.halfline[0]
        return GraphFunction(self.geometry, self.halfline - c, self.loop - c, self.halfline_deriv, self.loop_deriv)

    def l2_norm(self) -> float:
        g = self.geometry
        s = trapezoid(np.abs(self.halfline) ** 2, g.h1) + trapezoid(np.abs(self.loop) ** 2, g.h2)
        return math.sqrt(max(float(np.real(s)), 0.0))

    def _check(self, other: "GraphFunction"):
        if other.geometry != self.geometry:
            raise GeometryError("graph functions live on different geometries")

    def __add__(self, other):
        if not isinstance(other, GraphFunction):
            return NotImplemented
        self._check(other)
        add = np.add
        return GraphFunction(
            self.geometry,
            self.halfline + other.halfline,
            self.loop + other.loop,
            _opt_combine(self.halfline_deriv, other.halfline_deriv, add),
            _opt_combine(self.loop_deriv, other.loop_deriv, add),
        )

    def __sub__(self, other):
        if not isinstance(other, GraphFunction):
            return NotImplemented
        return self + (-1.0) * other

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return GraphFunction(
            self.geometry,
            c * self.halfline,
            c * self.loop,
            None if self.halfline_deriv is None else c * self.halfline_deriv,
            None if self.loop_deriv is None else c * self.loop_deriv,
        )

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def conj(self) -> "GraphFunction":
        return GraphFunction(
            self.geometry,
            np.conj(self.halfline),
            np.conj(self.loop),
            None if self.halfline_deriv is None else np.conj(self.halfline_deriv),
            None if self.loop_deriv is None else np.conj(self.loop_deriv),
        )


@dataclass(frozen=True, eq=False)
class StateVector:
    """Element ``(u, v)`` of the energy space.

    ``smooth`` marks states regular enough for second differences (the
    discrete stand-in for membership in the generator's domain).
    """

    u: GraphFunction
    v: GraphFunction
    smooth: bool = True

    def __post_init__(self):
        if self.u.geometry != self.v.geometry:
            raise GeometryError("position and velocity live on different geometries")

    @property
    def geometry(self) -> TadpoleGeometry:
        return self.u.geometry

    @classmethod
    def zeros(cls, geometry: TadpoleGeometry) -> "StateVector":
        return cls(GraphFunction.zeros(geometry), GraphFunction.zeros(geometry))

    def __add__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return StateVector(self.u + other.u, self.v + other.v, self.smooth and other.smooth)

    def __sub__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return StateVector(self.u - other.u, self.v - other.v, self.smooth and other.smooth)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return StateVector(c * self.u, c * self.v, self.smooth)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def conj(self) -> "StateVector":
        return StateVector(self.u.conj(), self.v.conj(), self.smooth)

    def equals_modulo_constant(self, other: "StateVector", tol: float) -> bool:
        """Compare positions after pinning the vertex value; velocities directly."""
        du = self.u.pinned() - other.u.pinned()
        dv = self.v - other.v
        m = max(
            np.max(np.abs(du.halfline)), np.max(np.abs(du.loop)),
            np.max(np.abs(dv.halfline)), np.max(np.abs(dv.loop)),
        )
        return bool(m <= tol)


# -- energy space ----------------------------------------------------------


def inner_product_H(a: StateVector, b: StateVector) -> complex:
    """Energy inner product, linear in ``a`` and antilinear in ``b``."""
    g = a.geometry
    if b.geometry != g:
        raise GeometryError("states live on different geometries")
    da1, da2 = a.u.derivative()
    db1, db2 = b.u.derivative()
    total = (
        trapezoid(da1 * np.conj(db1), g.h1)
        + trapezoid(da2 * np.conj(db2), g.h2)
        + trapezoid(a.v.halfline * np.conj(b.v.halfline), g.h1)
        + trapezoid(a.v.loop * np.conj(b.v.loop), g.h2)
    )
    return complex(total)


def norm_H(state: StateVector) -> float:
    return math.sqrt(max(inner_product_H(state, state).real, 0.0))


def energy(state: StateVector) -> float:
    """``E = ½‖(u, v)‖²_H``."""
    return 0.5 * max(inner_product_H(state, state).real, 0.0)


# -- generator -------------------------------------------------------------


def _require_domain_class(state: StateVector, tol: float):
    if not state.smooth:
        raise DomainError("state is not flagged smooth enough for second differences")
    scale = max(1.0, float(np.max(np.abs(state.u.halfline))), float(np.max(np.abs(state.u.loop))))
    if state.u.continuity_defect() > tol * scale:
        raise DomainError("position is discontinuous at the vertex")
    vscale = max(1.0, float(np.max(np.abs(state.v.halfline))), float(np.max(np.abs(state.v.loop))))
    if state.v.continuity_defect() > tol * vscale:
        raise DomainError("velocity is discontinuous at the vertex")


def transmission_defect(state: StateVector, alpha: AlphaLike) -> complex:
    """``u1'(0+) + u2'(0+) - u2'(L-) - alpha * v1(0)``."""
    a = as_damping(alpha).alpha
    s1, s2, s3 = state.u.boundary_slopes()
    return complex(s1 + s2 - s3 - a * state.v.halfline[0])


def check_transmission(state: StateVector, alpha: AlphaLike, tol: float = ANALYTIC_TOL) -> bool:
    """Does the state satisfy the damped Kirchhoff condition to within ``tol``?"""
    return abs(transmission_defect(state, alpha)) <= tol


def apply_generator(
    state: StateVector,
    alpha: AlphaLike,
    *,
    continuity_tol: float = 1e-8,
    transmission_tol: Optional[float] = None,
) -> StateVector:
    """``A_alpha (u, v) = (v, u'')`` with ``u''`` from second differences.

    The damping enters only through the domain; pass ``transmission_tol``
    to have the Kirchhoff condition verified before applying.
    """
    _require_domain_class(state, continuity_tol)
    if transmission_tol is not None and not check_transmission(state, alpha, transmission_tol):
        raise DomainError("state violates the transmission condition")
    d1, d2 = state.u.second_derivative()
    return StateVector(state.v, GraphFunction(state.geometry, d1, d2), smooth=False)


def apply_adjoint(
    state: StateVector,
    alpha: AlphaLike,
    *,
    continuity_tol: float = 1e-8,
    transmission_tol: Optional[float] = None,
) -> StateVector:
    """``A_alpha^* (u, v) = (-v, -u'')`` on the domain of ``A_{-alpha}``."""
    _require_domain_class(state, continuity_tol)
    if transmission_tol is not None:
        a = as_damping(alpha).alpha
        s1, s2, s3 = state.u.boundary_slopes()
        if abs(s1 + s2 - s3 + a * state.v.halfline[0]) > transmission_tol:
            raise DomainError("state violates the adjoint transmission condition")
    d1, d2 = state.u.second_derivative()
    return StateVector(-state.v, GraphFunction(state.geometry, -d1, -d2), smooth=False)
