"""Explicit finite-difference solver for the damped wave equation on the tadpole.

Interior nodes use the three-level leapfrog scheme for ``u_tt = u_xx``.  The
vertex value ``U`` is shared by the half-line start and both loop ends.  A
half-cell balance around it reads

    H U_tt + alpha U_t = sum_k (a_k - U) / h_k,     H = (h1 + 2 h2) / 2,

where ``a_k`` are the three neighbouring values.  This is the elimination
of the three ghost values that make the one-sided flux stencils consistent
with continuity and the damped Kirchhoff condition.  The far end uses the
transparent condition ``u_t + u_x = 0`` with a centred ghost node.

Energies are recorded with ``u_t`` from a central time difference and
``u_x`` from the core grid derivative.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .core import (
    AlphaLike,
    DampingParameter,
    GraphFunction,
    StateVector,
    TadpoleGeometry,
    as_damping,
    energy,
    fd_second,
)
from .errors import FitDomainError, ParameterError, SchemeFailureError, StabilityError
from .spectrum import default_halfline_length, eigenfunction_damped, eigenfunction_embedded

log = logging.getLogger(__name__)

__all__ = [
    "DampedEigenfunction",
    "EmbeddedEigenfunction",
    "GaussianPulse",
    "Custom",
    "Superposition",
    "SimulationConfig",
    "SchemeState",
    "EnergyTrace",
    "initial_state",
    "start",
    "step",
    "run",
    "check_energy_identity",
    "fit_decay_rate",
    "fit_decay_with_floor",
]

GROWTH_TOL = 0.01


# -- initial conditions ----------------------------------------------------


@dataclass(frozen=True)
class DampedEigenfunction:
    n: int = 0


@dataclass(frozen=True)
class EmbeddedEigenfunction:
    n: int = 1


@dataclass(frozen=True)
class GaussianPulse:
    """``u = exp(-((x - center) / width)^2)`` on one edge.

    ``direction`` is ``"right"`` (``v = -u'``), ``"left"`` (``v = u'``) or
    ``"standing"`` (``v = 0``).
    """

    center: float
    width: float
    edge: str = "halfline"
    direction: str = "standing"

    def __post_init__(self):
        if self.edge not in ("halfline", "loop"):
            raise ParameterError(f"unknown edge {self.edge!r}")
        if self.direction not in ("right", "left", "standing"):
            raise ParameterError(f"unknown direction {self.direction!r}")
        if not self.width > 0:
            raise ParameterError("pulse width must be > 0")


@dataclass(frozen=True, eq=False)
class Custom:
    state: StateVector


@dataclass(frozen=True)
class Superposition:
    parts: tuple = ()  # pairs (coefficient, initial condition)


InitialCondition = Union[DampedEigenfunction, EmbeddedEigenfunction, GaussianPulse, Custom, Superposition]


@dataclass(frozen=True, eq=False)
class SimulationConfig:
    """Run parameters; the time step is ``cfl * min(h1, h2)``."""

    geometry: TadpoleGeometry
    alpha: DampingParameter
    t_final: float
    initial_condition: Any
    cfl: float = 0.5
    record_stride: int = 10

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_damping(self.alpha))
        if not (0 < self.cfl <= 1):
            raise StabilityError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.t_final > 0:
            raise ParameterError("t_final must be > 0")
        if int(self.record_stride) < 1:
            raise ParameterError("record_stride must be >= 1")
        object.__setattr__(self, "record_stride", int(self.record_stride))

    @property
    def dt(self) -> float:
        g = self.geometry
        return self.cfl * min(g.h1, g.h2)

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_final / self.dt - 1e-9))

    @classmethod
    def default(cls, alpha: AlphaLike, L: float, h: float, t_final: float, initial_condition, **kw) -> "SimulationConfig":
        """Config on the default truncation ``max(2L, ln(1e-12) / (2 Re z))``."""
        geo = TadpoleGeometry.uniform(L, default_halfline_length(alpha, L), h)
        return cls(geo, as_damping(alpha), t_final, initial_condition, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationConfig":
        """Build from a JSON-style mapping (see the README for the schema)."""
        d = dict(d)
        alpha = as_damping(d.pop("alpha"))
        g = d.pop("geometry")
        L = float(g["loop_length"])
        if "h" in g:
            R = float(g.get("halfline_truncation", default_halfline_length(alpha, L)))
            geo = TadpoleGeometry.uniform(L, R, float(g["h"]))
        else:
            geo = TadpoleGeometry(L, float(g["halfline_truncation"]), int(g["loop_points"]), int(g["halfline_points"]))
        ic = _ic_from_dict(d.pop("initial_condition"))
        allowed = {"t_final", "cfl", "record_stride"}
        extra = set(d) - allowed
        if extra:
            raise ParameterError(f"unknown config keys: {sorted(extra)}")
        return cls(geo, alpha, float(d["t_final"]), ic, cfl=float(d.get("cfl", 0.5)),
                   record_stride=int(d.get("record_stride", 10)))


def _ic_from_dict(d: dict):
    kind = d.get("type")
    if kind == "damped_eigenfunction":
        return DampedEigenfunction(int(d.get("n", 0)))
    if kind == "embedded_eigenfunction":
        return EmbeddedEigenfunction(int(d.get("n", 1)))
    if kind == "gaussian_pulse":
        return GaussianPulse(float(d["center"]), float(d["width"]), d.get("edge", "halfline"),
                             d.get("direction", "standing"))
    if kind == "superposition":
        return Superposition(tuple((complex(p.get("coefficient", 1.0)), _ic_from_dict(p["initial_condition"]))
                                   for p in d["parts"]))
    raise ParameterError(f"unknown initial condition type {kind!r}")


def initial_state(config: SimulationConfig) -> StateVector:
    return _build_ic(config.initial_condition, config)


def _build_ic(ic, config: SimulationConfig) -> StateVector:
    geo = config.geometry
    if isinstance(ic, DampedEigenfunction):
        return eigenfunction_damped(ic.n, config.alpha, geo.L, geo).state
    if isinstance(ic, EmbeddedEigenfunction):
        return eigenfunction_embedded(ic.n, geo.L, geo, config.alpha).state
    if isinstance(ic, GaussianPulse):
        length = geo.R_max if ic.edge == "halfline" else geo.L
        if not (ic.center - 4 * ic.width > 0 and ic.center + 4 * ic.width < length):
            raise ParameterError("pulse support must stay away from the vertex and the edge end")
        x = geo.x1 if ic.edge == "halfline" else geo.x2
        s = (x - ic.center) / ic.width
        phi = np.exp(-s * s)
        dphi = -2.0 * s / ic.width * phi
        vel = {"right": -dphi, "left": dphi, "standing": 0.0 * phi}[ic.direction]
        z1 = np.zeros(geo.halfline_points)
        z2 = np.zeros(geo.loop_points)
        if ic.edge == "halfline":
            u = GraphFunction(geo, phi, z2, dphi, z2)
            v = GraphFunction(geo, vel, z2)
        else:
            u = GraphFunction(geo, z1, phi, z1, dphi)
            v = GraphFunction(geo, z1, vel)
        return StateVector(u, v)
    if isinstance(ic, Custom):
        if ic.state.geometry != geo:
            raise ParameterError("custom state lives on a different geometry")
        return ic.state
    if isinstance(ic, Superposition):
        if not ic.parts:
            raise ParameterError("empty superposition")
        out = None
        for c, sub in ic.parts:
            s = complex(c) * _build_ic(sub, config)
            out = s if out is None else out + s
        return out
    raise ParameterError(f"unsupported initial condition {ic!r}")


# -- scheme ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SchemeState:
    """Two consecutive time levels; ``prev`` is at ``time - dt``."""

    halfline_prev: np.ndarray
    loop_prev: np.ndarray
    halfline: np.ndarray
    loop: np.ndarray
    time: float
    index: int = 0


def _vertex_mass(geo: TadpoleGeometry) -> float:
    return 0.5 * (geo.h1 + 2.0 * geo.h2)


def _vertex_flux(u1: np.ndarray, u2: np.ndarray, geo: TadpoleGeometry) -> complex:
    U = u1[0]
    return (u1[1] - U) / geo.h1 + (u2[1] - U) / geo.h2 + (u2[-2] - U) / geo.h2


def _acceleration(u1, u2, v1, v2, geo: TadpoleGeometry, alpha: float):
    """``u_xx`` consistent with the scheme's vertex and far-end closures."""
    a1 = fd_second(u1, geo.h1)
    a2 = fd_second(u2, geo.h2)
    av = (_vertex_flux(u1, u2, geo) - alpha * v1[0]) / _vertex_mass(geo)
    a1[0] = a2[0] = a2[-1] = av
    # ghost node from u_x = -u_t at the far end
    ghost = u1[-2] - 2.0 * geo.h1 * v1[-1]
    a1[-1] = (ghost - 2.0 * u1[-1] + u1[-2]) / geo.h1**2
    return a1, a2


def start(state: StateVector, config: SimulationConfig) -> SchemeState:
    """Second-order Taylor start: ``u(-dt) = u0 - dt v0 + dt^2/2 u_xx``."""
    geo = config.geometry
    if state.geometry != geo:
        raise ParameterError("initial state does not match the configured geometry")
    dt = config.dt
    u1, u2 = state.u.halfline.copy(), state.u.loop.copy()
    v1, v2 = state.v.halfline, state.v.loop
    a1, a2 = _acceleration(u1, u2, v1, v2, geo, config.alpha.alpha)
    p1 = u1 - dt * v1 + 0.5 * dt * dt * a1
    p2 = u2 - dt * v2 + 0.5 * dt * dt * a2
    # one vertex value for all three edge ends
    vtx = p1[0]
    p2[0] = p2[-1] = vtx
    u2[0] = u2[-1] = u1[0]
    return SchemeState(p1, p2, u1, u2, 0.0, 0)


def step(s: SchemeState, config: SimulationConfig) -> SchemeState:
    """Advance one leapfrog step."""
    geo = config.geometry
    dt = config.dt
    if dt > min(geo.h1, geo.h2) * (1 + 1e-12):
        raise StabilityError("time step exceeds the CFL limit")
    a = config.alpha.alpha
    r1 = dt / geo.h1
    r2 = dt / geo.h2
    u1, u2, p1, p2 = s.halfline, s.loop, s.halfline_prev, s.loop_prev
    n1 = np.empty_like(u1)
    n2 = np.empty_like(u2)
    n1[1:-1] = 2.0 * u1[1:-1] - p1[1:-1] + r1 * r1 * (u1[2:] - 2.0 * u1[1:-1] + u1[:-2])
    n2[1:-1] = 2.0 * u2[1:-1] - p2[1:-1] + r2 * r2 * (u2[2:] - 2.0 * u2[1:-1] + u2[:-2])
    # vertex
    H = _vertex_mass(geo)
    U, Up = u1[0], p1[0]
    flux = _vertex_flux(u1, u2, geo)
    lhs = H / dt**2 + a / (2.0 * dt)
    rhs = flux + H * (2.0 * U - Up) / dt**2 + a * Up / (2.0 * dt)
    Un = rhs / lhs
    n1[0] = n2[0] = n2[-1] = Un
    # transparent far end
    n1[-1] = (2.0 * (1.0 - r1 * r1) * u1[-1] + 2.0 * r1 * r1 * u1[-2] + (r1 - 1.0) * p1[-1]) / (1.0 + r1)
    return SchemeState(u1, u2, n1, n2, s.time + dt, s.index + 1)


@dataclass(frozen=True, eq=False)
class EnergyTrace:
    """Recorded series.

    ``dissipation`` is ``2 alpha int_0^t |u_t(0, s)|^2 ds`` and ``outflow``
    ``2 int_0^t |u_t(R_max, s)|^2 ds`` (energy leaving through the cut end).
    """

    times: np.ndarray
    energies: np.ndarray
    dissipation: np.ndarray
    vertex_velocity: np.ndarray
    outflow: np.ndarray
    alpha: float
    final_state: Optional[StateVector] = None


def _energy_at(prev: SchemeState, nxt: SchemeState, geo: TadpoleGeometry, dt: float):
    """Energy at the level shared by ``prev`` (as current) and ``nxt`` (as previous)."""
    v1 = (nxt.halfline - prev.halfline_prev) / (2.0 * dt)
    v2 = (nxt.loop - prev.loop_prev) / (2.0 * dt)
    st = StateVector(GraphFunction(geo, prev.halfline, prev.loop), GraphFunction(geo, v1, v2))
    return energy(st), v1[0], v1[-1], st


def run(config: SimulationConfig, *, keep_final_state: bool = False) -> EnergyTrace:
    """Integrate to ``t_final`` and record energies every ``record_stride`` steps."""
    geo = config.geometry
    dt = config.dt
    a = config.alpha.alpha
    s = start(initial_state(config), config)
    times, energies, diss, vel, outf = [], [], [], [], []
    d_acc = 0.0
    o_acc = 0.0
    last_vv = last_vr = None
    nxt = step(s, config)
    E0 = None
    last_rec = None
    for k in range(config.n_steps + 1):
        E, vv, vr, st = _energy_at(s, nxt, geo, dt)
        if not math.isfinite(E):
            raise SchemeFailureError(f"non-finite energy at t = {s.time:.6g}")
        if last_vv is not None:
            d_acc += 2.0 * a * 0.5 * dt * (abs(last_vv) ** 2 + abs(vv) ** 2)
            o_acc += 2.0 * 0.5 * dt * (abs(last_vr) ** 2 + abs(vr) ** 2)
        last_vv, last_vr = vv, vr
        if E0 is None:
            E0 = E
        if k % config.record_stride == 0 or k == config.n_steps:
            if last_rec is not None and E > last_rec * (1.0 + GROWTH_TOL) + 1e-14 * E0:
                raise SchemeFailureError(f"energy grew from {last_rec:.6g} to {E:.6g} at t = {s.time:.6g}")
            last_rec = E
            times.append(s.time)
            energies.append(E)
            diss.append(d_acc)
            vel.append(complex(vv))
            outf.append(o_acc)
        if k == config.n_steps:
            break
        s, nxt = nxt, step(nxt, config)
    return EnergyTrace(
        np.array(times),
        np.array(energies),
        np.array(diss),
        np.array(vel, dtype=complex),
        np.array(outf),
        a,
        st if keep_final_state else None,
    )


def check_energy_identity(trace: EnergyTrace, *, include_outflow: bool = False) -> float:
    """``max_t |2E(t) - 2E(0) + D(t)| / (2E(0))``; optionally counting outflow."""
    E = trace.energies
    lost = trace.dissipation + (trace.outflow if include_outflow else 0.0)
    return float(np.max(np.abs(2.0 * E - 2.0 * E[0] + lost)) / (2.0 * E[0]))


def _window(trace: EnergyTrace, t_start: float, t_end: float):
    m = (trace.times >= t_start - 1e-12) & (trace.times <= t_end + 1e-12)
    t, E = trace.times[m], trace.energies[m]
    if len(t) < 3:
        raise FitDomainError("fit window holds fewer than 3 samples")
    return t, E


def fit_decay_rate(trace: EnergyTrace, t_start: float, t_end: float, floor: float = 0.0) -> float:
    """``-slope / 2`` of the least-squares line through ``ln(E - floor)``."""
    t, E = _window(trace, t_start, t_end)
    shifted = E - floor
    if np.any(shifted <= 0):
        raise FitDomainError("energy minus floor is not positive on the window")
    slope = np.polyfit(t, np.log(shifted), 1)[0]
    return float(-slope / 2.0)


def fit_decay_with_floor(trace: EnergyTrace, t_start: float, t_end: float, omega_max: float = 50.0) -> tuple[float, float]:
    """Joint fit ``E(t) = F + c e^{-2 w t}``; returns ``(w, F)``.

    For fixed ``w`` the model is linear in ``(F, c)``, so only ``w`` is
    searched (variable projection).
    """
    t, E = _window(trace, t_start, t_end)
    t0 = t[0]

    def solve(w):
        X = np.column_stack([np.ones_like(t), np.exp(-2.0 * w * (t - t0))])
        coef, *_ = np.linalg.lstsq(X, E, rcond=None)
        return coef, float(np.sum((X @ coef - E) ** 2))

    res = minimize_scalar(lambda w: solve(w)[1], bounds=(1e-6, omega_max), method="bounded",
                          options={"xatol": 1e-10})
    w = float(res.x)
    (F, c), _ = solve(w)
    if c <= 0:
        raise FitDomainError("fitted transient is not a decaying positive term")
    return w, float(F)
