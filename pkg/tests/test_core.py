import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import geometry
from tadpole.core import (
    DampingParameter,
    GraphFunction,
    Regime,
    StateVector,
    TadpoleGeometry,
    apply_adjoint,
    apply_generator,
    check_transmission,
    energy,
    inner_product_H,
    norm_H,
    transmission_defect,
)
from tadpole.errors import DomainError, GeometryError, ParameterError
from tadpole.manufactured import ExpSum, ManufacturedState, random_domain_state
from tadpole.spectrum import default_geometry, eigenfunction_damped, eigenfunction_embedded


def _adjoint_domain_state(rng, alpha, L):
    """Smooth state obeying the transmission condition with damping ``-alpha``."""
    W = random_domain_state(rng, 0.0, L)
    # x e^{-x} has zero value and unit slope at the vertex
    d = -(W.u1(0.0, 1) + W.u2(0.0, 1) - W.u2(L, 1) + alpha * W.v1(0.0))
    return ManufacturedState(W.u1 + ExpSum(((complex(d), 1, -1.0 + 0j),)), W.u2, W.v1, W.v2)


def _random_state(seed, alpha=2.0, L=1.0, h=0.01):
    rng = np.random.default_rng(seed)
    return random_domain_state(rng, alpha, L).state(geometry(L, 40.0, h))


# -- parameters and geometry ----------------------------------------------


@pytest.mark.parametrize(
    "alpha, regime",
    [
        (0.0, Regime.NO_DAMPED_SPECTRUM),
        (1.0, Regime.NO_DAMPED_SPECTRUM),
        (np.nextafter(1.0, 2.0), Regime.LOW),
        (2.0, Regime.LOW),
        (np.nextafter(3.0, 0.0), Regime.LOW),
        (3.0, Regime.NO_DAMPED_SPECTRUM),
        (np.nextafter(3.0, 4.0), Regime.HIGH),
        (10.0, Regime.HIGH),
    ],
)
def test_regime_boundaries(alpha, regime):
    assert DampingParameter(alpha).regime is regime


@pytest.mark.parametrize("bad", [-1e-12, -1.0, math.nan, math.inf])
def test_damping_rejects_bad_values(bad):
    with pytest.raises(ParameterError):
        DampingParameter(bad)


def test_geometry_spacing_and_validation():
    g = TadpoleGeometry(2.0, 10.0, 21, 101)
    assert g.h2 == pytest.approx(0.1)
    assert g.h1 == pytest.approx(0.1)
    assert g.x1[-1] == 10.0 and g.x2[-1] == 2.0
    with pytest.raises(ParameterError):
        TadpoleGeometry(0.0, 1.0, 10, 10)
    with pytest.raises(ParameterError):
        TadpoleGeometry(1.0, 1.0, 3, 10)


def test_uniform_geometry_shares_one_spacing():
    g = TadpoleGeometry.uniform(1.0, 12.3, 0.01)
    assert g.h1 == pytest.approx(g.h2, rel=1e-12)
    assert g.R_max >= 12.3
    r = g.refined(2)
    assert r.h1 == pytest.approx(g.h1 / 2) and r.h2 == pytest.approx(g.h2 / 2)


def test_graph_function_shape_mismatch():
    g = geometry()
    with pytest.raises(GeometryError):
        GraphFunction(g, np.zeros(3), np.zeros(g.loop_points))


# -- inner product and energy ----------------------------------------------


def test_zero_state():
    z = StateVector.zeros(geometry())
    assert inner_product_H(z, z) == 0
    assert energy(z) == 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 10_000))
def test_inner_product_conjugate_symmetric(s1, s2):
    a = _random_state(s1)
    b = _random_state(s2)
    ab = inner_product_H(a, b)
    ba = inner_product_H(b, a)
    assert abs(ab - ba.conjugate()) <= 1e-13 * max(1.0, abs(ab))
    assert inner_product_H(a, a).real >= 0


@settings(max_examples=20, deadline=None)
@given(st.complex_numbers(max_magnitude=100.0, allow_nan=False, allow_infinity=False), st.integers(0, 1000))
def test_energy_scales_quadratically(c, seed):
    s = _random_state(seed)
    assert energy(c * s) == pytest.approx(abs(c) ** 2 * energy(s), rel=1e-12, abs=1e-300)


def test_geometry_mismatch_raises():
    a = StateVector.zeros(geometry(h=0.01))
    b = StateVector.zeros(geometry(h=0.02))
    with pytest.raises(GeometryError):
        inner_product_H(a, b)


def test_normalized_embedded_eigenfunction_has_unit_norm():
    g = geometry(h=1e-3)
    psi = eigenfunction_embedded(2, 1.0, g)
    assert inner_product_H(psi.state, psi.state).real == pytest.approx(1.0, abs=1e-8)
    assert energy(psi.state) == pytest.approx(0.5, abs=1e-8)


def test_closed_form_embedded_norm_matches_quadrature():
    # raw norm^2 of ((0, sin kx), ik (0, sin kx)) is k^2 L
    g = geometry(h=1e-3)
    psi = eigenfunction_embedded(3, 1.0, g)
    k = 6 * math.pi
    assert psi.normalization == pytest.approx(1.0 / (k * math.sqrt(1.0)), rel=1e-10)


def test_damped_and_embedded_are_orthogonal():
    g = default_geometry(2.0, 1.0, 1e-3)
    a = eigenfunction_damped(1, 2.0, 1.0, g).state
    b = eigenfunction_embedded(1, 1.0, g).state
    assert abs(inner_product_H(a, b)) <= 1e-8


def test_equality_modulo_constant():
    s = _random_state(3)
    shifted = StateVector(s.u + GraphFunction(s.geometry, np.full(s.geometry.halfline_points, 5.0),
                                              np.full(s.geometry.loop_points, 5.0)), s.v)
    assert s.equals_modulo_constant(shifted, 1e-12)
    assert not s.equals_modulo_constant(2.0 * s, 1e-6)
    # the energy norm does not see the constant
    assert norm_H(s - shifted) == pytest.approx(0.0, abs=1e-12)


# -- generator -------------------------------------------------------------


def _sine_state(h):
    g = geometry(L=1.0, R=2.0, h=h)
    k = 2 * math.pi
    u = GraphFunction(g, np.zeros(g.halfline_points), np.sin(k * g.x2))
    return g, StateVector(u, GraphFunction.zeros(g))


def test_generator_on_sine_is_second_order():
    errs = []
    for h in (0.02, 0.01, 0.005):
        g, s = _sine_state(h)
        out = apply_generator(s, 0.0)
        k = 2 * math.pi
        assert np.max(np.abs(out.u.loop)) == 0.0
        errs.append(np.max(np.abs(out.v.loop + k * k * np.sin(k * g.x2))))
        assert np.max(np.abs(out.v.halfline)) == 0.0
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_generator_on_zero_state():
    z = StateVector.zeros(geometry())
    out = apply_generator(z, 2.0)
    assert np.all(out.u.halfline == 0) and np.all(out.v.loop == 0)
    out = apply_adjoint(z, 2.0)
    assert np.all(out.u.loop == 0) and np.all(out.v.halfline == 0)


def test_generator_rejects_non_domain_states():
    s = _random_state(0)
    with pytest.raises(DomainError):
        apply_generator(StateVector(s.u, s.v, smooth=False), 2.0)
    g = s.geometry
    broken = GraphFunction(g, s.u.halfline + 1.0, s.u.loop)
    with pytest.raises(DomainError):
        apply_generator(StateVector(broken, s.v), 2.0)
    with pytest.raises(DomainError):
        apply_generator(s, 3.0, transmission_tol=1e-8)


def test_adjoint_is_minus_generator_without_damping():
    s = _random_state(5, alpha=0.0)
    a = apply_generator(s, 0.0)
    b = apply_adjoint(s, 0.0)
    assert np.allclose(a.u.halfline, -b.u.halfline) and np.allclose(a.v.loop, -b.v.loop)


def test_discrete_adjoint_residual_is_second_order():
    rng = np.random.default_rng(11)
    alpha, L = 2.0, 1.0
    U = random_domain_state(rng, alpha, L)
    F = _adjoint_domain_state(rng, alpha, L)
    defects = []
    for h in (0.02, 0.01, 0.005):
        g = geometry(L, 40.0, h)
        u, f = U.state(g), F.state(g)
        defects.append(abs(inner_product_H(apply_generator(u, alpha), f) - inner_product_H(u, apply_adjoint(f, alpha))))
    assert defects[0] / defects[1] > 3.5 and defects[1] / defects[2] > 3.5


# -- transmission ----------------------------------------------------------


def test_transmission_examples():
    g = default_geometry(2.0, 1.0, 1e-3)
    assert check_transmission(eigenfunction_embedded(1, 1.0, g).state, 2.0)
    for n in (-2, 0, 3):
        assert check_transmission(eigenfunction_damped(n, 2.0, 1.0, g).state, 2.0, tol=1e-10)
    # u = (e^{-x}, 1), v = 0: the flux sum is -1
    u = GraphFunction(g, np.exp(-g.x1), np.ones(g.loop_points), -np.exp(-g.x1), np.zeros(g.loop_points))
    s = StateVector(u, GraphFunction.zeros(g))
    assert transmission_defect(s, 2.0) == pytest.approx(-1.0)
    assert not check_transmission(s, 2.0)


def test_transmission_with_stencils_is_second_order():
    W = random_domain_state(np.random.default_rng(4), 2.0, 1.0)
    errs = []
    for h in (0.02, 0.01, 0.005):
        st_ = W.state(geometry(1.0, 40.0, h))
        stripped = StateVector(GraphFunction(st_.geometry, st_.u.halfline, st_.u.loop), st_.v)
        errs.append(abs(transmission_defect(stripped, 2.0)))
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


# -- sesquilinear identities -----------------------------------------------


def _sesquilinear_defect(W, alpha, h, L=1.0, adjoint=False):
    s = W.state(geometry(L, 40.0, h))
    out = apply_adjoint(s, alpha) if adjoint else apply_generator(s, alpha)
    val = inner_product_H(out, s)
    v0 = s.v.halfline[0]
    du1, du2 = s.u.derivative()
    dv1, dv2 = s.v.derivative()
    g = s.geometry
    cross = np.trapezoid(du1 * np.conj(dv1), dx=g.h1) + np.trapezoid(du2 * np.conj(dv2), dx=g.h2)
    return abs(val.real + alpha * abs(v0) ** 2), abs(val.imag + 2 * cross.imag)


@pytest.mark.parametrize("alpha", [0.0, 1.0, 2.0, 5.0])
def test_sesquilinear_identity_converges(alpha):
    # single states can cross zero before the asymptotic range, so the
    # order is read off the summed defect of a small batch
    hs = (0.01, 0.005, 0.0025)
    total = np.zeros((3, 2))
    for seed in range(8):
        W = random_domain_state(np.random.default_rng(100 + seed), alpha, 1.0)
        total += np.array([_sesquilinear_defect(W, alpha, h) for h in hs])
    for k in (0, 1):
        assert total[0, k] / total[1, k] > 3.5 and total[1, k] / total[2, k] > 3.5


def test_adjoint_sesquilinear_identity():
    alpha = 2.0
    W = _adjoint_domain_state(np.random.default_rng(9), alpha, 1.0)
    defects = [_sesquilinear_defect(W, alpha, h, adjoint=True)[0] for h in (0.02, 0.01, 0.005)]
    assert defects[0] / defects[1] > 3.5 and defects[1] / defects[2] > 3.5


def test_eigen_residual_is_second_order():
    res = []
    for h in (0.02, 0.01, 0.005):
        g = default_geometry(2.0, 1.0, h)
        psi = eigenfunction_damped(1, 2.0, 1.0, g)
        r = apply_generator(psi.state, 2.0) - psi.z * psi.state
        res.append(norm_H(r))
    assert res[0] / res[1] > 3.5 and res[1] / res[2] > 3.5
