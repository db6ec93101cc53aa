import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import geometry
from tadpole.core import apply_generator, check_transmission, norm_H
from tadpole.errors import NoDampedSpectrumError, ParameterError, TruncationError
from tadpole.roots import Rectangle
from tadpole.spectrum import (
    Kind,
    char_adjugate_minus,
    char_det_minus,
    char_det_plus,
    char_matrix_minus,
    damped_eigenvalue,
    damped_eigenvalues,
    default_geometry,
    default_halfline_length,
    eigenfunction_damped,
    eigenfunction_embedded,
    embedded_eigenvalues,
    find_roots,
    spectral_abscissa,
    weyl_quasimode,
)

LN3 = math.log(3.0)


# -- closed forms ----------------------------------------------------------


def test_embedded_eigenvalues_skip_zero():
    evs = embedded_eigenvalues(1.0, -2, 2)
    assert [e.n for e in evs] == [-2, -1, 1, 2]
    assert evs[-1].z == pytest.approx(4j * math.pi)
    assert all(e.kind is Kind.EMBEDDED for e in evs)
    with pytest.raises(ParameterError):
        embedded_eigenvalues(0.0, 1, 2)


def test_damped_eigenvalue_examples():
    assert damped_eigenvalue(2.0, 1.0, 0) == pytest.approx(-LN3, abs=1e-15)
    assert damped_eigenvalue(5.0, 1.0, 0) == pytest.approx(complex(-LN3, math.pi), abs=1e-15)
    assert damped_eigenvalue(2.0, 0.5, 1) == pytest.approx(complex(-2 * LN3, 4 * math.pi), abs=1e-14)
    assert damped_eigenvalues(0.5, 1.0, -3, 3) == []
    with pytest.raises(NoDampedSpectrumError):
        damped_eigenvalue(3.0, 1.0, 0)
    with pytest.raises(ParameterError):
        damped_eigenvalue(2.0, -1.0, 0)


@pytest.mark.parametrize("alpha, expected", [(1.0, None), (3.0, None), (0.0, None), (2.0, -LN3)])
def test_spectral_abscissa(alpha, expected):
    got = spectral_abscissa(alpha, 1.0)
    if expected is None:
        assert got is None
    else:
        assert got == pytest.approx(expected, abs=1e-15)


def test_abscissa_is_negative_in_both_regimes():
    for a in (1.01, 2.0, 2.99, 3.01, 7.0, 100.0):
        assert spectral_abscissa(a, 1.3) < 0


def test_eigenvalues_annihilate_the_determinant():
    for alpha in (1.5, 2.0, 2.9, 3.1, 5.0, 10.0):
        for n in (-2, 0, 3):
            z = damped_eigenvalue(alpha, 1.0, n)
            assert abs(char_det_minus(z, alpha, 1.0)) < 1e-12
            assert abs(char_det_minus(z, alpha, 1.0, form="matrix")) < 1e-12


# -- determinants ----------------------------------------------------------


def test_determinant_examples():
    e = math.e
    assert char_det_plus(1.0, 0.0, 1.0) == pytest.approx((e - 1) * (3 * e - 1), rel=1e-14)
    assert abs(char_det_plus(1.0, 0.0, 1.0)) == pytest.approx(12.294, abs=5e-4)
    assert char_det_minus(-1.0, 0.0, 1.0) == pytest.approx((1 / e - 1) * (1 / e - 3), rel=1e-14)
    assert abs(char_det_minus(-1.0, 0.0, 1.0)) == pytest.approx(1.664, abs=5e-4)
    for alpha in (0.0, 2.0, 7.0):
        assert abs(char_det_minus(2j * math.pi, alpha, 1.0)) < 1e-12
        assert abs(char_det_plus(2j * math.pi, alpha, 1.0)) < 1e-12


def _scale(z, alpha, L, sign):
    ep = abs(np.exp(z * L))
    em = abs(np.exp(-z * L))
    c = 1.0 if sign < 0 else 3.0
    d = abs(3.0 - alpha) if sign < 0 else abs(1.0 - alpha)
    return em * (ep + 1.0) * ((alpha + c) * ep + d)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(-3, 3),
    st.floats(-20, 20),
    st.floats(0, 12),
    st.floats(0.5, 2.0),
)
def test_matrix_and_factored_forms_agree(re, im, alpha, L):
    z = complex(re, im)
    em = np.exp(-z * L)
    d_minus = char_det_minus(z, alpha, L, form="matrix") - em * char_det_minus(z, alpha, L)
    assert abs(d_minus) <= 1e-12 * _scale(z, alpha, L, -1)
    d_plus = char_det_plus(z, alpha, L, form="matrix") + em * char_det_plus(z, alpha, L)
    assert abs(d_plus) <= 1e-12 * _scale(z, alpha, L, +1)


def test_forms_agree_vectorized():
    rng = np.random.default_rng(0)
    z = rng.uniform(-3, 3, 500) + 1j * rng.uniform(-20, 20, 500)
    m = char_det_minus(z, 2.0, 1.0, form="matrix")
    f = char_det_minus(z, 2.0, 1.0)
    assert m.shape == (500,)
    assert np.allclose(m, np.exp(-z) * f, rtol=1e-12, atol=0)


def test_plus_second_factor_has_no_zero_in_closed_right_half_plane():
    re, im = np.meshgrid(np.linspace(0, 4, 81), np.linspace(-30, 30, 601))
    z = re + 1j * im
    for alpha in (0.0, 0.5, 1.0, 2.0, 3.0, 10.0):
        second = (alpha + 3) * np.exp(z) - (1 - alpha)
        assert np.min(np.abs(second)) >= 2.0


def test_adjugate_inverts_the_matrix():
    rng = np.random.default_rng(1)
    for _ in range(20):
        z = complex(rng.uniform(-3, -0.1), rng.uniform(-10, 10))
        alpha = rng.uniform(0, 8)
        M = char_matrix_minus(z, alpha, 1.0)
        adj = char_adjugate_minus(z, alpha, 1.0)
        det = char_det_minus(z, alpha, 1.0, form="matrix")
        assert np.allclose(M @ adj, det * np.eye(3), atol=1e-12 * np.abs(M).max() ** 3)


# -- root finding ----------------------------------------------------------


def test_find_roots_examples():
    got = find_roots(2.0, 1.0, Rectangle(-3, -0.01, -7, 7))
    want = [complex(-LN3, -2 * math.pi), complex(-LN3, 0), complex(-LN3, 2 * math.pi)]
    assert len(got) == 3
    assert max(abs(a - b) for a, b in zip(got, want)) < 1e-10
    assert find_roots(0.5, 1.0, Rectangle(-3, -0.01, -7, 7)) == []
    got = find_roots(5.0, 1.0, Rectangle(-3, -0.01, 0, 4))
    assert len(got) == 1 and abs(got[0] - complex(-LN3, math.pi)) < 1e-10


def test_find_roots_counts_boundary_roots():
    # Im = +-2 pi lie exactly on the region edges
    got = find_roots(2.0, 1.0, Rectangle(-3, -0.01, -2 * math.pi, 2 * math.pi))
    assert len(got) == 3


def test_find_roots_requires_left_half_plane():
    with pytest.raises(ParameterError):
        find_roots(2.0, 1.0, Rectangle(-3, 0.0, -1, 1))


# -- symmetry --------------------------------------------------------------


@pytest.mark.parametrize("alpha", [1.5, 2.0, 2.9])
def test_conjugate_symmetry_in_low_damping(alpha):
    g = default_geometry(alpha, 1.0, 0.01)
    for n in (1, 2, 5):
        assert damped_eigenvalue(alpha, 1.0, -n) == damped_eigenvalue(alpha, 1.0, n).conjugate()
        p = eigenfunction_damped(n, alpha, 1.0, g)
        m = eigenfunction_damped(-n, alpha, 1.0, g)
        assert np.array_equal(m.state.u.halfline, np.conj(p.state.u.halfline))
        assert np.array_equal(m.state.u.loop, np.conj(p.state.u.loop))


@pytest.mark.parametrize("alpha", [3.1, 5.0, 10.0])
def test_conjugate_pairing_in_high_damping(alpha):
    g = default_geometry(alpha, 1.0, 0.01)
    for n in (0, 1, 4):
        assert damped_eigenvalue(alpha, 1.0, -n - 1) == pytest.approx(
            damped_eigenvalue(alpha, 1.0, n).conjugate(), abs=1e-14
        )
        p = eigenfunction_damped(n, alpha, 1.0, g)
        m = eigenfunction_damped(-n - 1, alpha, 1.0, g)
        assert np.allclose(m.state.u.loop, np.conj(p.state.u.loop), atol=1e-12)


# -- eigenfunctions --------------------------------------------------------


def test_embedded_eigenfunction_properties():
    g = geometry(h=0.005)
    for n in (-3, 1, 4):
        psi = eigenfunction_embedded(n, 1.0, g)
        u = psi.state.u
        assert np.all(u.halfline == 0)
        assert u.loop[0] == 0 and u.loop[-1] == 0
        assert check_transmission(psi.state, 2.0)
        assert norm_H(psi.state) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ParameterError):
        eigenfunction_embedded(0, 1.0, g)


def test_embedded_eigen_residual_is_second_order():
    res = []
    for h in (0.01, 0.005, 0.0025):
        psi = eigenfunction_embedded(2, 1.0, geometry(R=2.0, h=h))
        res.append(norm_H(apply_generator(psi.state, 2.0) - psi.z * psi.state))
    assert res[0] / res[1] > 3.5 and res[1] / res[2] > 3.5


@pytest.mark.parametrize("alpha", [1.5, 2.0, 2.5, 3.5, 5.0])
def test_damped_eigenfunction_vertex_values(alpha):
    g = default_geometry(alpha, 1.0, 0.005)
    for n in (-1, 0, 2):
        psi = eigenfunction_damped(n, alpha, 1.0, g)
        raw = psi.state.u.loop / psi.normalization
        assert raw[0] == pytest.approx(1.0, abs=1e-13)
        assert raw[-1] == pytest.approx(1.0, abs=1e-12)
        assert psi.state.u.halfline[0] / psi.normalization == pytest.approx(1.0, abs=1e-15)
        assert check_transmission(psi.state, alpha, tol=1e-10)
        assert norm_H(psi.state) == pytest.approx(1.0, abs=1e-12)


def test_damped_eigenfunction_requires_spectrum():
    with pytest.raises(NoDampedSpectrumError):
        eigenfunction_damped(0, 1.0, 1.0, geometry())


def test_halfline_mass_of_damped_mode():
    # trapezoid quadrature of |e^{zx}|^2 against 1/(2 ln 3)
    vals = []
    for h in (0.002, 0.001):
        g = default_geometry(2.0, 1.0, h)
        psi = eigenfunction_damped(0, 2.0, 1.0, g)
        u1 = psi.state.u.halfline / psi.normalization
        vals.append(np.trapezoid(np.abs(u1) ** 2, dx=g.h1))
    target = 1.0 / (2 * LN3)
    assert target == pytest.approx(0.45512, abs=5e-6)
    assert abs(vals[1] - target) < 1e-6
    assert abs(vals[0] - target) / abs(vals[1] - target) > 3.5


def test_default_halfline_length():
    assert default_halfline_length(2.0, 1.0) == pytest.approx(math.log(1e-12) / (-2 * LN3))
    assert default_halfline_length(0.5, 1.0) == 2.0
    assert default_halfline_length(3.0 - 1e-4, 1.0) == 2.0


# -- Weyl quasimodes -------------------------------------------------------


@pytest.mark.parametrize("alpha", [0.0, 2.0])
@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_weyl_residual_decays(lam, alpha):
    g = geometry(R=81.0, h=0.01)
    r10 = weyl_quasimode(lam, 10, g, alpha).residual
    r40 = weyl_quasimode(lam, 40, g, alpha).residual
    assert r10 / r40 >= 3.0


def test_weyl_norm_tends_to_twice_lambda_squared():
    # both the gradient and the velocity contribute lam^2
    g = geometry(R=81.0, h=0.01)
    for lam in (0.5, 1.0, 2.0):
        e10 = abs(weyl_quasimode(lam, 10, g).norm_squared - 2 * lam**2)
        e40 = abs(weyl_quasimode(lam, 40, g).norm_squared - 2 * lam**2)
        # the excess is ||bump'||^2 / j^2
        assert e40 < 0.02 and e10 / e40 > 10


def test_weyl_quasimode_checks():
    g = geometry(R=30.0, h=0.01)
    with pytest.raises(TruncationError):
        weyl_quasimode(1.0, 20, g)
    with pytest.raises(ParameterError):
        weyl_quasimode(0.0, 5, g)
    q = weyl_quasimode(1.0, 5, g)
    assert q.state.u.halfline[0] == 0 and np.all(q.state.u.loop == 0)
