import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from horolab.specfun import (
    BesselOrder,
    BesselRangeError,
    bessel_k,
    bessel_k_array,
    bessel_k_bound_check,
    bessel_ode_residual,
    completed_zeta,
    fit_imaginary_order_constant,
    imaginary_order_envelope,
    imaginary_order_ratio,
    k_contour_many,
    k_imag,
    mellin_k_integral,
    mellin_k_quadrature,
    power_bound_constant,
    refine_grid,
    riemann_zeta,
    zeta_euler_maclaurin,
)

# K_0(1) from quad of exp(-cosh t) on [0, 8] (the tail is below 1e-600), frozen
K0_AT_1 = 0.42102443824070834


def test_order_kinds():
    assert BesselOrder.from_spectral(0.5 + 2j, 1) == BesselOrder.imaginary(2.0)
    assert BesselOrder.from_spectral(1.5, 2) == BesselOrder.real(0.5)
    assert BesselOrder.from_spectral(0.7, 2).nu == pytest.approx(0.3, abs=1e-15)
    assert BesselOrder.from_spectral(2 + 1j, 1).kind == "complex"
    with pytest.raises(ValueError):
        BesselOrder("other", 1.0)


def test_k_half_closed_form():
    assert bessel_k(BesselOrder.real(0.5), 1.0) == pytest.approx(math.sqrt(math.pi / 2) * math.exp(-1), rel=1e-12)
    for x in np.geomspace(1e-3, 40, 30):
        want = math.sqrt(math.pi / (2 * x)) * math.exp(-x)
        assert bessel_k(BesselOrder.real(0.5), x) == pytest.approx(want, rel=1e-10)
    # the contour route at complex order 1/2 + 0i must agree too
    assert k_contour_many(0.5, np.array([1.0]))[0].real == pytest.approx(math.sqrt(math.pi / 2) / math.e, rel=1e-10)


def test_k0_quadrature_oracle():
    oracle = quad(lambda t: math.exp(-math.cosh(t)), 0, 8.0, epsabs=1e-15, epsrel=1e-13)[0]
    assert oracle == pytest.approx(K0_AT_1, rel=1e-12)
    assert bessel_k(BesselOrder.real(0.0), 1.0) == pytest.approx(K0_AT_1, rel=1e-12)
    assert k_imag(0.0, 1.0) == pytest.approx(K0_AT_1, rel=1e-10)


@pytest.mark.parametrize("T", [0.0, 0.5, 3.0, 10.0, 20.0, 30.0])
def test_imaginary_order_against_mpmath(T):
    mpmath.mp.dps = 30
    for x in [1e-4, 1e-2, 0.3, 1.0, 5.0, 15.0, 29.0, 31.0, 50.0]:
        ref = float(mpmath.besselk(1j * T, x).real)
        got = k_imag(T, x)
        assert isinstance(got, float)
        # relative to the envelope where K_{iT} passes through zero
        scale = max(abs(ref), 1e-3 * imaginary_order_envelope(T, x))
        assert abs(got - ref) <= 1e-10 * scale


def test_real_order_against_mpmath():
    for nu in [0.0, 0.3, 1.0, 2.5, 3.0]:
        for x in [1e-4, 0.1, 1.0, 10.0, 50.0]:
            assert bessel_k(BesselOrder.real(nu), x) == pytest.approx(float(mpmath.besselk(nu, x)), rel=1e-10)


def test_complex_order_against_mpmath():
    for nu in [0.25 + 1j, 1.5 + 4j]:
        for x in [0.2, 2.0, 9.0]:
            ref = complex(mpmath.besselk(nu, x))
            assert abs(bessel_k(BesselOrder("complex", nu), x) - ref) <= 1e-10 * abs(ref)


def test_array_matches_scalar():
    xs = np.geomspace(0.01, 30, 25)
    for order in (BesselOrder.real(1.2), BesselOrder.imaginary(7.0)):
        arr = bessel_k_array(order, xs)
        assert np.allclose(arr, [bessel_k(order, x) for x in xs], rtol=1e-13, atol=0)
    many = k_contour_many(4j, xs).real
    assert np.allclose(many, [k_imag(4.0, x) for x in xs], rtol=1e-9, atol=1e-300)


def test_bad_arguments():
    with pytest.raises(ValueError):
        bessel_k(BesselOrder.real(0.5), 0.0)
    with pytest.raises(ValueError):
        BesselOrder("imaginary", -1.0)
    with pytest.raises(BesselRangeError):
        k_imag(5000.0, 1e-3)


def test_underflow_to_zero():
    assert bessel_k(BesselOrder.real(1.0), 800.0) == 0.0
    assert abs(k_imag(2.0, 800.0)) < 1e-300


@given(st.floats(0.0, 30.0), st.floats(0.01, 40.0))
def test_imaginary_order_is_real(T, x):
    v = bessel_k(BesselOrder.imaginary(T), x)
    assert isinstance(v, float) and math.isfinite(v)


def test_ode_residual_grid():
    for order in [BesselOrder.real(0.0), BesselOrder.real(1.5), BesselOrder.imaginary(1.0),
                  BesselOrder.imaginary(5.0), BesselOrder.imaginary(12.0)]:
        for x in [0.1, 0.5, 2.0, 8.0, 20.0]:
            res, scale = bessel_ode_residual(order, x)
            assert res <= 1e-6 * scale


def test_ode_residual_detects_the_wrong_sign():
    # with nu^2 = +T^2 instead of -T^2 the residual is large
    order = BesselOrder.imaginary(3.0)
    x, h = 2.0, 2e-3
    f = lambda t: k_imag(3.0, t)
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h) - 2 * f(x) + f(x - h)) / h**2
    wrong = abs(x * x * d2 + x * d1 - (x * x + 9.0) * f(x))
    res, scale = bessel_ode_residual(order, x)
    assert wrong > 1e3 * max(res, 1e-300)


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 2.0, 3.0])
def test_real_order_monotone_decay(nu):
    xs = np.geomspace(1e-3, 50, 200)
    vals = bessel_k_array(BesselOrder.real(nu), xs)
    assert np.all(np.diff(vals) < 0)


def test_bound_check_examples():
    assert bessel_k_bound_check(0.0, 1.0, x_grid=np.geomspace(0.01, 20, 12))
    assert math.isfinite(imaginary_order_ratio(10.0, 1.0))
    C = fit_imaginary_order_constant([0.0, 1.0, 5.0, 10.0, 20.0], np.geomspace(0.01, 40, 12))
    for x in (60.0, 100.0, 200.0):
        assert imaginary_order_ratio(3.0, x) < C


def test_bound_constant_stable_under_refinement():
    T_grid = np.array([0.0, 1.0, 4.0, 10.0, 20.0])
    x_grid = np.geomspace(0.01, 40.0, 10)
    c1 = fit_imaginary_order_constant(T_grid, x_grid)
    c2 = fit_imaginary_order_constant(refine_grid(T_grid), refine_grid(x_grid))
    assert c1 <= c2 <= 2 * c1


def test_refine_grid_interleaves():
    g = refine_grid([1.0, 4.0, 16.0])
    assert np.allclose(g, [1, 2, 4, 8, 16])
    assert np.allclose(refine_grid([0.0, 2.0]), [0, 1, 2])


@pytest.mark.parametrize("s,n", [(0.7, 1), (0.9, 1), (1.3, 2), (1.8, 2)])
def test_power_shape_constant_stable(s, n):
    u = np.geomspace(1e-4, 1.0, 20)
    c1 = power_bound_constant(s, n, u)
    c2 = power_bound_constant(s, n, refine_grid(u))
    assert 0 < c1 <= c2 <= 2 * c1


@pytest.mark.parametrize("n,s,delta", [(1, 0.5, 0.0), (2, 1.5, 0.0), (1, 0.8, 0.2), (2, 1 + 3j, 0.3), (3, 2.5, 1.0)])
def test_mellin_closed_form_matches_quadrature(n, s, delta):
    a = mellin_k_integral(n, s, delta)
    b = mellin_k_quadrature(n, s, delta)
    assert abs(a - b) <= 1e-8 * abs(a)


def test_mellin_bounded_away_from_zero_as_delta_grows():
    for n in (1, 2, 3):
        vals = [abs(mellin_k_integral(n, n / 2, d)) for d in np.linspace(0, 0.999, 50)]
        assert min(vals) > 0.1


def test_mellin_errors():
    with pytest.raises(ValueError):
        mellin_k_integral(1, 2.0, 0.0)  # Gamma pole at (2 - 2)/2


def test_zeta_values():
    assert riemann_zeta(2).real == pytest.approx(math.pi**2 / 6, rel=1e-12)
    assert zeta_euler_maclaurin(2).real == pytest.approx(math.pi**2 / 6, rel=1e-12)
    assert zeta_euler_maclaurin(4).real == pytest.approx(math.pi**4 / 90, rel=1e-12)


def _zeta_oracle(s):
    # Euler-Maclaurin on the right half, reflected through the functional equation on the left
    if s.real >= 0.5:
        return zeta_euler_maclaurin(s, N=80, terms=20)
    with mpmath.workdps(30):
        factor = complex(mpmath.power(2, s) * mpmath.power(mpmath.pi, s - 1) * mpmath.sin(mpmath.pi * s / 2)
                         * mpmath.gamma(1 - s))
    return factor * zeta_euler_maclaurin(1 - s, N=80, terms=20)


def test_zeta_routes_agree(rng):
    for _ in range(30):
        s = complex(rng.uniform(-10, 10), rng.uniform(-60, 60))
        if abs(s - 1) < 0.5:
            continue
        a = riemann_zeta(s)
        b = _zeta_oracle(s)
        assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


def test_completed_zeta_functional_equation(rng):
    for _ in range(20):
        s = complex(rng.uniform(-10, 10), rng.uniform(-60, 60))
        a, b = completed_zeta(s), completed_zeta(1 - s)
        assert abs(a - b) <= 1e-10 * abs(a)
    with pytest.raises(ValueError):
        completed_zeta(1.0)
