import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from removability.errors import DomainError, PreconditionError, RangeError
from removability.nonlinearity import (
    anchor,
    big_G,
    big_G_inverse,
    classify_blocks,
    eval_g,
    fenchel_young_gap,
    gamma,
    inverse_derivative,
    iterated_log,
    ko_integral,
    legendre_conjugate,
    log_big_G,
    log_big_G_inverse,
    log_power,
    mu,
    power_law,
)

FAMILIES = [
    power_law(1.5),
    power_law(2.0),
    power_law(4.0),
    log_power(0.5),
    log_power(1.0),
    log_power(3.0),
    iterated_log(0, 2.0, 1),
    iterated_log(1, 2.0, 1),
    iterated_log(2, 3.0, 2),
]


# -- evaluation -----------------------------------------------------------


def test_power_value():
    assert eval_g(power_law(2), 3.0) == 9.0


def test_log_power_at_zero():
    assert eval_g(log_power(1), 0.0) == 0.0


def test_log_power_value_at_e_squared_minus_e():
    t = math.e**2 - math.e
    # e + t = e^2, so g = t * 2^2
    assert eval_g(log_power(2), t) == pytest.approx(4 * t, rel=1e-14)
    assert eval_g(log_power(2), t) == pytest.approx(18.683097081886, rel=1e-12)


def test_negative_argument_rejected():
    with pytest.raises(DomainError):
        eval_g(power_law(2), -1.0)


def test_power_law_needs_exponent_above_one():
    with pytest.raises(DomainError):
        power_law(1.0)


def test_anchor_tower():
    assert anchor(-1) == 1.0
    assert anchor(0) == pytest.approx(math.e)
    assert anchor(1) == pytest.approx(math.exp(math.e))
    assert anchor(2) == pytest.approx(math.exp(math.exp(math.e)))
    assert math.isinf(anchor(3))


@pytest.mark.parametrize("g", FAMILIES, ids=str)
def test_convex_increasing_on_grid(g):
    t = np.geomspace(1e-6, 1e12, 400)
    assert g.value(0.0) == 0.0
    assert np.all(g.value(t) > 0)
    assert np.all(g.derivative(t) > 0)
    assert np.all(g.second_derivative(t) > 0)
    assert np.all(np.diff(g.derivative(t)) > 0)


@pytest.mark.parametrize("g", FAMILIES, ids=str)
def test_derivatives_match_finite_differences(g):
    t = np.array([0.3, 1.7, 12.0, 400.0])
    h = 1e-5 * t
    fd1 = (g.value(t + h) - g.value(t - h)) / (2 * h)
    fd2 = (g.derivative(t + h) - g.derivative(t - h)) / (2 * h)
    np.testing.assert_allclose(g.derivative(t), fd1, rtol=1e-7)
    np.testing.assert_allclose(g.second_derivative(t), fd2, rtol=1e-6)


@pytest.mark.parametrize("g", FAMILIES, ids=str)
def test_second_derivative_at_huge_arguments(g):
    # the curvature terms are far below the smallest normal double here
    t = np.array([1e100, 1e160, 1e250])
    h = 1e-4 * t
    with np.errstate(over="ignore", invalid="ignore"):
        fd2 = (g.derivative(t + h) - g.derivative(t - h)) / (2 * h)
        exact = g.second_derivative(t)
    ok = np.isfinite(fd2)
    np.testing.assert_allclose(exact[ok], fd2[ok], rtol=1e-5)


def test_iterated_log_depth_zero_matches_nested_formula():
    # l = 0: g = t log^m(e + t) log^nu(log(e^e + t))
    g = iterated_log(0, 2.5, 2)
    t = np.array([0.0, 0.5, 3.0, 100.0])
    expected = t * np.log(math.e + t) ** 2 * np.log(np.log(math.exp(math.e) + t)) ** 2.5
    np.testing.assert_allclose(g.value(t), expected, rtol=1e-13)


def test_iterated_log_large_argument_stays_finite():
    g = iterated_log(2, 2.0, 1)
    v = g.value(np.array([1e300]))
    assert np.all(np.isfinite(v)) and v[0] > 1e300 * 0.99


# -- conjugate ------------------------------------------------------------


def test_square_conjugate_closed_form():
    # (g')^{-1}(z) = z / 2 for g = t^2, so g*(xi) = xi^2 / 4
    g = power_law(2)
    assert legendre_conjugate(g, 1.0) == pytest.approx(0.25, rel=1e-12)
    assert legendre_conjugate(g, 0.0) == 0.0
    assert legendre_conjugate(g, 1e7) == pytest.approx(2.5e13, rel=1e-12)


def test_square_conjugate_against_quadrature():
    g = power_law(2)
    xi = np.array([0.1, 3.0, 50.0])
    np.testing.assert_allclose(legendre_conjugate(g, xi, method="quad"), xi**2 / 4, rtol=1e-10)


@pytest.mark.parametrize("lam", [1.5, 3.0, 5.0])
def test_power_conjugate_closed_form(lam):
    g = power_law(lam)
    xi = np.geomspace(1e-3, 1e8, 30)
    expected = (lam - 1) * (xi / lam) ** (lam / (lam - 1))
    np.testing.assert_allclose(legendre_conjugate(g, xi), expected, rtol=1e-9)


def test_log_power_conjugate_below_slope_at_zero():
    assert legendre_conjugate(log_power(1), 0.5) == 0.0
    assert gamma(log_power(3), 0.9) == 0.0


@pytest.mark.parametrize("g", [log_power(1.0), log_power(3.0), iterated_log(1, 2.0, 1)], ids=str)
def test_gl_conjugate_matches_adaptive_quadrature(g):
    xi = np.array([1.01, 1.5, 4.0, 30.0, 900.0])
    np.testing.assert_allclose(
        legendre_conjugate(g, xi), legendre_conjugate(g, xi, method="quad"), rtol=1e-9
    )


def test_conjugate_identity_branch_is_continuous():
    g = log_power(2.0)
    below = legendre_conjugate(g, 1e6 * (1 - 1e-9))
    above = legendre_conjugate(g, 1e6 * (1 + 1e-9))
    assert above == pytest.approx(below, rel=1e-6)


def test_fenchel_young_square_values():
    g = power_law(2)
    assert fenchel_young_gap(g, 0.0, 5.0) == pytest.approx(6.25, rel=1e-12)
    assert fenchel_young_gap(g, 0.0, 0.0) == 0.0
    # equality at b = g'(a)
    assert abs(fenchel_young_gap(g, 2.0, 4.0)) < 1e-12


def test_gamma_square():
    assert gamma(power_law(2), 8.0) == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(DomainError):
        gamma(power_law(2), 0.0)


@pytest.mark.parametrize("g", FAMILIES, ids=str)
def test_inverse_derivative_round_trip(g):
    t = np.geomspace(1e-3, 1e6, 25)
    np.testing.assert_allclose(inverse_derivative(g, g.derivative(t)), t, rtol=1e-10)


@settings(max_examples=60, deadline=None)
@given(
    st.sampled_from(FAMILIES),
    st.floats(0, 100),
    st.floats(0, 100),
)
def test_fenchel_young_nonnegative(g, a, b):
    assert fenchel_young_gap(g, a, b) >= -1e-9 * (1 + a * b)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(FAMILIES), st.floats(0, 50), st.floats(0, 50))
def test_conjugate_midpoint_convex(g, x, y):
    mid = legendre_conjugate(g, 0.5 * (x + y))
    avg = 0.5 * (legendre_conjugate(g, x) + legendre_conjugate(g, y))
    assert mid <= avg + 1e-8 * (1 + abs(avg))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(FAMILIES), st.lists(st.floats(1e-3, 1e4), min_size=2, max_size=8))
def test_gamma_nondecreasing(g, xs):
    xs = np.sort(np.array(xs))
    vals = gamma(g, xs)
    # slopes with no representable preimage give inf, which still orders
    prev, nxt = vals[:-1], vals[1:]
    slack = np.where(np.isinf(prev), 0.0, 1e-10 * (1 + prev))
    assert np.all(nxt >= prev - slack)


# -- mu -------------------------------------------------------------------


def test_mu_values():
    assert mu(power_law(2), 3.0) == pytest.approx(3.0)
    assert mu(power_law(3), 2.0) == pytest.approx(4.0)
    assert mu(log_power(1), 1e-9) == pytest.approx(1.0, rel=1e-8)


@pytest.mark.parametrize("g", FAMILIES, ids=str)
def test_mu_matches_grid_infimum(g):
    for xi in (1e-3, 0.7, 25.0):
        grid = np.geomspace(xi, 1e6 * xi, 10_000)
        brute = np.min(g.value(grid) / grid)
        assert mu(g, xi) == pytest.approx(float(g.value(xi) / xi), rel=1e-10)
        assert mu(g, xi) == pytest.approx(brute, rel=1e-6)


# -- Keller-Osserman integral and G ---------------------------------------


def test_ko_square_value():
    report = ko_integral(power_law(2), 1)
    assert report.finite
    assert report.value == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("lam", [1.1, 2.0, 5.0])
def test_ko_power_always_finite(lam, m):
    report = ko_integral(power_law(lam), m)
    assert report.finite
    assert report.value == pytest.approx(m / (lam - 1), rel=1e-8)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_ko_log_power_rule(m):
    for nu, finite in [(m - 0.5, False), (m, False), (m + 0.5, True), (2 * m, True)]:
        assert ko_integral(log_power(nu), m).finite is finite


@pytest.mark.parametrize("m", [1, 2])
def test_ko_iterated_log_rule(m):
    for l in (0, 1, 2):
        assert not ko_integral(iterated_log(l, m, m), m).finite
        assert ko_integral(iterated_log(l, 2.0 * m, m), m).finite


@pytest.mark.parametrize("a, m", [(1, 2), (2, 3), (2, 1), (3, 2)])
def test_ko_iterated_log_exponent_mismatch(a, m):
    # the leading factor log(e + z)^(-a/m) decides, whatever nu is
    for l in (0, 1):
        for nu in (0.5, 5.0):
            report = ko_integral(iterated_log(l, nu, a), m)
            assert report.finite is (a > m)
            if report.finite:
                assert 0 < big_G(iterated_log(l, nu, a), m, 1.0) < 100


def test_ko_value_against_quadrature():
    g, m = log_power(3.0), 1
    val, _ = integrate.quad(lambda s: math.exp(-g.log_quotient_at_log(s) / m), 0, math.inf, limit=500)
    assert ko_integral(g, m).value == pytest.approx(val, rel=1e-7)


def test_classify_blocks_synthetic():
    j = np.arange(61) + 0.5
    assert classify_blocks(2.0 ** -np.arange(61))[0] == "Finite"
    assert classify_blocks(j**-2.0)[0] == "Finite"
    assert classify_blocks(j**-0.5)[0] == "Divergent"
    verdict, p, _, warning, _ = classify_blocks(j**-1.0)
    assert verdict == "Divergent" and warning is not None and abs(p - 1) < 0.05


def test_G_power_examples():
    assert big_G(power_law(2), 1, 2.0) == pytest.approx(0.5, rel=1e-12)
    assert big_G(power_law(3), 1, 1.0) == pytest.approx(0.5, rel=1e-12)
    assert big_G_inverse(power_law(2), 1, 0.5) == pytest.approx(2.0, rel=1e-12)
    assert big_G_inverse(power_law(3), 2, 4.0) == pytest.approx(0.25, rel=1e-12)


@pytest.mark.parametrize("lam,m", [(1.5, 1), (2.0, 2), (3.0, 1), (4.0, 3)])
def test_G_power_closed_form(lam, m):
    t = np.geomspace(1e-3, 1e3, 50)
    expected = m / (lam - 1) * t ** (-(lam - 1) / m)
    np.testing.assert_allclose(big_G(power_law(lam), m, t), expected, rtol=1e-10)


def test_G_against_quadrature():
    g, m = log_power(2.5), 2

    def integrand(z):
        return g.value(z) ** (-1 / m) * z ** (1 / m - 1)

    for t in (0.5, 3.0, 40.0):
        tail, _ = integrate.quad(lambda s: math.exp(-g.log_quotient_at_log(s) / m), math.log(t), math.inf, limit=500)
        head, _ = integrate.quad(integrand, t, 2 * t)
        assert big_G(g, m, t) == pytest.approx(tail, rel=1e-8)
        assert big_G(g, m, t) - big_G(g, m, 2 * t) == pytest.approx(head, rel=1e-8)


@pytest.mark.parametrize("g", [g for g in FAMILIES if ko_integral(g, 1).finite], ids=str)
def test_G_decreasing_and_round_trip(g):
    t = np.geomspace(1e-2, 1e2, 40)
    G = big_G(g, 1, t)
    assert np.all(np.diff(G) < 0)
    np.testing.assert_allclose(big_G_inverse(g, 1, G), t, rtol=1e-8)
    assert big_G_inverse(g, 1, big_G(g, 1, 7.0)) == pytest.approx(7.0, rel=1e-7)


def test_log_inverse_beyond_table_is_continuous():
    g, m = log_power(2.0), 1
    s = log_big_G_inverse(g, m, np.array([740.0, 746.0, 800.0, 1e4]))
    assert np.all(np.diff(s) < 0)
    # G(t) ~ log(1/t) for small t
    assert log_big_G(g, m, -700.0) == pytest.approx(log_big_G(g, m, -600.0) + 100.0, rel=1e-9)


def test_G_needs_finite_ko():
    with pytest.raises(PreconditionError):
        big_G(log_power(1.0), 1, 1.0)


def test_G_inverse_range_error():
    with pytest.raises(RangeError) as info:
        big_G_inverse(power_law(2), 1, -1.0)
    assert info.value.interval is not None
