import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from propsign.errors import AccuracyError, DomainError, EvaluationError
from propsign.numkit import (
    RuleKind,
    bessel_j0,
    bessel_j1,
    erfi,
    gauss_legendre,
    gr_3876_1_check,
    gr_6677_6_check,
    identity_lattice,
    integrate_1d,
    integrate_semi_infinite,
    step,
    tanh_sinh,
    trapezoid,
)

mpmath.mp.dps = 40


def series_j(order, z):
    """Power series of J_order summed at 40 digits until the terms vanish."""
    z = mpmath.mpf(z)
    half = z / 2
    total = mpmath.mpf(0)
    m = 0
    while True:
        term = (-1) ** m * half ** (2 * m + order) / (mpmath.factorial(m) * mpmath.factorial(m + order))
        total += term
        if m > 10 and abs(term) < mpmath.mpf(10) ** -35:
            return float(total)
        m += 1


def series_erfi(x):
    x = mpmath.mpf(x)
    total = mpmath.mpf(0)
    m = 0
    while True:
        term = x ** (2 * m + 1) / (mpmath.factorial(m) * (2 * m + 1))
        total += term
        if m > 5 and abs(term) < abs(total) * mpmath.mpf(10) ** -30:
            return float(2 / mpmath.sqrt(mpmath.pi) * total)
        m += 1


@pytest.mark.parametrize(
    "fn, z, expected",
    [
        (bessel_j0, 0.0, 1.0),
        (bessel_j0, 1.0, 0.7651976866),
        (bessel_j0, 2.0, 0.2238907791),
        (bessel_j1, 0.0, 0.0),
        (bessel_j1, 1.0, 0.4400505857),
    ],
)
def test_bessel_values(fn, z, expected):
    assert fn(z) == pytest.approx(expected, abs=1e-10)


def test_bessel_matches_series_oracle(rng):
    z = rng.uniform(0.0, 30.0, 1000)
    j0 = bessel_j0(z)
    worst = max(abs(j0[i] - series_j(0, z[i])) for i in range(z.size))
    assert worst <= 1e-9


@pytest.mark.parametrize("z", [0.5, 7.3, 11.9, 12.0, 12.1, 25.0, 37.7, 49.9])
def test_bessel_both_orders_to_50(z):
    assert abs(bessel_j0(z) - series_j(0, z)) <= 1e-10
    assert abs(bessel_j1(z) - series_j(1, z)) <= 1e-10


def test_bessel_branches_agree_at_switch():
    # evaluate just either side of the switchover; J0 is smooth there
    left, right = bessel_j0(12.0 - 1e-12), bessel_j0(12.0 + 1e-12)
    assert abs(left - right) <= 1e-10


def test_derivative_identity_at_13():
    h = 1e-5
    slope = (bessel_j0(1.3 + h) - bessel_j0(1.3 - h)) / (2 * h)
    assert slope == pytest.approx(-bessel_j1(1.3), abs=1e-8)


def test_derivative_identity_on_range():
    z = np.linspace(0.1, 20.0, 400)
    h = 1e-5
    slope = (bessel_j0(z + h) - bessel_j0(z - h)) / (2 * h)
    assert np.max(np.abs(slope + bessel_j1(z))) <= 1e-7


@pytest.mark.parametrize("fn", [bessel_j0, bessel_j1, erfi])
@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_nonfinite_rejected(fn, bad):
    with pytest.raises(DomainError):
        fn(bad)


def test_erfi_values():
    assert erfi(0.0) == 0.0
    assert erfi(1.0) == pytest.approx(1.6504257588, abs=1e-9)


@pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 2.5, 4.0, 5.5, 6.0])
def test_erfi_against_series(x):
    # erfi(6) is about 1.7e14, so the accuracy statement is relative
    ref = series_erfi(x)
    assert abs(erfi(x) - ref) <= 1e-9 * max(1.0, abs(ref))


@given(st.floats(min_value=-6.0, max_value=6.0, allow_nan=False))
def test_erfi_odd(x):
    assert erfi(-x) + erfi(x) == 0.0


def test_erfi_range():
    with pytest.raises(DomainError):
        erfi(6.5)


def test_step_half_at_zero():
    assert (step(-1.0), step(0.0), step(2.0)) == (0.0, 0.5, 1.0)


@pytest.mark.parametrize("rule", [gauss_legendre(8), gauss_legendre(20), tanh_sinh(), trapezoid()])
def test_rule_integrates_constant(rule):
    assert integrate_1d(lambda x: np.ones_like(x), -0.5, 2.5, rule) == pytest.approx(3.0, rel=1e-12)
    assert rule.size == len(rule.weights)


def test_positive_weights():
    assert np.all(gauss_legendre(30).weights > 0)
    assert np.all(tanh_sinh().weights > 0)
    assert tanh_sinh().kind is RuleKind.TANH_SINH


def test_polynomial_exactness():
    assert integrate_1d(lambda x: x**3, 0.0, 1.0, gauss_legendre(8)) == pytest.approx(0.25, abs=1e-14)
    assert integrate_1d(lambda x: x**15, 0.0, 1.0, gauss_legendre(8)) == pytest.approx(1 / 16, abs=1e-14)


def test_sine_and_complex():
    assert integrate_1d(np.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-10)
    assert integrate_1d(lambda x: np.exp(1j * x), 0.0, math.pi) == pytest.approx(2j, abs=1e-10)


def test_nonfinite_node_reported():
    with pytest.raises(EvaluationError) as info:
        integrate_1d(lambda x: np.where(x > 0.5, np.nan, x), 0.0, 1.0)
    assert info.value.node > 0.5


@pytest.mark.parametrize(
    "f, scale, expected, tol",
    [
        (lambda t: np.exp(-t), 1.0, 1.0, 1e-10),
        (lambda t: np.exp(-2 * t) * np.cos(3 * t), 0.5, 2 / 13, 1e-9),
        (lambda t: t * np.exp(-t), 1.0, 1.0, 1e-9),
    ],
)
def test_semi_infinite(f, scale, expected, tol):
    assert integrate_semi_infinite(f, scale) == pytest.approx(expected, abs=tol)


def test_semi_infinite_detects_growth():
    with pytest.raises(AccuracyError):
        integrate_semi_infinite(lambda t: np.exp(-0.01 * t), 1.0)


def test_semi_infinite_batched_rows():
    rates = np.array([1.0, 2.0, 4.0])
    values = integrate_semi_infinite(lambda t: np.exp(-rates[:, None] * t[None, :]), 1.0)
    assert np.allclose(values, 1 / rates, atol=1e-12)


@pytest.mark.parametrize(
    "args, rhs",
    [
        ((1.0, 2.0, 1.0), 0.5 * math.pi * float(mpmath.besselj(0, math.sqrt(3)))),
        ((1.0, 1.0, 3.0), 0.0),
        ((1.0, 2.0, 2.0), math.pi / 4),
    ],
)
def test_gr_3876_1_examples(args, rhs):
    lhs, closed = gr_3876_1_check(*args)
    assert closed == pytest.approx(rhs, abs=1e-12)
    assert abs(lhs - closed) <= 1e-5


@pytest.mark.parametrize(
    "args, rhs",
    [
        ((1.0, 2.0, 0.0), math.sin(2.0)),
        ((2.0, 1.0, 1.0), math.sin(math.sqrt(5)) / math.sqrt(5)),
        ((1.0, 1e-9, 0.0), math.sin(1e-9)),  # dt -> 0+: both sides vanish
    ],
)
def test_gr_6677_6_examples(args, rhs):
    lhs, closed = gr_6677_6_check(*args)
    assert closed == pytest.approx(rhs, abs=1e-12)
    assert abs(lhs - closed) <= 1e-8


def test_gr_3876_1_lhs_by_mpmath():
    # independent oscillatory quadrature of the same integral
    m, dt, r = 1.0, 2.0, 0.5

    def integrand(u):
        w = mpmath.sqrt(u * u + m * m)
        return mpmath.sin(dt * w) / w * mpmath.cos(r * u)

    mpmath.mp.dps = 20
    try:
        ref = mpmath.quadosc(integrand, [0, mpmath.inf], omega=dt + r)
    finally:
        mpmath.mp.dps = 40
    lhs, _ = gr_3876_1_check(m, dt, r)
    assert lhs == pytest.approx(float(ref), abs=1e-8)


def test_identity_lattice():
    first, second = identity_lattice()
    assert len(first) == len(second) == 125
    assert any(dt == r for _, dt, r in first)
    for p in first:
        lhs, rhs = gr_3876_1_check(*p)
        assert abs(lhs - rhs) <= 1e-5, p
    for p in second:
        lhs, rhs = gr_6677_6_check(*p)
        assert abs(lhs - rhs) <= 1e-8, p


@settings(max_examples=25, deadline=None)
@given(
    st.floats(0.3, 3.0), st.floats(0.2, 3.0), st.floats(0.0, 5.0),
)
def test_gr_6677_6_property(m, dt, s):
    lhs, rhs = gr_6677_6_check(m, dt, s)
    assert abs(lhs - rhs) <= 1e-8


def test_identity_domain():
    with pytest.raises(DomainError):
        gr_3876_1_check(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        gr_6677_6_check(1.0, -1.0, 0.0)
