import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from propsign.channels import DensityMatrix, purity, random_density
from propsign.covmap import (
    MomentumBasis,
    PState,
    default_witness_fixture,
    gaussian_backward,
    gaussian_forward,
    master_bracket,
    nononto_witness,
    purity_rate,
    sigma_multipliers,
    sigma_pm,
    witness_closed_form,
)
from propsign.errors import DomainError, RangeError, WitnessInconclusiveError
from propsign.numkit import erfi


def gaussian_kernel_quad(delta, tau):
    """(1 / (2 sqrt(pi tau))) int e^{-u^2/4tau} e^{-i delta u} du over the real line."""
    re = quad(lambda u: math.exp(-u * u / (4 * tau)) * math.cos(delta * u), -np.inf, np.inf)[0]
    im = quad(lambda u: -math.exp(-u * u / (4 * tau)) * math.sin(delta * u), -np.inf, np.inf)[0]
    return complex(re, im) / (2 * math.sqrt(math.pi * tau))


@pytest.fixture
def basis3():
    return MomentumBasis([0.0, 1.0, 2.0])


def _state(basis, rng):
    return PState(basis, random_density(basis.dim, rng))


def test_forward_multiplier_matches_quadrature():
    basis = MomentumBasis([0.0, 1.0])
    rho = DensityMatrix(np.array([[0.5, 0.5], [0.5, 0.5]]))
    out = gaussian_forward(PState(basis, rho), 0.5).rho.entries
    assert out[0, 0] == 0.5
    assert out[0, 1] == pytest.approx(0.5 * math.exp(-0.5), abs=1e-15)
    assert out[0, 1] / 0.5 == pytest.approx(gaussian_kernel_quad(1.0, 0.5), abs=1e-10)


def test_backward_multiplier():
    basis = MomentumBasis([0.0, 2.0])
    out = gaussian_backward(np.ones((2, 2)), basis, 1.0)
    assert out[0, 1] == pytest.approx(math.exp(4.0), rel=1e-15)
    assert out[0, 1] == pytest.approx(1 / gaussian_kernel_quad(2.0, 1.0).real, rel=1e-8)


def test_small_tau_is_identity(basis3, rng):
    s = _state(basis3, rng)
    out = gaussian_forward(s, 1e-15)
    assert np.max(np.abs(out.rho.entries - s.rho.entries)) <= 1e-12


def test_round_trip(basis3, rng):
    for _ in range(20):
        s = _state(basis3, rng)
        back = gaussian_backward(gaussian_forward(s, 0.8).rho, basis3, 0.8)
        assert np.max(np.abs(back - s.rho.entries)) <= 1e-12


def test_backward_identity_unchanged(basis3):
    assert np.array_equal(gaussian_backward(np.eye(3), basis3, 2.0), np.eye(3))


def test_backward_overflow_guard(basis3):
    with pytest.raises(RangeError):
        gaussian_backward(np.eye(3), basis3, 200.0)


def test_injective(basis3, rng):
    for _ in range(20):
        a, b = _state(basis3, rng), _state(basis3, rng)
        fa = gaussian_forward(a, 1.0).rho.entries
        # distinct states keep distinct images
        assert np.max(np.abs(fa - gaussian_forward(b, 1.0).rho.entries)) > 1e-6
        # any state sharing the image of a coincides with a
        twin = PState(basis3, DensityMatrix(gaussian_backward(fa, basis3, 1.0)))
        assert np.max(np.abs(gaussian_forward(twin, 1.0).rho.entries - fa)) <= 1e-15
        assert np.max(np.abs(twin.rho.entries - a.rho.entries)) <= 1e-12


def test_semigroup(basis3, rng):
    s = _state(basis3, rng)
    twice = gaussian_forward(gaussian_forward(s, 0.3), 0.5).rho.entries
    once = gaussian_forward(s, 0.8).rho.entries
    assert np.max(np.abs(twice - once)) <= 1e-12


def test_master_equation(basis3, rng):
    s = _state(basis3, rng)
    h = 1e-6
    slope = (gaussian_forward(s, h).rho.entries - s.rho.entries) / h
    lp = np.diag(basis3.scalars).astype(complex)
    expected = -master_bracket(lp, s.rho.entries, lp)
    mask = np.abs(expected) > 1e-12
    assert np.all(np.abs(slope[mask] - expected[mask]) <= 1e-4 * np.abs(expected[mask]))
    assert np.all(np.abs(slope[~mask]) <= 1e-9)


def test_four_momentum_contraction():
    lam = np.array([1.0, 0.5, 0.0, 0.0])
    basis = MomentumBasis.from_four_momenta([[2.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 3.0]], lam)
    assert np.allclose(basis.scalars, [2.0 - 0.5, 1.0])


def test_degenerate_scalars_flagged():
    with pytest.raises(DomainError):
        MomentumBasis([1.0, 1.0])
    assert MomentumBasis([1.0, 1.0], degenerate=True).dim == 2


def test_purity_rate_examples():
    assert purity_rate([0.0, 1.0, 0.0], [0.0, 1.0, 2.0]) == 0.0
    psi = np.array([1.0, 1.0]) / math.sqrt(2)
    assert purity_rate(psi, [0.0, 1.0]) == pytest.approx(-1.0, abs=1e-15)
    assert purity_rate(psi, [0.0, 2.0]) == pytest.approx(-4.0, abs=1e-15)


def test_purity_rate_finite_difference(basis3, rng):
    for _ in range(10):
        z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        z /= np.linalg.norm(z)
        state = PState(basis3, DensityMatrix.pure(z))
        tau = 1e-6
        slope = (purity(gaussian_forward(state, tau).rho) - 1.0) / tau
        rate = purity_rate(z, basis3.scalars)
        assert slope == pytest.approx(rate, rel=1e-4)


def test_sigma_decomposition(basis3, rng):
    for _ in range(5):
        z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        z /= np.linalg.norm(z)
        plus, minus = sigma_pm(z, basis3, 0.7, 1), sigma_pm(z, basis3, 0.7, -1)
        direct = gaussian_forward(PState(basis3, DensityMatrix.pure(z)), 0.7).rho.entries
        assert np.max(np.abs(0.5 * (plus.entries + minus.entries) - direct)) <= 1e-9
        assert abs(np.trace(plus.entries) - 1) <= 1e-10


@pytest.mark.parametrize("sign", [1, -1])
def test_sigma_multipliers_closed_form(basis3, sign):
    tau = 0.9
    delta = basis3.differences()
    expected = np.exp(-delta**2 * tau) * (1 - sign * 1j * erfi(delta * math.sqrt(tau)))
    assert np.allclose(sigma_multipliers(basis3, tau, sign), expected, atol=1e-12)


def test_sigma_eigenvector(basis3):
    psi = np.array([0.0, 1j, 0.0])
    for sign in (1, -1):
        assert np.allclose(sigma_pm(psi, basis3, 1.0, sign).entries, np.outer(psi, psi.conj()), atol=1e-13)


def test_default_witness():
    report = nononto_witness(*default_witness_fixture())
    assert min(report.w_plus, report.w_minus) < -1e-4
    assert report.w_plus + report.w_minus == pytest.approx(0.0, abs=1e-8)
    assert report.route_gap <= 1e-6
    # the fixture value in closed form
    expected = math.sqrt(3) / 9 * (erfi(2.0) - 2 * erfi(1.0))
    assert report.w_plus == pytest.approx(expected, rel=1e-12)
    assert report.verdict == "not_onto"
    assert set(report.as_dict()) == {"tau", "lambda_scalars", "w_plus", "w_minus", "verdict"}


def test_witness_zero_lambda():
    psi, phi, _, tau = default_witness_fixture()
    with pytest.raises(WitnessInconclusiveError):
        nononto_witness(psi, phi, MomentumBasis([0.0, 0.0, 0.0], degenerate=True), tau)


def test_witness_requires_orthogonality():
    # the two-level pair (|1> + |2>)/sqrt2, (|1> - i|2>)/sqrt2 overlaps
    psi = np.array([1.0, 1.0]) / math.sqrt(2)
    phi = np.array([1.0, -1j]) / math.sqrt(2)
    with pytest.raises(DomainError):
        nononto_witness(psi, phi, MomentumBasis([0.0, 1.0]), 1.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0.05, 1.5), st.floats(0.1, 3.0))
def test_two_levels_never_witness(theta, angle, tau):
    # any orthogonal pair on two levels has a real c_1 c_2^*, so the cross term vanishes
    psi = np.array([math.cos(angle), math.sin(angle) * np.exp(1j * theta)])
    phi = np.array([-np.conj(psi[1]), np.conj(psi[0])])
    w_plus, w_minus = witness_closed_form(psi, phi, MomentumBasis([0.0, 1.0]), tau)
    assert abs(w_plus) < 1e-12 and abs(w_minus) < 1e-12


def test_unnormalized_rejected(basis3):
    with pytest.raises(DomainError):
        purity_rate([1.0, 1.0, 0.0], basis3.scalars)
    with pytest.raises(DomainError):
        gaussian_forward(PState(basis3, DensityMatrix.maximally_mixed(3)), 0.0)
