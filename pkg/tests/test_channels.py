import json

import numpy as np
import pytest

from propsign.channels import (
    DensityMatrix,
    KrausSet,
    amplitude_damping,
    analyze_channel,
    apply_channel,
    as_kraus,
    depolarizing_qubit,
    extract_unitary,
    invert_channel,
    mixture_to_pure_probe,
    proportionality_test,
    purity,
    random_density,
    random_two_kraus,
    random_unitary,
    split_unitary,
)
from propsign.errors import DomainError, NotInvertibleError

SIGMA_Z = np.diag([1.0, -1.0])


def test_identity_channel(rng):
    rho = random_density(3, rng)
    out = apply_channel(as_kraus([np.eye(3)]), rho)
    assert np.allclose(out.entries, rho.entries, atol=1e-15)


def test_depolarizing_pure_state():
    out = apply_channel(depolarizing_qubit(), DensityMatrix.pure([1.0, 0.0]))
    assert np.allclose(out.entries, np.eye(2) / 2, atol=1e-15)
    assert purity(out) == pytest.approx(0.5, abs=1e-15)


def test_linearity_on_mixtures(rng):
    k = random_two_kraus(3, rng)
    r1, r2 = random_density(3, rng), random_density(3, rng)
    p = 0.3
    mixed = apply_channel(k, DensityMatrix(p * r1.entries + (1 - p) * r2.entries))
    parts = p * apply_channel(k, r1).entries + (1 - p) * apply_channel(k, r2).entries
    assert np.max(np.abs(mixed.entries - parts)) <= 1e-12


@pytest.mark.parametrize(
    "rho, expected",
    [
        (DensityMatrix.pure([1, 0]), 1.0),
        (DensityMatrix.maximally_mixed(4), 0.25),
        (DensityMatrix(np.diag([0.5, 0.5])), 0.5),
    ],
)
def test_purity_values(rho, expected):
    assert purity(rho) == pytest.approx(expected, abs=1e-15)


def test_random_outputs_are_states(rng):
    for _ in range(100):
        dim = int(rng.integers(2, 6))
        k = random_two_kraus(dim, rng) if rng.random() < 0.5 else split_unitary(random_unitary(dim, rng), 3, rng)
        out = apply_channel(k, random_density(dim, rng))
        assert abs(np.trace(out.entries) - 1) <= 1e-10
        assert np.linalg.eigvalsh(out.entries).min() >= -1e-10


@pytest.mark.parametrize(
    "matrix",
    [
        np.array([[1.0, 1.0], [0.0, 0.0]]),  # not Hermitian
        np.diag([0.7, 0.7]),  # trace 1.4
        np.array([[1.2, 0.0], [0.0, -0.2]]),  # negative eigenvalue
        np.ones((2, 3)),
    ],
)
def test_density_validation(matrix):
    with pytest.raises(DomainError):
        DensityMatrix(matrix)


def test_completeness_validation():
    with pytest.raises(DomainError, match="completeness"):
        KrausSet((np.eye(2), 0.1 * np.eye(2)))


def test_dimension_cap():
    with pytest.raises(DomainError):
        KrausSet((np.eye(65),))


def test_json_round_trip(rng):
    k = random_two_kraus(3, rng)
    doc = json.loads(json.dumps(k.to_json()))
    back = KrausSet.from_json(doc)
    assert all(np.array_equal(a, b) for a, b in zip(k.ops, back.ops))
    rho = random_density(2, rng)
    assert np.array_equal(DensityMatrix.from_json(rho.to_json()).entries, rho.entries)


def test_proportional_phase_pair(rng):
    u = random_unitary(3, rng)
    k = as_kraus([u / np.sqrt(2), np.exp(1j * np.pi / 3) * u / np.sqrt(2)])
    assert proportionality_test(k, rng=rng) == (True, 0)
    assert proportionality_test(as_kraus([u]), rng=rng) == (True, 0)


def test_phase_flip_not_proportional(rng):
    p = 0.3
    k = as_kraus([np.sqrt(1 - p) * np.eye(2), np.sqrt(p) * SIGMA_Z])
    ok, _ = proportionality_test(k, rng=rng)
    assert not ok
    # |+> is the explicit counterexample: sigma_z |+> = |->
    plus = np.array([1, 1]) / np.sqrt(2)
    assert abs(np.vdot(plus, SIGMA_Z @ plus)) < 1e-15


def test_sample_floor():
    with pytest.raises(DomainError):
        proportionality_test(depolarizing_qubit(), samples=7)


def test_extract_known_unitary(rng):
    u0 = random_unitary(3, rng)
    u, n = extract_unitary(as_kraus([u0 / np.sqrt(2), 1j * u0 / np.sqrt(2)]), rng=rng)
    assert n == pytest.approx(0.5, abs=1e-12)
    overlap = u.conj().T @ u0
    assert np.allclose(overlap, overlap[0, 0] * np.eye(3), atol=1e-12)
    assert abs(abs(overlap[0, 0]) - 1) < 1e-12
    # phase convention: first nonzero entry of column 0 is real positive
    assert u[0, 0].real > 0 and abs(u[0, 0].imag) < 1e-15


def test_extract_identity(rng):
    u, n = extract_unitary(as_kraus([np.eye(2)]), rng=rng)
    assert np.allclose(u, np.eye(2)) and n == 1.0


@pytest.mark.parametrize("kraus", [depolarizing_qubit(), amplitude_damping(0.5)])
def test_not_invertible(kraus, rng):
    with pytest.raises(NotInvertibleError):
        invert_channel(kraus, rng=rng)
    assert analyze_channel(kraus, rng=rng).verdict == "not_invertible"


@pytest.mark.parametrize("pieces", [2, 3, 4])
def test_round_trip(pieces, rng):
    k = split_unitary(random_unitary(4, rng), pieces, rng)
    inv = invert_channel(k, rng=rng)
    for _ in range(20):
        rho = random_density(4, rng)
        back = apply_channel(inv, apply_channel(k, rho))
        assert np.max(np.abs(back.entries - rho.entries)) <= 1e-10
        assert purity(apply_channel(k, rho)) == pytest.approx(purity(rho), abs=1e-9)


def test_report(rng):
    report = analyze_channel(split_unitary(random_unitary(3, rng), 2, rng), rng=rng)
    assert report.verdict == "invertible_unitary"
    assert 0 < report.normalization <= 1
    assert set(report.as_dict()) == {
        "purity_preserving", "proportional", "j_star", "normalization", "unitary_deviation", "verdict"
    }


def test_consistency_two_kraus(rng):
    for _ in range(30):
        k = random_two_kraus(3, rng)
        a, b = k.ops
        assert np.max(np.abs(a @ b - b @ a)) > 1e-6  # rejection criterion holds for generic draws
        assert not proportionality_test(k, rng=rng)[0]


def test_mixture_probe_unitary(rng):
    k = split_unitary(random_unitary(2, rng), 2, rng)
    probe = mixture_to_pure_probe(k, DensityMatrix.pure([1, 0]), DensityMatrix.pure([0, 1]), 0.5)
    assert probe.image_purity < 1 and not probe.one_to_one_violation


def test_mixture_probe_reset_channel():
    reset = as_kraus([np.array([[1, 0], [0, 0]]), np.array([[0, 1], [0, 0]])])
    probe = mixture_to_pure_probe(reset, DensityMatrix.pure([1, 0]), DensityMatrix.pure([0, 1]), 0.5)
    assert probe.image_pure and probe.images_equal and probe.one_to_one_violation


@pytest.mark.parametrize("p", [0.0, 1.0])
def test_mixture_probe_open_interval(p):
    with pytest.raises(DomainError):
        mixture_to_pure_probe(depolarizing_qubit(), DensityMatrix.pure([1, 0]), DensityMatrix.pure([0, 1]), p)
