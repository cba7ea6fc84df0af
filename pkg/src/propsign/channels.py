"""Density matrices, Kraus channels and the invertibility analysis.

A channel rho -> sum_j V_j rho V_j^dagger has a CPTP inverse on all states
only when it is a unitary conjugation. Operationally this shows up as two
sampled properties: every pure state stays pure, and every Kraus operator
acts on every state as a fixed multiple of one distinguished operator
V_{j*}. Both are open conditions, so Haar-random pure states detect a
violation with probability one.

The full-state-space (ontoness) hypothesis behind that equivalence cannot be
certified by sampling; ``analyze_channel`` treats "purity preserving and
proportional" as the criterion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConsistencyError, DomainError, NotInvertibleError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-10
NONZERO_TOL = 1e-8
SPAN_TOL = 1e-8
UNITARY_TOL = 1e-9
MAX_DIM = 64


def _square(matrix, name: str) -> np.ndarray:
    arr = np.array(matrix, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DomainError(f"{name} must be a square matrix")
    if arr.shape[0] > MAX_DIM:
        raise DomainError(f"{name}: dimension {arr.shape[0]} exceeds the cap of {MAX_DIM}")
    return arr


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray = field(repr=False)
    trace_tol: float = field(default=TRACE_TOL, repr=False, compare=False)

    def __post_init__(self):
        rho = _square(self.entries, "density matrix")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise DomainError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > self.trace_tol:
            raise DomainError(f"density matrix trace is {np.trace(rho).real!r}, not 1")
        if np.linalg.eigvalsh(rho).min() < -PSD_TOL:
            raise DomainError("density matrix has a negative eigenvalue")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim) / dim)

    @classmethod
    def from_matrix(cls, matrix) -> "DensityMatrix":
        """Hermitize and renormalize ``matrix`` before validation (absorbs roundoff)."""
        m = np.asarray(matrix, dtype=complex)
        m = 0.5 * (m + m.conj().T)
        return cls(m / np.trace(m).real)

    def to_json(self) -> dict:
        return {"dim": self.dim, "entries": _matrix_to_json(self.entries)}

    @classmethod
    def from_json(cls, doc: dict) -> "DensityMatrix":
        rho = _matrix_from_json(doc["entries"])
        if rho.shape[0] != doc["dim"]:
            raise DomainError("dim does not match the entries")
        return cls(rho)


@dataclass(frozen=True)
class KrausSet:
    ops: tuple = field(repr=False)

    def __post_init__(self):
        if len(self.ops) == 0:
            raise DomainError("a Kraus set needs at least one operator")
        ops = tuple(_square(v, "Kraus operator") for v in self.ops)
        dims = {v.shape[0] for v in ops}
        if len(dims) != 1:
            raise DomainError("Kraus operators have mismatched dimensions")
        for v in ops:
            v.setflags(write=False)
        object.__setattr__(self, "ops", ops)
        deviation = self.completeness_deviation()
        if deviation > COMPLETENESS_TOL:
            raise DomainError(f"Kraus completeness violated: max |sum V^dag V - 1| = {deviation:.3e}")

    @property
    def dim(self) -> int:
        return self.ops[0].shape[0]

    def completeness_deviation(self) -> float:
        total = sum(v.conj().T @ v for v in self.ops)
        return float(np.max(np.abs(total - np.eye(self.dim))))

    def to_json(self) -> dict:
        return {"dim": self.dim, "ops": [_matrix_to_json(v) for v in self.ops]}

    @classmethod
    def from_json(cls, doc: dict) -> "KrausSet":
        ops = [_matrix_from_json(v) for v in doc["ops"]]
        if any(v.shape[0] != doc["dim"] for v in ops):
            raise DomainError("dim does not match the operators")
        return cls(tuple(ops))

    @classmethod
    def loads(cls, text: str) -> "KrausSet":
        return cls.from_json(json.loads(text))


def _matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _matrix_from_json(rows) -> np.ndarray:
    try:
        arr = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"malformed matrix: {exc}") from None
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise DomainError("matrix entries must be [re, im] pairs in row-major rows")
    return arr[..., 0] + 1j * arr[..., 1]


# -- operations ---------------------------------------------------------------


def apply_channel(kraus: KrausSet, rho: DensityMatrix) -> DensityMatrix:
    if kraus.dim != rho.dim:
        raise DomainError(f"channel acts on dim {kraus.dim}, state has dim {rho.dim}")
    out = sum(v @ rho.entries @ v.conj().T for v in kraus.ops)
    # trace drifts from 1 by at most the completeness deviation of the set
    return DensityMatrix(0.5 * (out + out.conj().T), trace_tol=COMPLETENESS_TOL)


def purity(rho: DensityMatrix) -> float:
    """Tr rho^2."""
    r = rho.entries
    return float(np.real(np.vdot(r.conj().T, r)))


def haar_states(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Haar-random unit vectors (rows) from normalized complex Gaussians."""
    z = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _samples(kraus: KrausSet, samples: int | None) -> int:
    needed = 2 * kraus.dim**2
    samples = needed if samples is None else samples
    if samples < needed:
        raise DomainError(f"need at least 2*dim^2 = {needed} samples")
    return samples


def proportionality_test(kraus: KrausSet, samples: int | None = None, rng=None):
    """Return ``(proportional, j_star)`` from sampled pure states.

    j_star is the first operator that is nonzero on every sample; every other
    V_i psi must then lie in the span of V_{j*} psi.
    """
    rng = _rng(rng)
    states = haar_states(kraus.dim, _samples(kraus, samples), rng)
    images = [states @ v.T for v in kraus.ops]  # row s holds V psi_s
    j_star = None
    for j, (v, img) in enumerate(zip(kraus.ops, images)):
        threshold = NONZERO_TOL * max(np.linalg.norm(v, 2), 1e-300)
        if np.all(np.linalg.norm(img, axis=1) > threshold):
            j_star = j
            break
    if j_star is None:
        return False, None
    ref = images[j_star]
    ref_norm2 = np.sum(np.abs(ref) ** 2, axis=1)
    for img in images:
        coeff = np.sum(ref.conj() * img, axis=1) / ref_norm2
        residual = np.linalg.norm(img - coeff[:, None] * ref, axis=1)
        scale = np.linalg.norm(img, axis=1)
        if np.any(residual > SPAN_TOL * np.maximum(scale, 1e-300)):
            return False, j_star
    return True, j_star


def extract_unitary(kraus: KrausSet, samples: int | None = None, rng=None):
    """Return ``(U, N)`` with U = N^{-1/2} V_{j*} unitary and N in (0, 1].

    The global phase of U is fixed by making the first nonzero entry of its
    first column real and positive.
    """
    rng = _rng(rng)
    proportional, j_star = proportionality_test(kraus, samples, rng)
    if not proportional:
        raise NotInvertibleError("Kraus operators are not proportional to a single operator")
    v = kraus.ops[j_star]
    states = haar_states(kraus.dim, _samples(kraus, samples), rng)
    norms2 = np.sum(np.abs(states @ v.T) ** 2, axis=1)
    n = float(norms2.mean())
    if np.max(np.abs(norms2 - n)) > 1e-8:
        raise NotInvertibleError(
            f"|V_j* psi|^2 varies across states by {np.ptp(norms2):.3e}; no unitary extraction"
        )
    if not 0.0 < n <= 1.0 + 1e-12:
        raise NotInvertibleError(f"normalization {n} outside (0, 1]")
    u = v / np.sqrt(n)
    col = u[:, 0]
    lead = col[np.argmax(np.abs(col) > 1e-12)]
    u = u * (abs(lead) / lead)
    deviation = float(np.max(np.abs(u.conj().T @ u - np.eye(kraus.dim))))
    if deviation > UNITARY_TOL:
        raise ConsistencyError(f"extracted operator deviates from unitarity by {deviation:.3e}")
    return u, min(n, 1.0)


def invert_channel(kraus: KrausSet, samples: int | None = None, rng=None) -> KrausSet:
    """Single-operator channel rho -> U^dagger rho U undoing a unitary channel."""
    u, _ = extract_unitary(kraus, samples, rng)
    return KrausSet((u.conj().T,))


@dataclass
class ChannelReport:
    purity_preserving: bool
    proportional: bool
    j_star: int | None
    normalization: float | None
    unitary_deviation: float
    tolerance: float = UNITARY_TOL
    verdict: str = field(init=False)

    def __post_init__(self):
        ok = self.purity_preserving and self.proportional and self.unitary_deviation <= self.tolerance
        self.verdict = "invertible_unitary" if ok else "not_invertible"

    def as_dict(self) -> dict:
        return {
            "purity_preserving": self.purity_preserving,
            "proportional": self.proportional,
            "j_star": self.j_star,
            "normalization": self.normalization,
            "unitary_deviation": self.unitary_deviation,
            "verdict": self.verdict,
        }


def analyze_channel(kraus: KrausSet, samples: int | None = None, rng=None) -> ChannelReport:
    rng = _rng(rng)
    count = _samples(kraus, samples)
    states = haar_states(kraus.dim, count, rng)
    purities = [purity(apply_channel(kraus, DensityMatrix.pure(psi))) for psi in states]
    purity_preserving = bool(min(purities) > 1.0 - 1e-10)
    proportional, j_star = proportionality_test(kraus, count, rng)
    normalization = None
    deviation = float("inf")
    if proportional:
        v = kraus.ops[j_star]
        norms2 = np.sum(np.abs(states @ v.T) ** 2, axis=1)
        normalization = float(norms2.mean())
        u = v / np.sqrt(normalization)
        deviation = float(np.max(np.abs(u.conj().T @ u - np.eye(kraus.dim))))
    return ChannelReport(purity_preserving, proportional, j_star, normalization, deviation)


@dataclass
class MixtureProbe:
    image_purity: float
    image_pure: bool
    images_equal: bool
    one_to_one_violation: bool

    def as_dict(self) -> dict:
        return dict(vars(self))


def mixture_to_pure_probe(kraus: KrausSet, rho1: DensityMatrix, rho2: DensityMatrix,
                          p: float) -> MixtureProbe:
    """Check the mechanism by which a one-to-one channel keeps mixtures mixed.

    If the mixture p rho1 + (1-p) rho2 lands on a pure state, both images
    must coincide with it, so the channel cannot be one-to-one.
    """
    if not 0.0 < p < 1.0:
        raise DomainError("p must lie in the open interval (0, 1)")
    if np.max(np.abs(rho1.entries - rho2.entries)) <= 1e-8:
        raise DomainError("rho1 and rho2 must differ")
    mixture = DensityMatrix(p * rho1.entries + (1 - p) * rho2.entries)
    image = apply_channel(kraus, mixture)
    image_purity = purity(image)
    pure = image_purity > 1.0 - 1e-10
    img1 = apply_channel(kraus, rho1).entries
    img2 = apply_channel(kraus, rho2).entries
    equal = bool(np.max(np.abs(img1 - img2)) <= 1e-10)
    return MixtureProbe(image_purity, bool(pure), equal, bool(pure and equal))


# -- fixtures -----------------------------------------------------------------


def random_unitary(dim: int, rng) -> np.ndarray:
    rng = _rng(rng)
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def split_unitary(u: np.ndarray, pieces: int, rng) -> KrausSet:
    """Kraus set {c_j U} with random phases and weights, sum |c_j|^2 = 1."""
    rng = _rng(rng)
    weights = rng.dirichlet(np.ones(pieces))
    phases = np.exp(2j * np.pi * rng.random(pieces))
    return KrausSet(tuple(np.sqrt(w) * ph * u for w, ph in zip(weights, phases)))


def random_two_kraus(dim: int, rng) -> KrausSet:
    """Generic two-operator channel: V_j = A_j S^{-1/2}, S = sum A^dag A."""
    rng = _rng(rng)
    a = [rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)) for _ in range(2)]
    s = sum(x.conj().T @ x for x in a)
    w, vecs = np.linalg.eigh(s)
    inv_sqrt = vecs @ np.diag(w**-0.5) @ vecs.conj().T
    return KrausSet(tuple(x @ inv_sqrt for x in a))


def depolarizing_qubit() -> KrausSet:
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]])
    z = np.diag([1.0, -1.0]).astype(complex)
    return KrausSet(tuple(0.5 * m for m in (np.eye(2), x, y, z)))


def amplitude_damping(gamma: float) -> KrausSet:
    k0 = np.diag([1.0, np.sqrt(1 - gamma)]).astype(complex)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return KrausSet((k0, k1))


def random_density(dim: int, rng, rank: int | None = None) -> DensityMatrix:
    rng = _rng(rng)
    rank = rank or dim
    z = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    return DensityMatrix.from_matrix(z @ z.conj().T)


def as_kraus(ops: Sequence) -> KrausSet:
    return KrausSet(tuple(ops))
