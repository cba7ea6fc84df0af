"""Rotating-wave dissipative dynamics for a charged scalar field.

Each momentum mode of the particle (a) and antiparticle (b) sector evolves
independently. In the Heisenberg picture the lowering operator of sector l
obeys

    C_l1(t) = exp((r_l - i w) t) C_l1,   r_l = c (|h_l1|^2 - |h_l2|^2),   c = (2pi)^3 2 w,

so |h_l1|^2 drives growth and |h_l2|^2 damping. Two-time vacuum averages have
the closed form implemented by ``two_time_average``; ``lindblad_oracle``
recomputes them from a truncated-Fock generator.

Indices follow C_11 = C_12^dag = a and C_21 = C_22^dag = b.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
import numpy as np
from scipy.linalg import expm

from .errors import AccuracyError, DomainError, RangeError
from .fields import FOUR_PI, TWO_PI_CUBED, FieldConfig, Spatial, _check_converged
from .numkit import gauss_legendre, integrate_semi_infinite

LEAKAGE_TOL = 1e-8
_GL20 = gauss_legendre(20)


# -- model ---------------------------------------------------------------------


@dataclass(frozen=True)
class Coupling:
    """|h(k)|^2 as a function of |k|: constant, or amplitude * exp(-k^2 / (2 width^2))."""

    kind: str = "constant"
    params: dict = field(default_factory=lambda: {"value": 0.0})

    def __post_init__(self):
        if self.kind == "constant":
            need = {"value"}
        elif self.kind == "gaussian":
            need = {"amplitude", "width"}
        else:
            raise DomainError(f"unknown coupling kind {self.kind!r}")
        if set(self.params) != need:
            raise DomainError(f"{self.kind} coupling takes parameters {sorted(need)}")
        values = {k: float(v) for k, v in self.params.items()}
        if any(not math.isfinite(v) or v < 0 for v in values.values()):
            raise DomainError("coupling parameters must be finite and nonnegative")
        if self.kind == "gaussian" and values["width"] == 0:
            raise DomainError("gaussian coupling needs width > 0")
        object.__setattr__(self, "params", values)

    @classmethod
    def constant(cls, value: float) -> "Coupling":
        return cls("constant", {"value": value})

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        if self.kind == "constant":
            return np.full(k.shape, self.params["value"])[()]
        width = self.params["width"]
        return (self.params["amplitude"] * np.exp(-0.5 * (k / width) ** 2))[()]

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}


@dataclass(frozen=True)
class RwaModel:
    mass: float = 1.0
    h11: Coupling = field(default_factory=Coupling)
    h12: Coupling = field(default_factory=Coupling)
    h21: Coupling = field(default_factory=Coupling)
    h22: Coupling = field(default_factory=Coupling)
    mode_volume: float = 1.0

    def __post_init__(self):
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise DomainError("mass must be positive")
        if not (self.mode_volume > 0 and math.isfinite(self.mode_volume)):
            raise DomainError("mode_volume must be positive")

    def omega(self, k):
        return np.hypot(k, self.mass)

    def norm_factor(self, k):
        """(2pi)^3 2 w_k, the continuum normalization of [a_k, a_k^dag]."""
        return TWO_PI_CUBED * 2.0 * self.omega(k)

    def h2(self, l: int, m: int, k):
        return {(1, 1): self.h11, (1, 2): self.h12, (2, 1): self.h21, (2, 2): self.h22}[(l, m)](k)

    def rate(self, l: int, k):
        """r_l(k) = (2pi)^3 2 w (|h_l1|^2 - |h_l2|^2): growth rate of C_l1(t)."""
        return self.norm_factor(k) * (self.h2(l, 1, k) - self.h2(l, 2, k))

    def pumped(self, k_samples=None) -> bool:
        """True if some sector grows (|h_l1|^2 > |h_l2|^2) at a sampled |k|."""
        k = np.linspace(0.0, 20.0 * self.mass, 201) if k_samples is None else np.asarray(k_samples)
        return bool(any(np.any(self.rate(l, k) > 0) for l in (1, 2)))

    @classmethod
    def from_json(cls, doc: dict) -> "RwaModel":
        try:
            h2 = doc["h2"]
            couplings = {
                name: Coupling(h2[name]["kind"], dict(h2[name]["params"]))
                for name in ("h11", "h12", "h21", "h22")
            }
            return cls(float(doc["mass"]), mode_volume=float(doc["mode_volume"]), **couplings)
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed model document: missing or invalid {exc}") from None

    @classmethod
    def loads(cls, text: str) -> "RwaModel":
        return cls.from_json(json.loads(text))

    def to_json(self) -> dict:
        return {
            "mass": self.mass,
            "mode_volume": self.mode_volume,
            "h2": {n: getattr(self, n).to_json() for n in ("h11", "h12", "h21", "h22")},
        }


def discrete_model(k: float, gammas, mass: float = 1.0) -> RwaModel:
    """Constant couplings chosen so that the single-mode rates c |h_lm|^2 at |k| equal ``gammas``.

    ``gammas`` is (g11, g12, g21, g22).
    """
    c = TWO_PI_CUBED * 2.0 * math.hypot(k, mass)
    h = [Coupling.constant(g / c) for g in gammas]
    return RwaModel(mass, *h)


# -- closed forms ----------------------------------------------------------------


@dataclass(frozen=True)
class TwoTimeQuery:
    i: int
    j: int
    l: int
    m: int
    k_norm: float
    t_prime: float
    t_doubleprime: float
    tau: float

    def __post_init__(self):
        if any(x not in (1, 2) for x in (self.i, self.j, self.l, self.m)):
            raise DomainError("operator indices must be 1 or 2")
        if not self.k_norm >= 0:
            raise DomainError("k_norm must be nonnegative")
        if not min(self.t_prime, self.t_doubleprime, self.tau) >= 0:
            raise DomainError("reduced dynamics only runs forward: times must be >= 0")

    @property
    def indices(self) -> tuple:
        return (self.i, self.j, self.l, self.m)


@dataclass(frozen=True)
class TransformPair:
    G1: complex
    G2: complex


def chi(l: int, k1: float, k2: float, t1: float, t2: float, model: RwaModel) -> float:
    if min(t1, t2) < 0:
        raise DomainError("times must be >= 0")
    return float(model.rate(l, k1) * t1 + model.rate(l, k2) * t2)


def expm1_ratio(x):
    """(e^x - 1) / x, equal to 1 at x = 0."""
    x = np.asarray(x, dtype=float)
    safe = np.where(x == 0, 1.0, x)
    return np.where(x == 0, 1.0, np.expm1(safe) / safe)[()]


def _selected(i, j, l, m) -> bool:
    return i == l and j != m


def _g(i, j, l, m, k, t1, t2, tau, model: RwaModel):
    """Vectorized g_ijlm(t', t'', tau) on a common mode |k|."""
    t1, t2, tau = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (t1, t2, tau)))
    if not _selected(i, j, l, m):
        return np.zeros(t1.shape, dtype=complex)[()]
    w = model.omega(k)
    c = model.norm_factor(k)
    r = model.rate(l, k)
    a = 1 - 2 * (j == 1)
    b = 1 - 2 * (m == 1)
    first = float((j != 2) and (m != 1))
    chi_tt = 2.0 * r * tau
    bracket = first * np.exp(1j * w * (a + b) * tau + chi_tt) + 2.0 * c * model.h2(l, m, k) * tau * expm1_ratio(chi_tt)
    return (c * np.exp(r * (t1 + t2) + 1j * w * (a * t1 + b * t2)) * bracket)[()]


def two_time_average(q: TwoTimeQuery, model: RwaModel) -> complex:
    """Coefficient g_ijlm of the vacuum average <Gamma_tau(C_ij(k', t') C_lm(k'', t''))>.

    The full average is delta_il (1 - delta_jm) delta^3(k' - k'') g_ijlm; the
    value returned includes the (2pi)^3 2 w normalization and is exactly 0 when
    the selection rule fails.
    """
    return complex(_g(*q.indices, q.k_norm, q.t_prime, q.t_doubleprime, q.tau, model))


def closed_form_G(which: int, i, j, l, m, omega1, omega2, k, model: RwaModel) -> complex:
    """Analytic double Laplace transform of g (see ``laplace_G``)."""
    if not _selected(i, j, l, m):
        return 0j
    w = model.omega(k)
    c = model.norm_factor(k)
    r = model.rate(l, k)
    a = 1 - 2 * (j == 1)
    b = 1 - 2 * (m == 1)
    first = float((j != 2) and (m != 1))
    phase = a if which == 1 else b
    outer = c / (omega1 - r - 1j * w * phase)
    inner = first / (omega2 - 2.0 * r - 1j * w * (a + b))
    inner += 2.0 * c * model.h2(l, m, k) / (omega2 * (omega2 - 2.0 * r))
    return complex(outer * inner)


def rwa_sign_closed_form(i: int, omega_bar: float, k: float, model: RwaModel) -> float:
    """Re[G1 + G2] at (w_bar, 2 w_bar) for sector i; nonnegative by construction.

    (c/2) [1 + c (|h_i1|^2 + |h_i2|^2) / w_bar] / (w^2 + (w_bar - r_i)^2)
    """
    if not omega_bar > 0:
        raise DomainError("omega_bar must be positive")
    if i not in (1, 2):
        raise DomainError("sector index must be 1 or 2")
    w = model.omega(k)
    c = model.norm_factor(k)
    total = model.h2(i, 1, k) + model.h2(i, 2, k)
    return float(0.5 * c * (1.0 + c * total / omega_bar) / (w * w + (omega_bar - model.rate(i, k)) ** 2))


def sector_indices(i: int) -> tuple[tuple, tuple]:
    """(i, i, i, j) for G1 and (i, j, i, i) for G2, with j the other index."""
    j = 3 - i
    return (i, i, i, j), (i, j, i, i)


def laplace_G(which: int, i, j, l, m, omega1, omega2, k, model: RwaModel) -> complex:
    """G^(which)_ijlm(w1, w2, k) by iterated semi-infinite quadrature of g.

    which=1 integrates g(t1, 0, t2), which=2 integrates g(0, t1, t2).
    """
    if which not in (1, 2):
        raise DomainError("which must be 1 or 2")
    if not (omega1 > 0 and omega2 > 0):
        raise DomainError("Laplace variables must be positive")
    r = float(model.rate(l, k))
    rate1 = omega1 - r
    rate2 = omega2 - max(2.0 * r, 0.0)
    if rate1 <= 0:
        raise RangeError(f"t1 integrand grows: omega1={omega1:g} <= chi rate {r:g}")
    if rate2 <= 0:
        raise RangeError(f"t2 integrand grows: omega2={omega2:g} <= chi rate {2 * r:g}")
    w = float(model.omega(k))

    def panels(rate):
        # four panels per oscillation period over the truncated range
        return max(40, 4 * math.ceil(40.0 * w / (rate * 2.0 * math.pi)))

    def over_t2(t1_nodes):
        def inner(t2):
            t1 = t1_nodes[:, None]
            args = (t1, 0.0, t2[None, :]) if which == 1 else (0.0, t1, t2[None, :])
            return _g(i, j, l, m, k, *args, model) * np.exp(-omega1 * t1 - omega2 * t2[None, :])

        return integrate_semi_infinite(inner, 1.0 / rate2, _GL20, n_panels=panels(rate2))

    def over_t2_chunked(t1_nodes):
        # bound the size of each (t1, t2) block
        chunks = np.array_split(t1_nodes, max(1, t1_nodes.size // 256))
        return np.concatenate([over_t2(chunk) for chunk in chunks])

    try:
        return complex(integrate_semi_infinite(over_t2_chunked, 1.0 / rate1, _GL20, n_panels=panels(rate1)))
    except AccuracyError as exc:
        raise RangeError(f"Laplace integrand does not decay (chi rate {r:g}): {exc}") from None


# -- functional ----------------------------------------------------------------


def _functional_radial(h: Spatial, omega_bar: float, model: RwaModel, cfg: FieldConfig, n_k: int) -> float:
    k, w = cfg.radial_grid(h, n_k)
    c = model.norm_factor(k)
    s1 = np.array([rwa_sign_closed_form(1, omega_bar, kk, model) for kk in k])
    s2 = np.array([rwa_sign_closed_form(2, omega_bar, kk, model) for kk in k])
    weight = h.angular_power(k, 1) * s1 + h.angular_power(k, -1) * s2
    return FOUR_PI * float(np.dot(w, k * k * weight / c**2))


def interacting_functional(h: Spatial, omega_bar: float, model: RwaModel, cfg: FieldConfig) -> float:
    """Re of the interacting functional on f = e^{-w_bar t} theta(t) h(x), via radial k-quadrature."""
    if not omega_bar > 0:
        raise DomainError("omega_bar must be positive")
    value = _functional_radial(h, omega_bar, model, cfg, cfg.n_k)
    _check_converged(value, _functional_radial(h, omega_bar, model, cfg, 2 * cfg.n_k), "interacting_functional")
    return value


# -- truncated-Fock oracle --------------------------------------------------------


def ladder(n_max: int) -> np.ndarray:
    """Truncated lowering operator on levels 0..n_max."""
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1).astype(complex)


def _left_right(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Superoperator O -> X O Y acting on row-major vec(O)."""
    return np.kron(x, y.T)


def heisenberg_generator(omega: float, pump: float, damp: float, a: np.ndarray) -> np.ndarray:
    """Adjoint generator on one mode, H = w a^dag a, pump/damp rates in units of [a, a^dag] = 1."""
    one = np.eye(a.shape[0])
    ad = a.conj().T
    h = omega * ad @ a
    gen = 1j * (_left_right(h, one) - _left_right(one, h))
    aad, ada = a @ ad, ad @ a
    gen += pump * (2 * _left_right(a, ad) - _left_right(aad, one) - _left_right(one, aad))
    gen += damp * (2 * _left_right(ad, a) - _left_right(ada, one) - _left_right(one, ada))
    return gen


def schrodinger_generator(omega: float, pump: float, damp: float, a: np.ndarray) -> np.ndarray:
    one = np.eye(a.shape[0])
    ad = a.conj().T
    h = omega * ad @ a
    gen = -1j * (_left_right(h, one) - _left_right(one, h))
    aad, ada = a @ ad, ad @ a
    gen += pump * (2 * _left_right(ad, a) - _left_right(aad, one) - _left_right(one, aad))
    gen += damp * (2 * _left_right(a, ad) - _left_right(ada, one) - _left_right(one, ada))
    return gen


@dataclass(frozen=True)
class OracleResult:
    value: complex
    leakage: float


def _single_mode_average(l, j, m, k, t1, t2, tau, model, n_max):
    """Vacuum average of Gamma_tau(C_lj(t1) C_lm(t2)) in units of [a, a^dag] = 1."""
    a = ladder(n_max)
    dim = n_max + 1
    w = float(model.omega(k))
    c = float(model.norm_factor(k))
    pump, damp = c * float(model.h2(l, 1, k)), c * float(model.h2(l, 2, k))
    gen = heisenberg_generator(w, pump, damp, a)

    def evolve(op, t):
        return (expm(t * gen) @ op.reshape(-1)).reshape(dim, dim)

    op = {1: a, 2: a.conj().T}
    product = evolve(op[j], t1) @ evolve(op[m], t2)
    outer = evolve(product, tau)
    # vacuum populations at the latest time reached bound the truncation error
    rho0 = np.zeros((dim, dim), dtype=complex)
    rho0[0, 0] = 1.0
    latest = tau + max(t1, t2)
    rho = (expm(latest * schrodinger_generator(w, pump, damp, a)) @ rho0.reshape(-1)).reshape(dim, dim)
    return outer[0, 0], float(abs(rho[-1, -1]))


def _vacuum_single(l, j, k, t, tau, model, n_max):
    """<0| Gamma_tau(C_lj(t)) |0> for a lone operator: zero by phase covariance, computed anyway."""
    a = ladder(n_max)
    dim = n_max + 1
    w = float(model.omega(k))
    c = float(model.norm_factor(k))
    gen = heisenberg_generator(w, c * float(model.h2(l, 1, k)), c * float(model.h2(l, 2, k)), a)
    op = a if j == 1 else a.conj().T
    out = (expm((t + tau) * gen) @ op.reshape(-1)).reshape(dim, dim)
    return out[0, 0]


def lindblad_oracle(q: TwoTimeQuery, model: RwaModel, n_max: int = 12, full_output: bool = False):
    """Recompute g_ijlm from a truncated-Fock adjoint master equation.

    Mode operators are rescaled by a = sqrt((2pi)^3 2 w V / (2pi)^3) a_hat so
    that [a_hat, a_hat^dag] = 1 and the couplings become rates c |h|^2. The
    vacuum average then equals (V / (2pi)^3) g, and the factor V / (2pi)^3
    standing in for delta^3(0) is divided out.
    """
    if n_max < 8:
        raise DomainError("n_max must be at least 8")
    k = q.k_norm
    c = float(model.norm_factor(k))
    delta0 = model.mode_volume / TWO_PI_CUBED
    scale = c * delta0
    if q.i != q.l:
        # independent sectors: the average factorizes into single-operator averages
        avg = _vacuum_single(q.i, q.j, k, q.t_prime, q.tau, model, n_max) * _vacuum_single(
            q.l, q.m, k, q.t_doubleprime, q.tau, model, n_max
        )
        leak = 0.0
    else:
        avg, leak = _single_mode_average(q.l, q.j, q.m, k, q.t_prime, q.t_doubleprime, q.tau, model, n_max)
    if leak > LEAKAGE_TOL:
        raise AccuracyError(f"Fock truncation leaks: population {leak:.2e} at level n_max={n_max}")
    value = complex(scale * avg / delta0)
    return OracleResult(value, leak) if full_output else value


def oracle_fixture() -> list[tuple[TwoTimeQuery, tuple]]:
    """Ten queries with single-mode rates (g11, g12, g21, g22) in [0, 0.05]."""
    rows = [
        ((1, 1, 1, 2), 0.5, 1.0, 0.0, 0.7, (0.03, 0.0, 0.0, 0.0)),
        ((1, 2, 1, 1), 1.0, 0.3, 1.2, 0.5, (0.02, 0.05, 0.0, 0.0)),
        ((2, 2, 2, 1), 0.2, 1.6, 0.5, 1.2, (0.0, 0.0, 0.03, 0.01)),
        ((2, 1, 2, 2), 2.0, 0.7, 1.9, 2.0, (0.0, 0.0, 0.01, 0.05)),
        ((1, 1, 1, 2), 0.0, 0.0, 0.0, 2.0, (0.05, 0.05, 0.0, 0.0)),
        ((1, 2, 1, 1), 1.5, 1.1, 0.4, 0.9, (0.0, 0.0, 0.0, 0.0)),
        ((1, 1, 1, 1), 0.8, 0.6, 1.3, 0.4, (0.02, 0.01, 0.0, 0.0)),
        ((1, 1, 2, 2), 0.4, 0.9, 0.2, 1.0, (0.01, 0.02, 0.03, 0.04)),
        ((2, 1, 2, 2), 0.0, 2.0, 0.0, 0.3, (0.0, 0.0, 0.05, 0.0)),
        ((1, 1, 1, 2), 3.0, 1.5, 1.0, 1.0, (0.01, 0.04, 0.0, 0.0)),
    ]
    return [(TwoTimeQuery(*idx, k, t1, t2, tau), gammas) for idx, k, t1, t2, tau, gammas in rows]


def relative_gap(a: complex, b: complex, floor: float) -> float:
    """|a - b| / max(|a|, |b|, floor)."""
    return abs(a - b) / max(abs(a), abs(b), floor)


# -- generator commutation --------------------------------------------------------


def generator_commutators(model: RwaModel, k: float, n_max: int = 3) -> dict:
    """Norms of the three commutators of generator pieces on a two-mode truncated space.

    Each piece is built as a superoperator matrix on the a (x) b space, so
    comparing products in both orders amounts to applying both orderings to
    every operator in the matrix-unit basis.
    """
    a1 = ladder(n_max)
    one = np.eye(n_max + 1)
    a = np.kron(a1, one)
    b = np.kron(one, a1)
    eye = np.eye(a.shape[0])
    w = float(model.omega(k))
    c = float(model.norm_factor(k))
    h = w * (a.conj().T @ a + b.conj().T @ b)
    ad_h = 1j * (_left_right(h, eye) - _left_right(eye, h))

    def dissipator(x, rate_up, rate_down):
        return heisenberg_generator(0.0, rate_up, rate_down, x)

    sector_a = dissipator(a, c * float(model.h2(1, 1, k)), c * float(model.h2(1, 2, k)))
    sector_b = dissipator(b, c * float(model.h2(2, 1, k)), c * float(model.h2(2, 2, k)))

    def comm(x, y):
        return float(np.max(np.abs(x @ y - y @ x)))

    return {
        "H,L1": comm(ad_h, sector_a),
        "H,L2": comm(ad_h, sector_b),
        "L1,L2": comm(sector_a, sector_b),
    }


# -- sweeps -----------------------------------------------------------------------


def random_model(rng: np.random.Generator, h2_max: float = 1.0, mass: float = 1.0) -> RwaModel:
    h = [Coupling.constant(v) for v in rng.uniform(0.0, h2_max, 4)]
    return RwaModel(mass, *h)


def positivity_sweep(n_points: int, rng: np.random.Generator) -> list[dict]:
    """Random (w_bar, k, h^2) draws with both sector values of the closed form."""
    rows = []
    for _ in range(n_points):
        omega_bar = float(10.0 * (1.0 - rng.random()))  # (0, 10]
        k = float(rng.uniform(0.0, 10.0))
        model = random_model(rng)
        values = [rwa_sign_closed_form(i, omega_bar, k, model) for i in (1, 2)]
        rows.append(
            {
                "omega_bar": omega_bar,
                "k": k,
                "h11": model.h11.params["value"],
                "h12": model.h12.params["value"],
                "h21": model.h21.params["value"],
                "h22": model.h22.params["value"],
                "value_1": values[0],
                "value_2": values[1],
                "pass": min(values) >= 0.0,
            }
        )
    return rows


def laplace_lattice() -> list[tuple[float, float]]:
    """(w_bar, k) points for the quadrature cross-check."""
    return [(wb, k) for wb in (0.5, 1.0, 2.0) for k in (0.0, 1.0, 2.0)]


def laplace_cross_check(model: RwaModel, omega_bar: float, k: float, sector: int) -> dict:
    """Quadrature Re[G1 + G2] at (w_bar, 2 w_bar) against the closed form."""
    g1, g2 = sector_indices(sector)
    quad = laplace_G(1, *g1, omega_bar, 2 * omega_bar, k, model) + laplace_G(
        2, *g2, omega_bar, 2 * omega_bar, k, model
    )
    closed = rwa_sign_closed_form(sector, omega_bar, k, model)
    return {
        "omega_bar": omega_bar,
        "k": k,
        "sector": sector,
        "quadrature": quad.real,
        "closed_form": closed,
        "relative_gap": relative_gap(quad.real, closed, 0.0) if closed or quad.real else 0.0,
    }


def functional_fixtures() -> list[tuple[RwaModel, Spatial, float]]:
    """Ten (model, spatial profile, w_bar) triples mixing constant and k-dependent couplings."""
    from .fields import Gaussian3D, PlaneWavePacket

    def gauss(amplitude, width):
        return Coupling("gaussian", {"amplitude": amplitude, "width": width})

    c = Coupling.constant
    models = [
        RwaModel(),
        RwaModel(1.0, c(1e-4), c(3e-4), c(2e-4), c(2e-4)),
        RwaModel(1.0, c(1e-3), c(0.0), c(0.0), c(1e-3)),
        RwaModel(0.5, gauss(2e-3, 1.0), gauss(1e-3, 2.0), gauss(5e-4, 0.5), c(1e-4)),
        RwaModel(2.0, c(5e-3), c(5e-3), gauss(1e-2, 3.0), c(0.0)),
    ]
    profiles = [Gaussian3D(1.0), PlaneWavePacket((0.0, 0.0, 1.5), 0.8)]
    omegas = [0.7, 0.2]
    return [(mdl, prof, omegas[n % 2]) for n, (mdl, prof) in enumerate((m, p) for m in models for p in profiles)]
