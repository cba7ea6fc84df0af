"""Separable test functions and the free Feynman-propagator functionals.

Conventions: the temporal transform is F0(nu) = int e^{i nu t} f0(t) dt and the
spatial transform is G(k) = int e^{-i k.x} g(x) d^3x, so the 4D transform of
f = f0 g at (k0, k) is F0(k0) G(k).

Both functionals reduce to radial integrals over |k| of the angular average of
|G|^2 times a temporal kernel:

    Re iDF[f] = 1/2 int d^3k / ((2pi)^3 2w) (|F0(w)|^2 |G(k)|^2 + |F0(-w)|^2 |G(-k)|^2)
    Im iDF[f] = -(2pi)^-3 int d^3k |G(k)|^2 T(w) / w

with T(w) = Re int int f0*(t1) f0(t2) theta(t1 - t2) sin(w (t1 - t2)) dt1 dt2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import AccuracyError, DomainError
from .numkit import composite_nodes, gauss_legendre

FOUR_PI = 4.0 * math.pi
TWO_PI_CUBED = (2.0 * math.pi) ** 3
CONVERGENCE_TOL = 0.01

_GL16 = gauss_legendre(16)


# -- temporal profiles -------------------------------------------------------


@dataclass(frozen=True)
class Exponential:
    """f0(t) = e^{-omega_bar t} for t >= 0, zero before."""

    omega_bar: float

    def __post_init__(self):
        if not self.omega_bar > 0:
            raise DomainError("Exponential requires omega_bar > 0")

    def spectrum(self, nu):
        return 1.0 / (self.omega_bar - 1j * np.asarray(nu))

    def power(self, nu):
        nu = np.asarray(nu, dtype=float)
        return 1.0 / (self.omega_bar**2 + nu * nu)

    def values(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, np.exp(-self.omega_bar * np.maximum(t, 0.0)), 0.0)

    def support(self, t_max=None):
        return 0.0, t_max or 40.0 / self.omega_bar

    def l2_norm_sq(self):
        return 0.5 / self.omega_bar

    def jumps(self):
        return ()


@dataclass(frozen=True)
class GaussianT:
    """f0(t) = exp(-(t - center)^2 / (2 width^2))."""

    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise DomainError("GaussianT requires width > 0")

    def spectrum(self, nu):
        nu = np.asarray(nu, dtype=float)
        s = self.width
        return math.sqrt(2 * math.pi) * s * np.exp(1j * nu * self.center - 0.5 * (s * nu) ** 2)

    def power(self, nu):
        nu = np.asarray(nu, dtype=float)
        s = self.width
        return 2 * math.pi * s * s * np.exp(-((s * nu) ** 2))

    def values(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-0.5 * ((t - self.center) / self.width) ** 2)

    def support(self, t_max=None):
        half = 9.0 * self.width
        return self.center - half, self.center + half

    def l2_norm_sq(self):
        return math.sqrt(math.pi) * self.width

    def jumps(self):
        return ()


@dataclass(frozen=True)
class DeltaPV:
    """f0(t) = [delta(t) + (i/pi) P e^{-+ i beta mass t} / t] / 2.

    Only its transform is used: F0(nu) = theta(sign*beta*mass - nu).
    """

    beta: float
    sign: int = 1
    mass: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise DomainError("DeltaPV requires 0 < beta < 1")
        if not self.mass > 0:
            raise DomainError("DeltaPV requires mass > 0")
        if self.sign not in (1, -1):
            raise DomainError("DeltaPV sign must be +1 or -1")

    @property
    def edge(self) -> float:
        return self.sign * self.beta * self.mass

    def spectrum(self, nu):
        nu = np.asarray(nu, dtype=float)
        return np.where(nu < self.edge, 1.0, np.where(nu > self.edge, 0.0, 0.5)) + 0j

    def power(self, nu):
        return np.abs(self.spectrum(nu)) ** 2

    def values(self, t):
        raise DomainError("DeltaPV is a distribution; use its Fourier representation")

    def l2_norm_sq(self):
        return math.inf

    def jumps(self):
        return (self.edge,)


Temporal = Union[Exponential, GaussianT, DeltaPV]


# -- spatial profiles --------------------------------------------------------


@dataclass(frozen=True)
class Gaussian3D:
    """g(x) = amplitude * exp(-|x|^2 / (2 width^2))."""

    width: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise DomainError("Gaussian3D requires width > 0")

    @property
    def k0(self) -> np.ndarray:
        return np.zeros(3)

    def values(self, x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1)
        return self.amplitude * np.exp(-0.5 * r2 / self.width**2)

    def radial_values(self, r):
        r = np.asarray(r, dtype=float)
        return self.amplitude * np.exp(-0.5 * (r / self.width) ** 2)

    def transform(self, k):
        k = np.asarray(k, dtype=float)
        k2 = np.sum(k * k, axis=-1) if k.ndim and k.shape[-1] == 3 else k * k
        w = self.width
        return self.amplitude * (2 * math.pi) ** 1.5 * w**3 * np.exp(-0.5 * w * w * k2) + 0j

    def angular_power(self, k, sign=1):
        k = np.asarray(k, dtype=float)
        w = self.width
        return (self.amplitude**2) * TWO_PI_CUBED * w**6 * np.exp(-((w * k) ** 2))

    def bandwidth(self) -> float:
        return 1.0 / self.width

    def l2_norm_sq(self) -> float:
        return self.amplitude**2 * math.pi**1.5 * self.width**3


@dataclass(frozen=True)
class PlaneWavePacket:
    """g(x) = amplitude * exp(-|x|^2 / (2 width^2)) * exp(i k0.x)."""

    k0: tuple = (0.0, 0.0, 1.0)
    width: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise DomainError("PlaneWavePacket requires width > 0")
        if len(self.k0) != 3:
            raise DomainError("k0 must be a 3-vector")

    def values(self, x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1)
        return self.amplitude * np.exp(-0.5 * r2 / self.width**2 + 1j * (x @ np.asarray(self.k0)))

    def transform(self, k):
        k = np.asarray(k, dtype=float)
        if k.ndim == 0 or k.shape[-1] != 3:
            # radial argument: measured along the direction of k0
            k0 = np.asarray(self.k0, dtype=float)
            n = np.linalg.norm(k0)
            unit = k0 / n if n > 0 else np.array([0.0, 0.0, 1.0])
            k = np.asarray(k)[..., None] * unit
        d = k - np.asarray(self.k0, dtype=float)
        w = self.width
        return self.amplitude * (2 * math.pi) ** 1.5 * w**3 * np.exp(-0.5 * w * w * np.sum(d * d, axis=-1)) + 0j

    def angular_power(self, k, sign=1):
        """Average of |G(sign * k)|^2 over directions of k (sign-independent)."""
        k = np.asarray(k, dtype=float)
        w = self.width
        k0 = float(np.linalg.norm(self.k0))
        a = 2.0 * w * w * k * k0
        # exp(-w^2 (k^2 + k0^2)) sinh(a) / a, written without overflow
        shape = np.where(a > 1e-12, -np.expm1(-2.0 * a) / np.where(a > 0, 2.0 * a, 1.0), 1.0 - a)
        return self.amplitude**2 * TWO_PI_CUBED * w**6 * np.exp(-((w * (k - k0)) ** 2)) * shape

    def bandwidth(self) -> float:
        return float(np.linalg.norm(self.k0)) + 1.0 / self.width

    def l2_norm_sq(self) -> float:
        return self.amplitude**2 * math.pi**1.5 * self.width**3


Spatial = Union[Gaussian3D, PlaneWavePacket]


@dataclass(frozen=True)
class TestFunction:
    """Separable spacetime profile f(t, x) = f0(t) g(x)."""

    __test__ = False  # keep pytest from collecting this class

    temporal: Temporal
    spatial: Spatial

    def l2_norm_sq(self) -> float:
        return self.temporal.l2_norm_sq() * self.spatial.l2_norm_sq()


@dataclass(frozen=True)
class FieldConfig:
    """Field mass and the radial / temporal quadrature resolution.

    ``k_max=None`` picks the cutoff from the spatial profile: at least 20 m
    and far enough out that |G|^2 has dropped below 1e-20.
    """

    mass: float = 1.0
    k_max: float | None = None
    n_k: int = 128
    t_max: float | None = None
    n_t: int = 256

    def __post_init__(self):
        if not self.mass > 0:
            raise DomainError("mass must be positive")
        if self.n_k < 1 or self.n_t < 1:
            raise DomainError("grid counts must be positive")
        if self.k_max is not None and not self.k_max > 0:
            raise DomainError("k_max must be positive")

    def cutoff(self, spatial: Spatial) -> float:
        need = 5.0 * max(self.mass, spatial.bandwidth())
        if self.k_max is None:
            return max(20.0 * self.mass, 7.0 / spatial.width + np.linalg.norm(spatial.k0), need)
        if self.k_max < need:
            raise DomainError(f"k_max={self.k_max} is below 5*max(mass, bandwidth)={need:.3g}")
        return self.k_max

    def radial_grid(self, spatial: Spatial, n_k: int | None = None):
        rule = gauss_legendre(n_k or self.n_k)
        return rule.mapped(0.0, self.cutoff(spatial))

    def refined(self) -> "FieldConfig":
        return FieldConfig(self.mass, self.k_max, 2 * self.n_k, self.t_max, 2 * self.n_t)


# -- spatial Fourier transform ----------------------------------------------


def fourier3(g: Spatial, x) -> complex:
    """G(x) = int e^{-i x.y} g(y) d^3y, closed form for the Gaussian profiles.

    ``x`` may be a 3-vector or a norm; for a plane-wave packet a norm is
    taken along the direction of k0.
    """
    if isinstance(g, (Gaussian3D, PlaneWavePacket)):
        out = g.transform(x)
        return complex(out) if np.ndim(out) == 0 else out
    return fourier3_radial(g.radial_values, float(np.linalg.norm(x)))


def fourier3_radial(profile, x_norm: float, r_max: float = 40.0, n: int = 400) -> float:
    """Radial quadrature of the transform of a spherically symmetric profile.

    G(x) = 4 pi int_0^inf r^2 g(r) sinc(x r) dr.
    """
    nodes, weights = composite_nodes(np.linspace(0.0, r_max, n // 16 + 1), _GL16)
    kernel = np.sinc(x_norm * nodes / math.pi)
    return float(FOUR_PI * np.dot(weights, nodes**2 * profile(nodes) * kernel))


# -- functionals -------------------------------------------------------------


def _check_converged(coarse: float, fine: float, what: str) -> None:
    scale = max(abs(coarse), abs(fine))
    if scale > 0 and abs(fine - coarse) > CONVERGENCE_TOL * scale:
        raise AccuracyError(
            f"{what}: radial grid under-resolved ({coarse:.6g} -> {fine:.6g} when n_k doubled)"
        )


def _re_radial(f: TestFunction, cfg: FieldConfig, n_k: int) -> float:
    k, w = cfg.radial_grid(f.spatial, n_k)
    omega = np.hypot(k, cfg.mass)
    t = f.temporal
    weight = t.power(omega) * f.spatial.angular_power(k, 1) + t.power(-omega) * f.spatial.angular_power(k, -1)
    return 0.5 * FOUR_PI / TWO_PI_CUBED * float(np.dot(w, k * k * weight / (2.0 * omega)))


def re_idf_free(f: TestFunction, cfg: FieldConfig) -> float:
    """Re iDF[f]: half the anticommutator functional, evaluated in momentum space."""
    value = _re_radial(f, cfg, cfg.n_k)
    _check_converged(value, _re_radial(f, cfg, 2 * cfg.n_k), "re_idf_free")
    return value


def _pv_kernel_fourier(temporal: Temporal, omega: np.ndarray) -> np.ndarray:
    """T(w) = (1/2pi) P int |F0(nu)|^2 w / (w^2 - nu^2) dnu.

    Folding the principal value about the poles nu = +-w gives a regular
    integrand on s > 0:

        T(w) = (1/4pi) int_0^inf [P(w-s) - P(w+s) + P(s-w) - P(-s-w)] / s ds.
    """
    p = temporal.power
    jumps = temporal.jumps()
    out = np.empty_like(omega)
    for idx, w in enumerate(omega):

        def bracket(s, w=w):
            return (p(w - s) - p(w + s) + p(s - w) - p(-s - w)) / s

        cuts = {abs(w - j) for j in jumps} | {abs(w + j) for j in jumps}
        if not jumps:
            # graded breakpoints around the spectral peak at s = w
            scale = _nu_scale(temporal)
            cuts |= {w + sgn * scale * 2.0**e for e in range(-3, 6) for sgn in (1, -1)}
        s_cut = w + max([abs(j) for j in jumps] + [0.0]) + _nu_extent(temporal)
        edges = sorted({0.0, s_cut} | {c for c in cuts if 0.0 < c < s_cut})
        fine = []
        for a, b in zip(edges[:-1], edges[1:]):
            fine.extend(np.linspace(a, b, 9)[:-1])
        fine.append(s_cut)
        x, wt = composite_nodes(fine, _GL16)
        total = np.dot(wt, bracket(x))
        if not jumps:
            # smooth spectra decay algebraically at most; map [s_cut, inf) to [0, 1)
            u, wu = composite_nodes(np.linspace(0.0, 1.0, 9), _GL16)
            s = s_cut / (1.0 - u)
            total += np.dot(wu, bracket(s) * s_cut / (1.0 - u) ** 2)
        out[idx] = total / FOUR_PI
    return out


def _nu_scale(temporal: Temporal) -> float:
    """Width of the features of |F0|^2."""
    if isinstance(temporal, GaussianT):
        return 1.0 / temporal.width
    if isinstance(temporal, Exponential):
        return temporal.omega_bar
    return 1.0


def _nu_extent(temporal: Temporal) -> float:
    if isinstance(temporal, GaussianT):
        return 9.0 / temporal.width
    if isinstance(temporal, Exponential):
        return 20.0 * temporal.omega_bar
    return 1.0


def _pv_kernel_time(temporal: Temporal, omega: np.ndarray, cfg: FieldConfig) -> np.ndarray:
    """T(w) by direct quadrature over the ordered time pairs t1 > t2.

    With tau = t1 - t2, T(w) = int_0^inf sin(w tau) A(tau) dtau where
    A(tau) = Re int f0*(t + tau) f0(t) dt is the autocorrelation.
    """
    lo, hi = temporal.support(cfg.t_max)
    span = hi - lo
    t_nodes, t_w = composite_nodes(np.linspace(lo, hi, max(cfg.n_t // 16, 1) + 1), _GL16)
    w_max = float(np.max(omega))
    panels = max(cfg.n_t // 16, math.ceil(w_max * span / 2.0))
    tau, tau_w = composite_nodes(np.linspace(0.0, span, panels + 1), _GL16)
    f_t = temporal.values(t_nodes)
    shifted = temporal.values(t_nodes[None, :] + tau[:, None])
    auto = np.real(np.conj(shifted) * f_t[None, :]) @ t_w
    return np.sin(np.outer(omega, tau)) @ (tau_w * auto)


def temporal_kernel(temporal: Temporal, omega, cfg: FieldConfig, route: str = "auto") -> np.ndarray:
    """T(w) for each frequency, by the time-domain or Fourier route."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if route == "auto":
        route = "fourier" if isinstance(temporal, DeltaPV) else "time"
    if route == "time":
        return _pv_kernel_time(temporal, omega, cfg)
    if route == "fourier":
        return _pv_kernel_fourier(temporal, omega)
    raise DomainError(f"unknown route {route!r}")


def _im_radial(f: TestFunction, cfg: FieldConfig, n_k: int, route: str) -> float:
    if isinstance(f.temporal, DeltaPV) and abs(f.temporal.edge) >= cfg.mass:
        raise DomainError("DeltaPV needs beta*mass below the field mass")
    k, w = cfg.radial_grid(f.spatial, n_k)
    omega = np.hypot(k, cfg.mass)
    kern = temporal_kernel(f.temporal, omega, cfg, route)
    integrand = k * k * f.spatial.angular_power(k) * kern / omega
    return -FOUR_PI / TWO_PI_CUBED * float(np.dot(w, integrand))


def im_idf_free(f: TestFunction, cfg: FieldConfig, route: str = "auto") -> float:
    """Im iDF[f] from the light-cone-regular radial form.

    The inner r-integral of J0 is replaced by its closed form
    sin(tau w) / w, leaving the temporal kernel T(w) defined in the module
    docstring. ``route`` selects how T is computed: ``"time"`` integrates over
    ordered time pairs, ``"fourier"`` folds the principal value of the
    spectrum (the only option for DeltaPV).
    """
    value = _im_radial(f, cfg, cfg.n_k, route)
    _check_converged(value, _im_radial(f, cfg.refined(), 2 * cfg.n_k, route), "im_idf_free")
    return value


def _closed_form_radial(beta, m, g, cfg, n_k):
    k, w = cfg.radial_grid(g, n_k)
    omega = np.hypot(k, m)
    log_ratio = np.log1p(-2.0 * beta * m / (omega + beta * m))
    integrand = k * k * g.angular_power(k) / omega * log_ratio
    return FOUR_PI / (2.0 * (2.0 * math.pi) ** 4) * float(np.dot(w, integrand))


def im_idf_closed_form(beta: float, m: float, g: Spatial, cfg: FieldConfig) -> tuple[float, float]:
    """``(value_plus, value_minus)`` of Im iDF on the two DeltaPV profiles.

    The radial integrand |G|^2 / w * ln((w - beta m)/(w + beta m)) is negative,
    so value_plus < 0 < value_minus and value_minus == -value_plus exactly.
    """
    if not 0.0 < beta < 1.0:
        raise DomainError("require 0 < beta < 1")
    if not m > 0:
        raise DomainError("require m > 0")
    cfg = cfg if cfg.mass == m else FieldConfig(m, cfg.k_max, cfg.n_k, cfg.t_max, cfg.n_t)
    plus = _closed_form_radial(beta, m, g, cfg, cfg.n_k)
    return plus, -plus


@dataclass
class WitnessReport:
    mass: float
    beta: float
    closed_plus: float
    closed_minus: float
    free_plus: float
    free_minus: float
    discrepancy: float
    tolerance: float = 1e-3
    product: float = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.product = self.free_plus * self.free_minus
        self.passed = bool(self.product < 0 and self.discrepancy <= self.tolerance)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "mass", "beta", "closed_plus", "closed_minus", "free_plus", "free_minus",
            "product", "discrepancy", "tolerance", "passed",
        )}


def indeterminacy_witness(m: float, beta: float, g: Spatial, cfg: FieldConfig,
                          tolerance: float = 1e-3) -> WitnessReport:
    """Evaluate Im iDF on f+ and f- both by quadrature and in closed form."""
    if not 0.0 < beta < 1.0:
        raise DomainError("require 0 < beta < 1")
    cfg = cfg if cfg.mass == m else FieldConfig(m, cfg.k_max, cfg.n_k, cfg.t_max, cfg.n_t)
    closed_plus, closed_minus = im_idf_closed_form(beta, m, g, cfg)
    free = [im_idf_free(TestFunction(DeltaPV(beta, s, m), g), cfg) for s in (1, -1)]
    discrepancy = max(abs(free[0] - closed_plus) / abs(closed_plus),
                      abs(free[1] - closed_minus) / abs(closed_minus))
    return WitnessReport(m, beta, closed_plus, closed_minus, free[0], free[1], discrepancy, tolerance)
