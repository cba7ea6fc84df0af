"""Numerical checks of two tabulated Bessel-type integrals.

``gr_3876_1_check`` compares

    int_0^inf sin(dt*sqrt(u^2+m^2)) / sqrt(u^2+m^2) * cos(r*u) du

with theta(dt - r) * (pi/2) * J0(m*sqrt(dt^2 - r^2)), theta(0) = 1/2.

``gr_6677_6_check`` compares

    int_0^dt J0(m*sqrt(dt^2 - r^2)) cos(s*r) dr

with sin(dt*sqrt(s^2+m^2)) / sqrt(s^2+m^2).
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import AccuracyError, DomainError
from .quadrature import QuadratureRule, gauss_legendre, integrate_composite
from .special import bessel_j0

_HALF_PERIODS = 60
_EULER_START = 8


def step(u: float) -> float:
    """Unit step with the half-maximum convention at zero."""
    if u > 0:
        return 1.0
    if u < 0:
        return 0.0
    return 0.5


def _euler_sum(head: float, terms: list[float]) -> float:
    """Sum ``head + sum(terms)`` where the terms eventually alternate.

    The partial sums are repeatedly averaged pairwise (Euler transform of an
    alternating series); this converges fast for slowly decaying terms such as
    (-1)^n / n.
    """
    partial = head + math.fsum(terms[:_EULER_START])
    tail = np.asarray(terms[_EULER_START:])
    sums = partial + np.concatenate(([0.0], np.cumsum(tail)))
    while len(sums) > 1:
        sums = 0.5 * (sums[1:] + sums[:-1])
    return float(sums[0])


def _phase_root(target: float, dt: float, c: float, m: float, lower: float) -> float:
    """Solve dt*sqrt(u^2+m^2) + c*u = target for u >= lower on the monotone branch."""
    a = dt * dt - c * c
    b = 2.0 * c * target
    cc = dt * dt * m * m - target * target
    if a == 0.0:
        candidates = [-cc / b]
    else:
        disc = max(b * b - 4.0 * a * cc, 0.0)
        sq = math.sqrt(disc)
        # numerically stable pair of roots
        q = -0.5 * (b + math.copysign(sq, b)) if b != 0 else -0.5 * sq
        candidates = [q / a] + ([cc / q] if q != 0 else [-q / a])
    best = None
    for u in candidates:
        if u < lower - 1e-12 * max(1.0, lower):
            continue
        resid = abs(dt * math.hypot(u, m) + c * u - target)
        if best is None or resid < best[0]:
            best = (resid, u)
    if best is None or best[0] > 1e-7 * max(1.0, abs(target)):
        raise AccuracyError(f"could not locate phase {target} (dt={dt}, c={c}, m={m})")
    return max(best[1], lower)


def _sin_phase_integral(dt: float, c: float, m: float, rule: QuadratureRule) -> float:
    """int_0^inf sin(dt*w + c*u) / w du, w = sqrt(u^2+m^2)."""

    def integrand(u):
        w = np.hypot(u, m)
        return np.sin(dt * w + c * u) / w

    slope = dt + c
    if abs(slope) <= 1e-14 * dt:
        # Light-cone branch: the phase dt*m^2/(w+u) tends to zero, no oscillation.
        # u = m*x/(1-x) maps [0, 1) onto [0, inf) with a bounded integrand.
        def mapped(x):
            u = m * x / (1.0 - x)
            return integrand(u) * m / (1.0 - x) ** 2

        return integrate_composite(mapped, np.linspace(0.0, 1.0, 33), rule)

    # Start of the monotone branch of the phase.
    if c < 0 < slope:
        u0 = -c * m / math.sqrt(dt * dt - c * c)
    else:
        u0 = 0.0
    phi0 = dt * math.hypot(u0, m) + c * u0
    direction = 1.0 if slope > 0 else -1.0
    n0 = math.floor(phi0 / math.pi) + 1 if direction > 0 else math.ceil(phi0 / math.pi) - 1
    breaks = [
        _phase_root((n0 + direction * k) * math.pi, dt, c, m, u0)
        for k in range(_HALF_PERIODS + 1)
    ]
    head = 0.0
    if u0 > 0:
        head += integrate_composite(integrand, np.linspace(0.0, u0, 17), rule)
    head += integrate_composite(integrand, [u0, breaks[0]], rule)
    terms = [
        integrate_composite(integrand, [breaks[k], breaks[k + 1]], rule)
        for k in range(_HALF_PERIODS)
    ]
    return _euler_sum(head, terms)


def gr_3876_1_check(
    m: float, dt: float, r: float, rule: QuadratureRule | None = None
) -> tuple[float, float]:
    """Return ``(lhs, rhs)``: quadrature and closed form of the first identity."""
    if not (m > 0 and dt > 0 and r >= 0):
        raise DomainError("require m > 0, dt > 0, r >= 0")
    rule = rule or gauss_legendre(24)
    # sin(A)cos(B) = [sin(A+B) + sin(A-B)] / 2 splits the two phase velocities.
    lhs = 0.5 * (
        _sin_phase_integral(dt, r, m, rule) + _sin_phase_integral(dt, -r, m, rule)
    )
    if not math.isfinite(lhs):
        raise AccuracyError("oscillatory quadrature did not converge")
    interval = dt * dt - r * r
    rhs = step(dt - r) * 0.5 * math.pi * bessel_j0(m * math.sqrt(max(interval, 0.0)))
    return lhs, rhs


def gr_6677_6_check(
    m: float, dt: float, s: float, rule: QuadratureRule | None = None
) -> tuple[float, float]:
    """Return ``(lhs, rhs)`` for the finite-range J0 cosine transform."""
    if not (m > 0 and dt >= 0 and s >= 0):
        raise DomainError("require m > 0, dt >= 0, s >= 0")
    rule = rule or gauss_legendre(24)
    freq = math.hypot(s, m)
    rhs = math.sin(dt * freq) / freq
    if dt == 0:
        return 0.0, rhs

    def integrand(r):
        return bessel_j0(m * np.sqrt(np.maximum(dt * dt - r * r, 0.0))) * np.cos(s * r)

    # The integrand is entire in r; a few panels resolve cos(s*r) and J0.
    panels = max(4, math.ceil(dt * (s + m) / 2.0))
    lhs = integrate_composite(integrand, np.linspace(0.0, dt, panels + 1), rule)
    return float(lhs), rhs


def identity_lattice() -> tuple[list, list]:
    """125 (m, dt, r) points for the first identity and 125 (m, dt, s) for the second.

    m * dt stays <= 10; the rows with r = dt sit on the light cone.
    """
    ms = (0.5, 1.0, 1.5, 2.0, 2.5)
    dts = (0.5, 1.0, 2.0, 3.0, 4.0)
    args = (0.0, 0.5, 1.0, 2.0, 3.9)
    first = [(m, dt, r) for m in ms for dt in dts for r in args]
    second = [(m, dt, s) for m in ms for dt in dts for s in args]
    return first, second
