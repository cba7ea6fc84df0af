"""Bessel functions J0, J1 and the imaginary error function.

Small arguments use the power series; large arguments use the Hankel
asymptotic expansion. The switch point is |z| = 12, where both agree to
about 1e-11.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError

SERIES_SWITCH = 12.0
_SERIES_TERMS = 48
_HANKEL_TERMS = 30
ERFI_MAX = 6.0
_ERFI_TERMS = 160


def _as_array(z, name):
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: non-finite argument")
    return arr


def _series(z: np.ndarray, order: int) -> np.ndarray:
    # sum_m (-1)^m (z/2)^(2m+order) / (m! (m+order)!)
    half = 0.5 * z
    q = -half * half
    term = np.ones_like(z) if order == 0 else half.copy()
    total = term.copy()
    for m in range(1, _SERIES_TERMS):
        term = term * q / (m * (m + order))
        total = total + term
    return total


def _hankel(z: np.ndarray, order: int) -> np.ndarray:
    # J_n(z) ~ sqrt(2/(pi z)) [P cos(chi) - Q sin(chi)], chi = z - (2n+1)pi/4.
    # Terms are accumulated only while they keep shrinking (optimal truncation).
    mu = 4.0 * order * order
    p = np.ones_like(z)
    q = np.zeros_like(z)
    term = np.ones_like(z)
    last = np.full_like(z, np.inf)
    active = np.ones(z.shape, dtype=bool)
    for k in range(1, 2 * _HANKEL_TERMS):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        size = np.abs(term)
        active &= size < last
        last = np.where(active, size, last)
        contrib = np.where(active, term, 0.0)
        # a_k / z^k enters P for even k (sign (-1)^(k/2)), Q for odd k.
        if k % 2 == 0:
            p = p + (-1) ** (k // 2) * contrib
        else:
            q = q + (-1) ** ((k - 1) // 2) * contrib
        if not active.any():
            break
    chi = z - (2 * order + 1) * math.pi / 4.0
    return np.sqrt(2.0 / (math.pi * z)) * (p * np.cos(chi) - q * np.sin(chi))


def _bessel(z, order: int, name: str):
    arr = _as_array(z, name)
    x = np.abs(arr)
    small = x <= SERIES_SWITCH
    out = np.empty_like(x)
    if small.any():
        out[small] = _series(x[small], order)
    if (~small).any():
        out[~small] = _hankel(x[~small], order)
    if order == 1:
        out = np.where(arr < 0, -out, out)
    return float(out) if out.ndim == 0 else out


def bessel_j0(z):
    """Bessel function of the first kind, order 0.

    Accepts a scalar or an array; absolute error is below 1e-10 for
    |z| <= 50.
    """
    return _bessel(z, 0, "bessel_j0")


def bessel_j1(z):
    """Bessel function of the first kind, order 1 (odd in z)."""
    return _bessel(z, 1, "bessel_j1")


def erfi(x):
    """Imaginary error function erfi(x) = -i erf(ix), for |x| <= 6.

    The Maclaurin series has only positive terms, so the result carries
    relative (not absolute) error near machine precision.
    """
    arr = _as_array(x, "erfi")
    if np.any(np.abs(arr) > ERFI_MAX):
        raise DomainError(f"erfi: |x| must be <= {ERFI_MAX}")
    a = np.abs(arr)
    x2 = a * a
    term = a.copy()
    total = a.copy()
    for m in range(1, _ERFI_TERMS):
        term = term * x2 / m
        total = total + term / (2 * m + 1)
    out = (2.0 / math.sqrt(math.pi)) * total
    out = np.where(arr < 0, -out, out)
    return float(out) if out.ndim == 0 else out
