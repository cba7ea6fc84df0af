"""Quadrature rules on [-1, 1] and the integrators built on them."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from ..errors import AccuracyError, DomainError, EvaluationError

TAIL_FRACTION = 1e-6
TRUNCATION_SCALES = 40.0


class RuleKind(str, enum.Enum):
    GAUSS_LEGENDRE = "gauss_legendre"
    TANH_SINH = "tanh_sinh"
    TRAPEZOID = "trapezoid"


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights on the reference interval [-1, 1]."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: RuleKind

    def __post_init__(self):
        if len(self.nodes) != len(self.weights):
            raise DomainError("node count must equal weight count")
        if self.kind is not RuleKind.TRAPEZOID and np.any(self.weights <= 0):
            raise DomainError(f"{self.kind.value} weights must be positive")

    @property
    def size(self) -> int:
        return len(self.nodes)

    def mapped(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        half = 0.5 * (b - a)
        return a + half * (self.nodes + 1.0), half * self.weights


@lru_cache(maxsize=None)
def gauss_legendre(n: int = 20) -> QuadratureRule:
    if n < 1:
        raise DomainError("need at least one node")
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadratureRule(x, w, RuleKind.GAUSS_LEGENDRE)


@lru_cache(maxsize=None)
def tanh_sinh(level: int = 6, t_max: float = 3.5) -> QuadratureRule:
    """Double-exponential rule with step 2**-level.

    Nodes that round to +-1 are dropped so endpoint singularities are never
    sampled.
    """
    h = 2.0**-level
    k = np.arange(-int(t_max / h), int(t_max / h) + 1)
    t = k * h
    s = 0.5 * math.pi * np.sinh(t)
    x = np.tanh(s)
    w = h * 0.5 * math.pi * np.cosh(t) / np.cosh(s) ** 2
    keep = (np.abs(x) < 1.0) & (w > 0)
    return QuadratureRule(x[keep], w[keep], RuleKind.TANH_SINH)


@lru_cache(maxsize=None)
def trapezoid(n: int = 101) -> QuadratureRule:
    if n < 2:
        raise DomainError("trapezoid rule needs at least two nodes")
    x = np.linspace(-1.0, 1.0, n)
    w = np.full(n, 2.0 / (n - 1))
    w[0] = w[-1] = 1.0 / (n - 1)
    return QuadratureRule(x, w, RuleKind.TRAPEZOID)


def _evaluate(f: Callable, x: np.ndarray, batched: bool = False) -> np.ndarray:
    values = np.asarray(f(x))
    if batched and values.ndim == 2 and values.shape[1] == x.size:
        pass
    elif values.shape != x.shape:
        values = np.broadcast_to(values, x.shape)
    bad = ~np.isfinite(values)
    if bad.any():
        node = float(x[np.argmax(bad) % x.size])
        raise EvaluationError(f"integrand is not finite at x = {node!r}", node=node)
    return values


def integrate_1d(f: Callable, a: float, b: float, rule: QuadratureRule | None = None):
    """Integrate ``f`` over [a, b] with a single application of ``rule``.

    ``f`` is called once with an array of nodes and may return real or
    complex values.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("integration limits must be finite")
    if a > b:
        raise DomainError("require a <= b")
    rule = rule or gauss_legendre()
    if a == b:
        return 0.0
    x, w = rule.mapped(a, b)
    return np.dot(w, _evaluate(f, x))[()]


def composite_nodes(edges, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of ``rule`` repeated on every panel given by ``edges``."""
    edges = np.asarray(edges, dtype=float)
    a = edges[:-1, None]
    half = 0.5 * np.diff(edges)[:, None]
    x = a + half * (rule.nodes[None, :] + 1.0)
    w = half * rule.weights[None, :]
    return x.ravel(), w.ravel()


def integrate_composite(f: Callable, edges, rule: QuadratureRule | None = None):
    rule = rule or gauss_legendre()
    x, w = composite_nodes(edges, rule)
    return np.dot(w, _evaluate(f, x))[()]


def integrate_semi_infinite(
    f: Callable,
    decay_scale: float,
    rule: QuadratureRule | None = None,
    *,
    n_panels: int | None = None,
    full_output: bool = False,
):
    """Integrate ``f`` over [0, inf) for integrands decaying on ``decay_scale``.

    The range is truncated at 40 decay scales and split into equal panels.
    The last quarter of the range serves as a tail probe: if it carries more
    than 1e-6 of the integral of |f|, the integrand is not decaying as
    promised and AccuracyError is raised.

    ``f`` may return an array of shape (rows, nodes) to integrate several
    integrands at once; each row gets its own tail probe.

    Returns the estimate, or ``(estimate, tail)`` with ``full_output``.
    """
    if not (decay_scale > 0 and math.isfinite(decay_scale)):
        raise DomainError("decay_scale must be positive and finite")
    rule = rule or gauss_legendre()
    n_panels = n_panels or 80
    n_panels = 4 * math.ceil(n_panels / 4)
    length = TRUNCATION_SCALES * decay_scale
    edges = np.linspace(0.0, length, n_panels + 1)
    x, w = composite_nodes(edges, rule)
    values = _evaluate(f, x, batched=True)
    weighted = w * values
    total = weighted.sum(axis=-1)
    tail_start = (3 * n_panels // 4) * rule.size
    tail = np.abs(weighted[..., tail_start:].sum(axis=-1))
    scale = np.abs(values) @ w
    ratio = np.where(scale > 0, tail / np.where(scale > 0, scale, 1.0), 0.0)
    if np.any(ratio > TAIL_FRACTION):
        raise AccuracyError(
            f"integrand does not decay on scale {decay_scale}: "
            f"tail segment holds {float(np.max(ratio)):.2e} of the total"
        )
    total, tail = total[()], tail[()]
    return (total, tail) if full_output else total
