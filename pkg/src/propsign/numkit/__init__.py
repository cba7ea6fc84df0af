"""Special functions and quadrature primitives."""

from .identities import gr_3876_1_check, gr_6677_6_check, identity_lattice, step
from .quadrature import (
    QuadratureRule,
    RuleKind,
    composite_nodes,
    gauss_legendre,
    integrate_1d,
    integrate_composite,
    integrate_semi_infinite,
    tanh_sinh,
    trapezoid,
)
from .special import bessel_j0, bessel_j1, erfi

__all__ = [
    "QuadratureRule",
    "RuleKind",
    "bessel_j0",
    "bessel_j1",
    "composite_nodes",
    "erfi",
    "gauss_legendre",
    "gr_3876_1_check",
    "gr_6677_6_check",
    "identity_lattice",
    "integrate_1d",
    "integrate_composite",
    "integrate_semi_infinite",
    "step",
    "tanh_sinh",
    "trapezoid",
]
