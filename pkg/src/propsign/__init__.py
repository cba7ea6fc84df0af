"""Numerical checks of sign properties of scalar-field propagators under reversible and reduced dynamics."""

__version__ = "0.1.0"
