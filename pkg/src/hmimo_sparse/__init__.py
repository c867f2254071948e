"""Wavenumber-domain channel simulation and sparse estimation for dense planar arrays."""

__version__ = "0.1.0"
