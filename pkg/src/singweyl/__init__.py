"""Weyl functions, spectral measures and generalized Nevanlinna tests for
Schroedinger operators with a strongly singular left endpoint."""

__version__ = "0.1.0"
