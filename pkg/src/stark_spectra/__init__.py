"""Spectral data of perturbed Stark operators -d^2/dx^2 + x + q(x) on the half-line."""

__version__ = "0.1.0"
