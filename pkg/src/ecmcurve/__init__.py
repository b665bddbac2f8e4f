"""Numerical and exact checks for the quantum spectral curve of the elliptic
Calogero-Moser system and its periodic Toda limit."""

__version__ = "0.1.0"
