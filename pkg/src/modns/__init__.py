"""Spectral toolkit for exponential-weight modulation spaces and
octant-supported Navier-Stokes mild solutions."""

__version__ = "0.1.0"
