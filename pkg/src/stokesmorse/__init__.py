"""Spectral laboratory for Stokes-wave Morse indices and negative-eigenvalue counts."""

__version__ = "0.1.0"
