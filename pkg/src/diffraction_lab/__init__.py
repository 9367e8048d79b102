"""Diffraction of aperiodic and random Dirac combs on the line."""

__version__ = "0.1.0"
