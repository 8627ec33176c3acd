"""Stopped-light spin-wave memory in a spectral hole: simulation and analysis."""

__version__ = "0.1.0"
