"""Entropy spectra of center exponents on symbolic models."""

__version__ = "0.1.0"
