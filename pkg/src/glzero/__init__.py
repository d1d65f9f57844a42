"""Numerical tools for Ginzburg-Landau surface superconductivity near a field zero."""

__version__ = "0.1.0"
