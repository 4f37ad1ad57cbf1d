"""Exact finite-dimensional engine for topos quantum theory."""

__version__ = "0.1.0"
