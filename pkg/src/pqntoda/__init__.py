"""Poisson quasi-Nijenhuis calculus on closed Toda lattices."""

__version__ = "0.1.0"
