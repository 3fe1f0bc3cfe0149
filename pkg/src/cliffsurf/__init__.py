"""Clifford-algebra engine and discrete surface calculus for conformal maps."""

__version__ = "0.1.0"
