"""Schur-parameter construction for the Steklov problem on the unit circle."""

__version__ = "0.3.0"
