"""Pseudospectral lab for the 2D cubic NLS with a partial harmonic potential."""

__version__ = "0.1.0"
