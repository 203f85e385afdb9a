"""Numerical checks for the fibration of the B~n arrangement complement."""

__version__ = "0.1.0"
