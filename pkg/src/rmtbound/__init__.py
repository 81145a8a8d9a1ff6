"""Numerical certificate for the lower bound det T^[m-1] >= 0.0865."""

__version__ = "0.1.0"
