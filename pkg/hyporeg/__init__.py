"""Tikhonov regularization of the hypograph operator on the half-cylinder."""

__version__ = "0.1.0"
