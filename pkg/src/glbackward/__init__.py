"""Regularized backward reconstruction for the Ginzburg-Landau equation on
(0, pi)^d from noisy grid data."""

__version__ = "0.1.0"
