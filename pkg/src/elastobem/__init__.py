"""Elastostatic boundary elements with regularized kernels and Chebyshev FMM."""

__version__ = "0.1.0"
