"""Bivariate cumulative past entropy measures and the checks built on them."""

__version__ = "0.1.0"
