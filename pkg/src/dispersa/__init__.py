"""Pseudospectral simulation and verification laboratory for u_t - u_5x = +-u^m u_x."""

__version__ = "0.1.0"
