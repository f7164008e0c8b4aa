"""Bound-envelope verification of Osterwalder-Schrader positivity for the
phi^4_4 Green's-function hierarchy."""

__version__ = "0.1.0"
