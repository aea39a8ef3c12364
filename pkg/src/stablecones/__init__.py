"""Numerics for stable cones in the fractional one-phase free boundary problem."""

__version__ = "0.1.0"
