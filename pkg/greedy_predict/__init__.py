"""Greedy algorithms for high-dimensional linear prediction."""

__version__ = "0.1.0"
