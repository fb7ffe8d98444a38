"""Exact pole and wheel condition checks for K-theoretic Hall algebra classes."""

__version__ = "0.1.0"
