"""Exact-arithmetic workbench for multilinear forms over GF(2)."""

__version__ = "0.1.0"
