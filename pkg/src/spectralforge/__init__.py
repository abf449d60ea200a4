"""Constructions of graphs with prescribed extreme eigenvalues."""

__version__ = "0.1.0"
