"""Desk-scale Gaussian boson sampling toolkit for graph problems."""

__version__ = "0.1.0"
