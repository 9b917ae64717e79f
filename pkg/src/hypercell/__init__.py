"""Typical-cell simulation and small-cell verification for Poisson hyperplane tessellations."""

__version__ = "0.1.0"
