"""Cumulant-gated kNN density estimation for entropy-based resampling."""

__version__ = "0.1.0"
