"""Stochastic Stefan model of the bid-ask spread."""

__version__ = "0.1.0"
