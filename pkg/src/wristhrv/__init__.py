"""Smartwatch HRV error analysis and correction."""

__version__ = "0.1.0"
