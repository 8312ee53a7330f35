"""
Configuration package for the ALOHA freshness toolkit.

This package holds ``defaults.json`` with the numerical tolerances, grids and
simulation budgets read through ``src.utils.config_loader``.
"""

__version__ = "1.0.0"
__author__ = "ALOHA Freshness Team"
