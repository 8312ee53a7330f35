"""
Source package for the ALOHA freshness toolkit.

This package contains the scenario model, the closed-form analysis of the
inter-update time, the reference oracle, the Monte Carlo simulators and the
planning studies built on them.
"""

__version__ = "1.0.0"
__author__ = "ALOHA Freshness Team"
