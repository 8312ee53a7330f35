"""
Test Suite for the ALOHA freshness toolkit.

This package contains test modules validating the closed forms against the
oracle and the simulators, and the command line surface.
"""

__version__ = "1.0.0"
__author__ = "ALOHA Freshness Team"
