"""
Shared helpers: configuration loading, report formatting and the error hierarchy.
"""
