"""
Reference computations used to validate the closed forms.
"""

from .dynamic_programming import DpTable, pmf_dp, statistic_trunc

__all__ = ["DpTable", "pmf_dp", "statistic_trunc"]
