"""Weighted paging where the future is known only within each weight class."""

__version__ = "0.1.0"
