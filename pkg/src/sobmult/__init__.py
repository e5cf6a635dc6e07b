"""Densely defined multiplication operators on W^{1,2}[0,1]."""

__version__ = "0.1.0"
