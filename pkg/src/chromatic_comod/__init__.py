"""Exact computations with BP_*BP-comodules and their Landweber exact base changes."""

__version__ = "0.1.0"
