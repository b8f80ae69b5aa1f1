"""Turing machines, a universal calculator and self-modifying alpha-machines,
with networks of machines under random context events."""

__version__ = "0.1.0"
