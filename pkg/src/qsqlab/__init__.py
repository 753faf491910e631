"""Desk-scale simulation lab for quantum statistical query learning."""

__version__ = "0.1.0"
