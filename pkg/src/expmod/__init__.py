"""Expansion-modification random substitution dynamics."""
__version__ = "0.1.0"
