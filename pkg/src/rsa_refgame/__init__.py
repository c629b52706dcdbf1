"""Rational Speech Act reference games scored against language-model preferences."""

__version__ = "0.1.0"
