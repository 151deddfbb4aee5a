"""Artificial immune system algorithms with a deterministic batch CLI."""

__version__ = "0.1.0"
