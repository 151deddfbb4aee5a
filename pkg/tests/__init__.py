"""Immune-system toolkit tests."""
