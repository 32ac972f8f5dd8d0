"""Robust contracts with deferred inspection: synthesis, verification, experiments."""

__version__ = "0.1.0"
