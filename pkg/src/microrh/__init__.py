"""Robust rolling-horizon energy management for residential microgrids."""

__version__ = "0.1.0"
