"""Inkjet printer model identification from droplet-pattern statistics."""

__version__ = "0.1.0"
