"""Markerless multi-camera motion-capture processing toolkit."""

__version__ = "0.1.0"
